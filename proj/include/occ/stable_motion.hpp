#pragma once

#include "grid_field.hpp"
#include "model_params.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace occ {

// One-sided stable variable with Laplace transform exp(-u^beta), beta in (0,1].
double positive_stable(double beta, Rng &rng);

// Increment with characteristic function exp(-dt |z|^alpha).
// Brownian motion run at the clock 2 S, S the alpha/2 subordinator.
Point stable_increment(ModelParams const &params, double dt, Rng &rng);

// Same law as stable_increment, with the per-dt scale cached for the common
// case of repeated fixed-step draws.
class IncrementSampler
{
public:
  explicit IncrementSampler(ModelParams const &params);
  Point operator()(double dt, Rng &rng);

private:
  ModelParams params_;
  double      last_dt_ = -1.0, last_scale_ = 0.0;
  double      scale(double dt);
};

// p_1 at any point of norm r.
double radial_profile_p1(ModelParams const &params, double r);

// p_t(x) = t^{-d/alpha} p_1(t^{-1/alpha} x)
double density_p(ModelParams const &params, double t, Point const &x);
double density_p_radial(ModelParams const &params, double t, double r);

// Building blocks exposed for checking.
double p1_origin(int d, double alpha);
double p1_quadrature(int d, double alpha, double r);
// Large-r expansion; returns false when it does not reach rel_tol at r.
bool   p1_series(int d, double alpha, double r, double &value, double rel_tol = 1e-14);
double surface_area(int d); // of the unit sphere in R^d

} // namespace occ
