#pragma once

#include "grid_field.hpp"
#include "model_params.hpp"
#include "test_function.hpp"
#include "types.hpp"

#include <string>
#include <vector>

namespace occ {

// Observation window [T t1, T t2] for Psi(x, s) = phi(x) 1{T t1 <= s <= T t2}.
struct TimeWindow
{
  double t1 = 0.0, t2 = 1.0, T = 1.0;

  double a() const { return T * t1; }
  double b() const { return T * t2; }
  double width() const { return T * (t2 - t1); }
  void   validate() const;
};

struct GridSpec
{
  int    n = 1024;               // points per axis
  double L = 256.0;              // torus side
  double steps_per_unit = 64.0;  // time nodes per unit of (unscaled) time
  int    min_steps = 32;         // per smooth time segment

  // L >= 20 T^{1/alpha} + 10 sigma rounded up to a power of two, dx <= sigma/4
  static GridSpec heuristic(ModelParams const &params, double horizon, double sigma);
};

// Fields on a time grid. For the solvers below time runs backwards from
// the end of the window: the field at tau describes a particle started at
// absolute time T t2 - tau, so tau = T t2 is a particle started at 0.
struct SpaceTimeField
{
  std::vector<double>    times;
  std::vector<GridField> fields;
  std::vector<std::string> warnings;

  GridField const &back() const { return fields.back(); }
};

// n(tau) = int_0^tau T_{tau-s} Psi(., T t2 - s) ds, exact in Fourier.
// The last field is n_T(x) = int_{T t1}^{T t2} T_u phi(x) du.
SpaceTimeField n_psi(TestFunction const &phi, TimeWindow const &win, ModelParams const &params, GridSpec const &grid);

struct SolveReport
{
  SpaceTimeField           field;
  int                      iterations = 0;
  double                   residual = 0.0;
  std::vector<double>      residual_history;
};

// v = int T_{t-s} [Psi (1 - v) - (V/2) v^2] ds by global Picard sweeps.
SolveReport v_psi_solve(TestFunction const &phi, TimeWindow const &win, ModelParams const &params, GridSpec const &grid,
                        double tol = 1e-10, int max_iter = 50);

// x -> E (int_{T t1}^{T t2} <N^x_s, phi> ds)^2 (no F_T scaling), with the
// first moment and a Richardson error estimate from a halved time step.
struct SecondMoment
{
  GridField second;
  GridField mean;
  GridField error;
};

SecondMoment second_moment_single_ancestor(TestFunction const &phi, TimeWindow const &win, ModelParams const &params,
                                           GridSpec const &grid);

enum class Lambda0
{
  poisson,     // Palm clan = the atom itself
  equilibrium, // atom plus Riesz density (V c_{alpha,d} / 2) |y|^{alpha-d}
};

struct ExactL
{
  double L = 0.0;
  double J1 = 0.0, J2 = 0.0, J3 = 0.0;
  double J1_fstar = 0.0; // J1 through the real-space correlation identity
  double F = 0.0;
};

// E(<X_T(t2), phi> - <X_T(t1), phi>)^2 = J1 - J2 + J3.
ExactL exact_L(double t1, double t2, double T, TestFunction const &phi, Lambda0 spec, ModelParams const &params);

// Fourier-side pieces, unscaled by F_T, exposed for grid cross-checks.
double fourier_J2_raw(TimeWindow const &win, TestFunction const &phi, ModelParams const &params);
double fourier_J3_raw(TimeWindow const &win, TestFunction const &phi, ModelParams const &params);

struct ClanLaplace
{
  double H = 0.0;             // exp{-V int_0^t (T_s w(s))(x) ds}
  double H_feynman_kac = 0.0; // E exp{-V int_0^t w(Y_s, s) ds} along the spine
  double first_order = 0.0;   // V int_0^t T_{2s} f(x) ds
  double H_error = 0.0;       // Richardson estimates
  double H_fk_error = 0.0;
  int    iterations = 0;
};

ClanLaplace eq_clan_laplace(TestFunction const &f, double t, Point const &x, ModelParams const &params,
                            GridSpec const &grid, double tol = 1e-12, int max_iter = 60);

struct RieszValue
{
  double value = 0.0;   // radial quadrature in real space
  double fourier = 0.0; // (V/2) (2 pi)^{-d} int f^(k) e^{ikx} |k|^{-alpha} dk
};

// (V c_{alpha,d} / 2) int f(y) |x - y|^{alpha-d} dy
RieszValue equilibrium_intensity(TestFunction const &f, Point const &x, ModelParams const &params);

struct TauberianRow
{
  double t = 0.0;
  double palm = 0.0;        // t^{d/alpha-1} <p_t, Lambda_0>
  double atom = 0.0;        // t^{d/alpha-1} p_t(0)
  double ball = 0.0;        // t^{-alpha} Lambda_0(B(t)) by quadrature
  double ball_closed = 0.0; // same, closed form
};

std::vector<TauberianRow> tauberian_c_alpha_check(Lambda0 spec, ModelParams const &params,
                                                  std::vector<double> const &t_grid);

// Stable evaluations of (1 - e^{-mu})/mu and friends.
double phi1(double mu);
double etd_psi(double mu);   // int_0^1 x e^{-mu x} dx
double psi_tilde(double mu); // (mu - 1 + e^{-mu}) / mu^2
double chi_fn(double mu);    // (1 - 2 phi1(mu) + phi1(2 mu)) / mu^2

} // namespace occ
