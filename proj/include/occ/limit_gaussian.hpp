#pragma once

#include "model_params.hpp"
#include "rng.hpp"
#include "types.hpp"

#include <cmath>

namespace occ {

// C_h(s,t) = s^h + t^h - [(s+t)^h + |s-t|^h] / 2
template <typename Scalar>
Scalar cov_subfbm(Scalar s, Scalar t, Scalar h)
{
  using std::abs, std::pow;
  if (!(h > Scalar(0) && h < Scalar(2))) throw DomainError("h must lie in (0, 2)");
  if (s < Scalar(0) || t < Scalar(0)) throw DomainError("covariance times must be >= 0");
  return pow(s, h) + pow(t, h) - Scalar(0.5) * (pow(s + t, h) + pow(abs(s - t), h));
}

// c_h(s,t) = sgn(h-1) [(s+t)^h - s^h - t^h]
template <typename Scalar>
Scalar cov_ch(Scalar s, Scalar t, Scalar h)
{
  using std::pow;
  if (!(h > Scalar(0) && h < Scalar(2))) throw DomainError("h must lie in (0, 2)");
  if (h == Scalar(1)) throw DomainError("c_h is degenerate at h = 1");
  if (s < Scalar(0) || t < Scalar(0)) throw DomainError("covariance times must be >= 0");
  Scalar const sgn = h > Scalar(1) ? Scalar(1) : Scalar(-1);
  return sgn * (pow(s + t, h) - (pow(s, h) + pow(t, h)));
}

struct CovarianceSpec
{
  double h = 1.5;
  double A = 1.0;
  double B = 0.0;
  Vector grid; // time points in [0, 1] for sampling

  void validate() const;
};

// e = A C_h + B c_h
template <typename Scalar>
Scalar cov_mixture(Scalar s, Scalar t, CovarianceSpec const &spec)
{
  spec.validate();
  Scalar const h = Scalar(spec.h);
  Scalar       e = Scalar(spec.A) * cov_subfbm(s, t, h);
  if (spec.B != 0.0) e += Scalar(spec.B) * cov_ch(s, t, h);
  return e;
}

Matrix covariance_matrix(CovarianceSpec const &spec, Vector const &times);

struct Constants
{
  double K1 = 0.0;
  double K2 = 0.0;
  double c_alpha_d = 0.0;       // Riesz constant
  double H_eq_closed = 0.0;     // closed-form route
  double H_eq_quadrature = 0.0; // radial quadrature of the clan intensity against p_1
  double c_alpha = 0.0;         // alpha int_0^inf p_1(r) r^{alpha-1} dr
  double ball_constant = 0.0;   // r^{-alpha} Lambda_0(B(r)) for the equilibrium clan
};

double    riesz_constant(int d, double alpha);
Constants constants(ModelParams const &params);

struct PathSample
{
  Vector t;
  Matrix paths; // rows = time points, cols = paths
  double jitter = 0.0;
};

PathSample sample_paths(CovarianceSpec const &spec, int n_paths, Rng &rng);

// Cholesky factor of the covariance on the nonzero times, with the
// escalating diagonal jitter policy. Throws NumericError if it fails.
Matrix cholesky_with_jitter(Matrix const &K, double &jitter);

// R(u, v, s+tau, t+tau), computed without forming the large powers.
double increment_correlation(double u, double v, double s, double t, double tau, CovarianceSpec const &spec);

} // namespace occ
