#include "occ/limit_gaussian.hpp"
#include "occ/quadrature.hpp"
#include "occ/stable_motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace occ {

namespace {

constexpr double pi = std::numbers::pi;

// (z + delta)^h - z^h
double forward_difference(double z, double delta, double h)
{
  if (z == 0.0) return std::pow(delta, h);
  return std::pow(z, h) * std::expm1(h * std::log1p(delta / z));
}

} // namespace

void CovarianceSpec::validate() const
{
  if (!(h > 0.0 && h < 2.0)) throw DomainError("h must lie in (0, 2)");
  if (!(A > 0.0)) throw DomainError("A must be > 0");
  if (!(B >= 0.0)) throw DomainError("B must be >= 0");
  if (B > 0.0 && h == 1.0) throw DomainError("c_h is degenerate at h = 1");
}

Matrix covariance_matrix(CovarianceSpec const &spec, Vector const &times)
{
  spec.validate();
  Eigen::Index const n = times.size();
  Matrix             K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = cov_mixture(times[i], times[j], spec);
  return K;
}

double riesz_constant(int d, double alpha)
{
  if (!(alpha < d)) throw DomainError("Riesz constant needs alpha < d");
  return std::tgamma(0.5 * (d - alpha)) / (std::pow(2.0, alpha) * std::pow(pi, 0.5 * d) * std::tgamma(0.5 * alpha));
}

Constants constants(ModelParams const &params)
{
  if (!params.is_intermediate() || !(params.V > 0.0))
    throw DomainError("constants need alpha < d < 2 alpha and V > 0");
  int const    d = params.d;
  double const a = params.alpha, V = params.V, h = params.h();
  Constants    c;
  c.K1 = V * std::tgamma(2.0 - h) /
         (std::pow(2.0, d - 1) * std::pow(pi, 0.5 * d) * a * std::tgamma(0.5 * d) * h * (h - 1.0));
  c.K2 = 1.0 / (h * (h - 1.0));
  c.c_alpha_d = riesz_constant(d, a);
  c.H_eq_closed = V * std::tgamma(d / a - 1.0) / (std::pow(2.0, d) * std::pow(pi, 0.5 * d) * std::tgamma(0.5 * d) * a);

  // int_0^inf p_1(r) r^{alpha-1} dr with r = s^{1/alpha}, which removes the
  // singular weight; beyond S the tail p_1 ~ r^{-d-alpha} is integrated exactly.
  auto         g = [&](double s) { return radial_profile_p1(params, std::pow(s, 1.0 / a)); };
  double const S = 1e8;
  quad::Result body = quad::gk(g, 0.0, 1.0, 1e-13);
  quad::Result rest = quad::log_scale(g, 1.0, S, 1e-13);
  double const tail = g(S) * S * a / d;
  double const moment = (body.value + rest.value + tail) / a;
  quad::require({moment, (body.error + rest.error) / a}, 1e-10, "c_alpha quadrature");

  c.c_alpha = a * moment;
  double const omega = surface_area(d);
  c.H_eq_quadrature = 0.5 * V * c.c_alpha_d * omega * moment;
  c.ball_constant = 0.5 * V * c.c_alpha_d * omega / a;
  return c;
}

Matrix cholesky_with_jitter(Matrix const &K, double &jitter)
{
  jitter = 0.0;
  double const scale = K.diagonal().mean();
  for (double rel = 0.0; rel <= 1e-10 * 1.0000001; rel = rel == 0.0 ? 1e-14 : rel * 10.0) {
    Matrix M = K;
    M.diagonal().array() += rel * scale;
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
      jitter = rel * scale;
      return llt.matrixL();
    }
  }
  throw NumericError("covariance factorization failed after maximal jitter (matrix not positive semidefinite)");
}

PathSample sample_paths(CovarianceSpec const &spec, int n_paths, Rng &rng)
{
  spec.validate();
  if (n_paths < 0) throw DomainError("number of paths must be >= 0");
  Vector const &t = spec.grid;
  std::vector<double> sorted(t.data(), t.data() + t.size());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw DomainError("time grid has duplicates");

  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t[i] < 0.0) throw DomainError("time grid must be >= 0");
    if (t[i] > 0.0) live.push_back(i);
  }
  Vector tl(static_cast<Eigen::Index>(live.size()));
  for (size_t i = 0; i < live.size(); ++i) tl[static_cast<Eigen::Index>(i)] = t[live[i]];

  PathSample out;
  out.t = t;
  out.paths = Matrix::Zero(t.size(), n_paths);
  if (live.empty()) return out;
  Matrix const Lf = cholesky_with_jitter(covariance_matrix(spec, tl), out.jitter);
  Matrix       Z(tl.size(), n_paths);
  for (Eigen::Index j = 0; j < n_paths; ++j)
    for (Eigen::Index i = 0; i < tl.size(); ++i) Z(i, j) = std_normal(rng);
  Matrix const X = Lf.triangularView<Eigen::Lower>() * Z;
  for (size_t i = 0; i < live.size(); ++i) out.paths.row(live[i]) = X.row(static_cast<Eigen::Index>(i));
  return out;
}

double increment_correlation(double u, double v, double s, double t, double tau, CovarianceSpec const &spec)
{
  spec.validate();
  if (!(0.0 <= u && u < v && v <= s && s < t)) throw DomainError("need 0 <= u < v <= s < t");
  if (!(tau >= 0.0)) throw DomainError("lag must be >= 0");
  double const h = spec.h, delta = t - s, sp = s + tau;
  // Terms depending on one argument only cancel in the double difference.
  double const sum_part = forward_difference(v + sp, delta, h) - forward_difference(u + sp, delta, h);
  double const diff_part = forward_difference(sp - v, delta, h) - forward_difference(sp - u, delta, h);
  double const sgn = h > 1.0 ? 1.0 : -1.0;
  double       r = -0.5 * spec.A * (sum_part + diff_part);
  if (spec.B != 0.0) r += spec.B * sgn * sum_part;
  return r;
}

} // namespace occ
