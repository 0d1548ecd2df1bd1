#include "occ/stable_motion.hpp"
#include "occ/quadrature.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace occ {

namespace {

constexpr double pi = std::numbers::pi;

// Kanter's representation of the positive beta-stable law.
double kanter(double beta, double U, double E)
{
  double const logS = std::log(std::sin(beta * U)) - std::log(std::sin(U)) / beta +
                      (1.0 - beta) / beta * (std::log(std::sin((1.0 - beta) * U)) - std::log(E));
  return std::exp(logS);
}

double omega_kernel(int d, double x)
{
  switch (d) {
  case 1: return std::cos(x);
  case 2: return std::cyl_bessel_j(0.0, x);
  default: return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
  }
}

// Cutoff beyond which k^{d-1} exp(-k^alpha) is below 1e-18.
double frequency_cutoff(int d, double alpha)
{
  double K = std::pow(41.5, 1.0 / alpha);
  for (int i = 0; i < 8; ++i) K = std::pow(41.5 + (d - 1) * std::log(std::max(K, 1.0)), 1.0 / alpha);
  return K;
}

bool closed_form(double alpha) { return alpha == 2.0 || alpha == 1.0; }

double p1_closed(int d, double alpha, double r)
{
  if (alpha == 2.0) return std::pow(4.0 * pi, -0.5 * d) * std::exp(-0.25 * r * r);
  double const e = 0.5 * (d + 1);
  return std::tgamma(e) * std::pow(pi, -e) * std::pow(1.0 + r * r, -e);
}

// Memoized profile: spline of log p_1 on a uniform asinh(r) grid up to
// r_switch, the large-r expansion beyond it.
struct Profile
{
  int                                                          d;
  double                                                       alpha;
  double                                                       r_switch = 0.0;
  bool                                                         series_tail = false;
  double                                                       p_edge = 0.0;
  std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline;

  Profile(int d_, double alpha_)
    : d(d_)
    , alpha(alpha_)
  {
    static constexpr double candidates[] = {1.5, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64};
    r_switch = 64.0;
    for (double r : candidates) {
      double v;
      // demand the expansion also holds a bit further in, so the switch is safe
      if (p1_series(d, alpha, r, v) && p1_series(d, alpha, 0.9 * r, v)) {
        r_switch = r;
        series_tail = true;
        break;
      }
    }
    int const           nodes = 1025;
    double const        umax = std::asinh(r_switch);
    double const        du = umax / (nodes - 1);
    std::vector<double> logp(nodes);
    for (int i = 0; i < nodes; ++i) {
      double const r = std::sinh(i * du);
      double const p = p1_quadrature(d, alpha, r);
      if (!(p > 0.0)) throw NumericError("stable density quadrature returned a non-positive value");
      logp[i] = std::log(p);
    }
    p_edge = std::exp(logp.back());
    spline = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      logp.begin(), logp.end(), 0.0, du, 0.0);
  }

  double operator()(double r) const
  {
    if (r <= r_switch) return std::exp((*spline)(std::asinh(r)));
    double v;
    if (series_tail && p1_series(d, alpha, r, v)) return v;
    // extrapolation guard with the known tail order
    return p_edge * std::pow(r_switch / r, d + alpha);
  }
};

Profile const &profile(int d, double alpha)
{
  static std::mutex                                          mtx;
  static std::map<std::pair<int, double>, std::unique_ptr<Profile>> cache;
  std::lock_guard<std::mutex>                                lock(mtx);
  auto &slot = cache[{d, alpha}];
  if (!slot) slot = std::make_unique<Profile>(d, alpha);
  return *slot;
}

} // namespace

double surface_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }

double positive_stable(double beta, Rng &rng)
{
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("subordinator index must lie in (0, 1]");
  if (beta == 1.0) return 1.0;
  double const U = pi * uniform_open(rng);
  double const E = exponential(rng, 1.0);
  return kanter(beta, U, E);
}

Point stable_increment(ModelParams const &params, double dt, Rng &rng)
{
  if (!(dt > 0.0)) throw DomainError("stable increment needs dt > 0");
  if (!(params.alpha > 0.0 && params.alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
  int const d = params.d;
  Point     x(d);
  for (int i = 0; i < d; ++i) x[i] = std_normal(rng);
  double scale;
  if (params.alpha == 2.0) {
    scale = std::sqrt(2.0 * dt);
  } else if (params.alpha == 1.0) {
    // multivariate Cauchy: Gaussian over an independent half-normal
    scale = dt / std::abs(std_normal(rng));
  } else {
    double const S = positive_stable(0.5 * params.alpha, rng);
    scale = std::pow(dt, 1.0 / params.alpha) * std::sqrt(2.0 * S);
  }
  return x * scale;
}

IncrementSampler::IncrementSampler(ModelParams const &params)
  : params_(params)
{
  params_.validate();
}

double IncrementSampler::scale(double dt)
{
  if (dt != last_dt_) {
    if (!(dt > 0.0)) throw DomainError("stable increment needs dt > 0");
    last_dt_ = dt;
    last_scale_ = params_.alpha == 2.0 ? std::sqrt(2.0 * dt) : std::pow(dt, 1.0 / params_.alpha);
  }
  return last_scale_;
}

Point IncrementSampler::operator()(double dt, Rng &rng)
{
  double const s = scale(dt);
  int const    d = params_.d;
  Point        x(d);
  for (int i = 0; i < d; ++i) x[i] = std_normal(rng);
  if (params_.alpha == 2.0) return x * s;
  if (params_.alpha == 1.0) return x * (dt / std::abs(std_normal(rng)));
  double const S = positive_stable(0.5 * params_.alpha, rng);
  return x * (s * std::sqrt(2.0 * S));
}

double p1_origin(int d, double alpha)
{
  return surface_area(d) * std::tgamma(d / alpha) / (alpha * std::pow(2.0 * pi, d));
}

double p1_quadrature(int d, double alpha, double r)
{
  if (!(r >= 0.0)) throw DomainError("radius must be >= 0");
  double const K = frequency_cutoff(d, alpha);
  auto         f = [=](double k) {
    double const ka = alpha == 2.0 ? k * k : std::pow(k, alpha);
    return std::pow(k, d - 1) * omega_kernel(d, k * r) * std::exp(-ka);
  };
  double const width = r > 0.0 ? std::min(pi / r, K / 16.0) : K / 16.0;
  int const    pieces = static_cast<int>(std::ceil(K / width));

  // the first piece carries the k^alpha cusp at the origin
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double                                                  err = 0.0, l1 = 0.0;
  double sum = ts.integrate(f, 0.0, width, 1e-14, &err, &l1);
  double abs_sum = std::abs(sum), err_sum = err;
  for (int i = 1; i < pieces; ++i) {
    // shallow depth: Bessel evaluation noise caps the attainable accuracy
    quad::Result const piece = quad::gk(f, i * width, std::min((i + 1) * width, K), 1e-11, 6);
    sum += piece.value;
    abs_sum += std::abs(piece.value);
    err_sum += piece.error;
  }
  double const value = surface_area(d) / std::pow(2.0 * pi, d) * sum;
  if (!(err_sum <= 1e-9 * std::abs(sum) + 1e-12 * abs_sum))
    throw NumericError("stable density quadrature did not converge at r=" + std::to_string(r));
  return value;
}

bool p1_series(int d, double alpha, double r, double &value, double rel_tol)
{
  if (alpha >= 2.0 || !(r > 0.0)) return false;
  double const logr = std::log(r);
  double       sum = 0.0, prev_env = INFINITY;
  for (int n = 1; n <= 400; ++n) {
    double const an = alpha * n;
    double const logenv = (-0.5 * d - 1.0) * std::log(pi) - std::lgamma(n + 1.0) + an * std::log(2.0) +
                          std::lgamma(0.5 * (d + an)) + std::lgamma(1.0 + 0.5 * an) - (d + an) * logr;
    double const env = std::exp(logenv);
    double const term = (n % 2 == 1 ? 1.0 : -1.0) * env * std::sin(0.5 * pi * an);
    sum += term;
    if (n >= 2 && env < rel_tol * std::abs(sum)) {
      value = sum;
      return sum > 0.0;
    }
    if (n >= 3 && env > prev_env) return false; // asymptotic regime exhausted
    prev_env = env;
  }
  return false;
}

double radial_profile_p1(ModelParams const &params, double r)
{
  if (!(r >= 0.0)) throw DomainError("radius must be >= 0");
  if (closed_form(params.alpha)) return p1_closed(params.d, params.alpha, r);
  return profile(params.d, params.alpha)(r);
}

double density_p_radial(ModelParams const &params, double t, double r)
{
  if (!(t > 0.0)) throw DomainError("density time must be > 0");
  double const s = std::pow(t, -1.0 / params.alpha);
  return std::pow(s, params.d) * radial_profile_p1(params, r * s);
}

double density_p(ModelParams const &params, double t, Point const &x)
{
  return density_p_radial(params, t, x.norm());
}

} // namespace occ
