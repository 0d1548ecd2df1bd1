#include "occ/analytic.hpp"
#include "occ/limit_gaussian.hpp"
#include "occ/quadrature.hpp"
#include "occ/stable_motion.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace occ {

namespace {

constexpr double pi = std::numbers::pi;

// ETD-trapezoid quadrature of I(tau) = int_0^tau T_{tau-s} G(s) ds. G is
// taken linear on each step; the semigroup factor is integrated exactly.
class Etd
{
public:
  Etd(Spectral const &spec, double alpha, std::vector<double> nodes, std::vector<char> jump)
    : spec_(spec)
    , lambda_(spec.lambda(alpha))
    , nodes_(std::move(nodes))
    , jump_(std::move(jump))
  {
    jump_.resize(nodes_.size(), 0);
  }

  struct Weights
  {
    Vector E, w0, w1;
  };

  Weights const &weights(double h)
  {
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second;
    Weights      W;
    Eigen::Index n = lambda_.size();
    W.E.resize(n);
    W.w0.resize(n);
    W.w1.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double const mu = h * lambda_[i];
      double const p = etd_psi(mu);
      W.E[i] = std::exp(-mu);
      W.w0[i] = h * p;
      W.w1[i] = h * (phi1(mu) - p);
    }
    return cache_.emplace(h, std::move(W)).first->second;
  }

  // src(interval, node) returns the real-space source at that node as seen
  // from inside the given step. Integrates over nodes [k0, k1] starting from
  // the Fourier state I at k0; I is left at k1.
  template <typename Src>
  std::vector<Vector> integrate(Src &&src, size_t k0, size_t k1, CVector &I)
  {
    std::vector<Vector> out(k1 - k0 + 1);
    out[0] = spec_.inverse(I);
    CVector Gl = spec_.forward(src(static_cast<int>(k0), static_cast<int>(k0)));
    for (size_t j = k0; j < k1; ++j) {
      Weights const &W = weights(nodes_[j + 1] - nodes_[j]);
      CVector        Gr = spec_.forward(src(static_cast<int>(j), static_cast<int>(j + 1)));
      I = W.E.cwiseProduct(I) + W.w0.cwiseProduct(Gl) + W.w1.cwiseProduct(Gr);
      out[j + 1 - k0] = spec_.inverse(I);
      if (j + 1 < k1 && jump_[j + 1])
        Gl = spec_.forward(src(static_cast<int>(j + 1), static_cast<int>(j + 1)));
      else
        Gl = std::move(Gr);
    }
    return out;
  }

  template <typename Src>
  std::vector<Vector> integrate(Src &&src)
  {
    CVector I = CVector::Zero(lambda_.size());
    return integrate(src, 0, nodes_.size() - 1, I);
  }

  Vector const &lambda() const { return lambda_; }
  std::vector<double> const &nodes() const { return nodes_; }

private:
  Spectral const           &spec_;
  Vector                    lambda_;
  std::vector<double>       nodes_;
  std::vector<char>         jump_;
  std::map<double, Weights> cache_;
};

struct PicardStats
{
  int                 iterations = 0;
  double              residual = 0.0;
  std::vector<double> history; // worst slab change per sweep
};

// Solves u = free + I[src(u)] by Picard sweeps on successive time slabs of
// length about slab. Each slab is short enough for the sweep to contract; the
// Fourier state carries the history across slab boundaries.
template <typename Src>
PicardStats picard_slabs(Etd &etd, std::vector<Vector> &u, std::vector<Vector> const *free, Src &&src, double slab,
                         double tol, int max_iter)
{
  auto const  &t = etd.nodes();
  size_t const N = t.size();
  PicardStats  st;
  CVector      I = CVector::Zero(etd.lambda().size());
  if (free) u[0] = (*free)[0];
  for (size_t k0 = 0; k0 + 1 < N;) {
    size_t k1 = k0 + 1;
    while (k1 + 1 < N && t[k1 + 1] - t[k0] <= slab) ++k1;
    double  change = INFINITY;
    int     it = 0;
    CVector Iend;
    for (; it < max_iter && change >= tol; ++it) {
      CVector    Iw = I;
      auto const out = etd.integrate(src, k0, k1, Iw);
      change = 0.0;
      for (size_t k = k0 + 1; k <= k1; ++k) {
        Vector nk = free ? Vector((*free)[k] + out[k - k0]) : out[k - k0];
        change = std::max(change, (nk - u[k]).cwiseAbs().maxCoeff());
        u[k] = std::move(nk);
      }
      if (!std::isfinite(change)) break;
      if (st.history.size() <= static_cast<size_t>(it)) st.history.push_back(0.0);
      st.history[it] = std::max(st.history[it], change);
      Iend = std::move(Iw);
    }
    st.iterations = std::max(st.iterations, it);
    st.residual = std::max(st.residual, change);
    if (!(change < tol)) {
      st.residual = std::isfinite(change) ? change : INFINITY;
      return st;
    }
    I = std::move(Iend);
    k0 = k1;
  }
  return st;
}

// Uniform nodes on each segment [breaks[i], breaks[i+1]].
std::vector<double> segment_nodes(std::vector<double> const &breaks, GridSpec const &g, int refine)
{
  std::vector<double> nodes{breaks.front()};
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    double const len = breaks[i + 1] - breaks[i];
    if (!(len > 0.0)) continue;
    int const m = refine * std::max(g.min_steps, static_cast<int>(std::ceil(len * g.steps_per_unit)));
    for (int k = 1; k <= m; ++k) nodes.push_back(k == m ? breaks[i + 1] : breaks[i] + len * k / m);
  }
  return nodes;
}

GridField sample_phi(TestFunction const &phi, GridSpec const &g)
{
  return GridField::sample(phi.dim(), g.n, g.L, [&](Point const &x) { return phi(x); });
}

GridField make_field(GridSpec const &g, int d, Vector v)
{
  GridField f(d, g.n, g.L);
  f.values = std::move(v);
  return f;
}

void grid_warnings(std::vector<std::string> &w, GridSpec const &g, ModelParams const &p, double horizon, double sigma)
{
  if (g.L / g.n > 0.5 * sigma) w.push_back("grid step exceeds half the test-function width");
  if (g.L < 20.0 * std::pow(horizon, 1.0 / p.alpha) + 10.0 * sigma)
    w.push_back("torus side below 20 T^{1/alpha} + 10 sigma; wrap-around bias possible");
}

// Exact remaining-horizon first moment at the given nodes.
std::vector<Vector> first_moment_nodes(CVector const &phi_hat, Vector const &lambda, std::vector<double> const &nodes,
                                       double width, Spectral const &spec)
{
  std::vector<Vector> out;
  out.reserve(nodes.size());
  for (double tau : nodes) {
    double const m = std::min(tau, width);
    CVector      c(phi_hat.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      double const l = lambda[i];
      c[i] = phi_hat[i] * (std::exp(-l * (tau - m)) * m * phi1(l * m));
    }
    out.push_back(spec.inverse(c));
  }
  return out;
}

// integral over (0, inf) of f(k) k^{d-1}, with f ~ k^{beta-d+1} as k -> 0
template <typename F>
double radial_k(F &&f, int d, double beta, double k_lo, double k_hi)
{
  auto         g = [&](double k) { return f(k) * std::pow(k, d - 1); };
  quad::Result r = quad::log_scale(g, k_lo, k_hi, 1e-12);
  quad::require(r, 1e-8, "radial Fourier integral");
  double const low = g(k_lo) * k_lo / (beta + 1.0);
  return r.value + low;
}

double k_lower(TimeWindow const &win, double alpha, double sigma)
{
  return std::min(1e-7 / sigma, std::pow(1e-10 / std::max(win.b(), 1.0), 1.0 / alpha));
}

} // namespace

double phi1(double mu)
{
  if (std::abs(mu) < 1e-4) return 1.0 - mu / 2.0 + mu * mu / 6.0 - mu * mu * mu / 24.0;
  return -std::expm1(-mu) / mu;
}

double etd_psi(double mu)
{
  if (std::abs(mu) < 0.1) {
    // sum_k (-mu)^k / (k! (k+2))
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < 14; ++k) {
      sum += term / (k + 2);
      term *= -mu / (k + 1);
    }
    return sum;
  }
  return (1.0 - std::exp(-mu) * (1.0 + mu)) / (mu * mu);
}

double psi_tilde(double mu)
{
  if (std::abs(mu) < 0.1) {
    // sum_k (-mu)^k / (k+2)!
    double term = 0.5, sum = 0.0;
    for (int k = 0; k < 14; ++k) {
      sum += term;
      term *= -mu / (k + 3);
    }
    return sum;
  }
  return (mu - 1.0 + std::exp(-mu)) / (mu * mu);
}

double chi_fn(double mu)
{
  if (std::abs(mu) < 1.0) {
    // sum_{k>=2} (-mu)^{k-2} (2^k - 2) / (k+1)!
    double sum = 0.0, pw = 1.0, fact = 6.0, two = 4.0;
    for (int k = 2; k < 40; ++k) {
      sum += pw * (two - 2.0) / fact;
      pw *= -mu;
      two *= 2.0;
      fact *= (k + 2);
    }
    return sum;
  }
  return (1.0 - 2.0 * phi1(mu) + phi1(2.0 * mu)) / (mu * mu);
}

void TimeWindow::validate() const
{
  if (!(T > 0.0)) throw DomainError("T must be > 0");
  if (!(0.0 <= t1 && t1 <= t2 && t2 <= 1.0)) throw DomainError("need 0 <= t1 <= t2 <= 1");
}

GridSpec GridSpec::heuristic(ModelParams const &params, double horizon, double sigma)
{
  GridSpec     g;
  double const want = 20.0 * std::pow(horizon, 1.0 / params.alpha) + 10.0 * sigma;
  g.L = 1.0;
  while (g.L < want) g.L *= 2.0;
  g.n = 2;
  while (g.L / g.n > 0.25 * sigma) g.n *= 2;
  return g;
}

SpaceTimeField n_psi(TestFunction const &phi, TimeWindow const &win, ModelParams const &params, GridSpec const &grid)
{
  win.validate();
  params.validate();
  Spectral       spec(params.d, grid.n, grid.L);
  GridField      ph = sample_phi(phi, grid);
  SpaceTimeField out;
  out.times = segment_nodes({0.0, win.width(), win.b()}, grid, 1);
  grid_warnings(out.warnings, grid, params, win.b(), phi.sigma);
  auto const vals = first_moment_nodes(spec.forward(ph.values), spec.lambda(params.alpha), out.times, win.width(), spec);
  for (auto const &v : vals) out.fields.push_back(make_field(grid, params.d, v));
  return out;
}

SolveReport v_psi_solve(TestFunction const &phi, TimeWindow const &win, ModelParams const &params, GridSpec const &grid,
                        double tol, int max_iter)
{
  win.validate();
  params.validate();
  Spectral            spec(params.d, grid.n, grid.L);
  GridField           ph = sample_phi(phi, grid);
  double const        w = win.width();
  std::vector<double> nodes = segment_nodes({0.0, w, win.b()}, grid, 1);
  std::vector<char>   jump(nodes.size(), 0);
  for (size_t k = 0; k < nodes.size(); ++k) jump[k] = nodes[k] == w;
  Etd          etd(spec, params.alpha, nodes, jump);
  double const V = params.V;

  size_t const        N = nodes.size();
  std::vector<Vector> u(N, Vector::Zero(ph.size()));
  auto                src = [&](int interval, int node) -> Vector {
    bool const    active = nodes[interval + 1] <= w;
    Vector const &uk = u[node];
    Vector        g = -0.5 * V * uk.array().square().matrix();
    if (active) g += ph.values.cwiseProduct(Vector::Ones(uk.size()) - uk);
    return g;
  };
  // v stays in [0, 1], so the source is Lipschitz with constant max(phi) + V
  double const lip = ph.values.maxCoeff() + V;
  double const slab = lip > 0.0 ? 0.5 / lip : win.b();
  PicardStats  st = picard_slabs(etd, u, nullptr, src, slab, tol, max_iter);
  SolveReport  rep;
  rep.iterations = st.iterations;
  rep.residual = st.residual;
  rep.residual_history = st.history;
  if (!(st.residual < tol))
    throw NumericError("Picard iteration did not converge: residual " + std::to_string(rep.residual) + " after " +
                       std::to_string(rep.iterations) + " sweeps");

  SpaceTimeField &f = rep.field;
  f.times = nodes;
  grid_warnings(f.warnings, grid, params, win.b(), phi.sigma);
  auto const n = first_moment_nodes(spec.forward(ph.values), etd.lambda(), nodes, w, spec);
  double     worst_range = 0.0, worst_n = 0.0;
  for (size_t k = 0; k < N; ++k) {
    worst_range = std::max({worst_range, -u[k].minCoeff(), u[k].maxCoeff() - 1.0});
    worst_n = std::max(worst_n, (u[k] - n[k]).maxCoeff());
    f.fields.push_back(make_field(grid, params.d, u[k]));
  }
  if (worst_range > 1e-9) f.warnings.push_back("solution leaves [0, 1] by " + std::to_string(worst_range));
  if (worst_n > 1e-9) f.warnings.push_back("solution exceeds the first moment by " + std::to_string(worst_n));
  return rep;
}

SecondMoment second_moment_single_ancestor(TestFunction const &phi, TimeWindow const &win, ModelParams const &params,
                                           GridSpec const &grid)
{
  win.validate();
  params.validate();
  Spectral      spec(params.d, grid.n, grid.L);
  GridField     ph = sample_phi(phi, grid);
  CVector const ph_hat = spec.forward(ph.values);
  double const  w = win.width(), V = params.V;

  auto solve = [&](int refine) {
    std::vector<double> nodes = segment_nodes({0.0, w, win.b()}, grid, refine);
    std::vector<char>   jump(nodes.size(), 0);
    for (size_t k = 0; k < nodes.size(); ++k) jump[k] = nodes[k] == w;
    Etd        etd(spec, params.alpha, nodes, jump);
    auto const m = first_moment_nodes(ph_hat, etd.lambda(), nodes, w, spec);
    auto       src = [&](int interval, int node) -> Vector {
      bool const active = nodes[interval + 1] <= w;
      Vector     g = V * m[node].array().square().matrix();
      if (active) g += 2.0 * ph.values.cwiseProduct(m[node]);
      return g;
    };
    auto q = etd.integrate(src);
    return std::pair{q.back(), m.back()};
  };
  auto [coarse, mean] = solve(1);
  auto fine = solve(2).first;

  SecondMoment out;
  out.second = make_field(grid, params.d, fine + (fine - coarse) / 3.0);
  out.error = make_field(grid, params.d, ((fine - coarse) / 3.0).cwiseAbs());
  out.mean = make_field(grid, params.d, mean);
  return out;
}

double fourier_J2_raw(TimeWindow const &win, TestFunction const &phi, ModelParams const &params)
{
  double const a = win.a(), w = win.width(), alpha = params.alpha;
  int const    d = params.d;
  auto         f = [&](double k) {
    double const l = std::pow(k, alpha);
    double const B = std::exp(-l * a) * w * phi1(l * w);
    return phi.fourier_abs2(k) * B * B;
  };
  double const pre = surface_area(d) / std::pow(2.0 * pi, d);
  return pre * radial_k(f, d, d - 1.0, k_lower(win, alpha, phi.sigma), 6.5 / phi.sigma);
}

double fourier_J3_raw(TimeWindow const &win, TestFunction const &phi, ModelParams const &params)
{
  double const a = win.a(), w = win.width(), alpha = params.alpha, V = params.V;
  int const    d = params.d;
  auto         f = [&](double k) {
    double const l = std::pow(k, alpha);
    double const A = 2.0 * w * w * psi_tilde(l * w);
    double const B0 = w * phi1(l * w);
    double const W = B0 * B0 * a * phi1(2.0 * l * a) + w * w * w * chi_fn(l * w);
    return phi.fourier_abs2(k) * (A + V * W);
  };
  double const pre = surface_area(d) / std::pow(2.0 * pi, d);
  return pre * radial_k(f, d, d - 1.0, k_lower(win, alpha, phi.sigma), 6.5 / phi.sigma);
}

namespace {

double fourier_riesz_raw(TimeWindow const &win, TestFunction const &phi, ModelParams const &params)
{
  double const a = win.a(), w = win.width(), alpha = params.alpha;
  int const    d = params.d;
  auto         f = [&](double k) {
    double const l = std::pow(k, alpha);
    double const B = std::exp(-l * a) * w * phi1(l * w);
    return phi.fourier_abs2(k) * B * B / l;
  };
  double const pre = 0.5 * params.V * surface_area(d) / std::pow(2.0 * pi, d);
  return pre * radial_k(f, d, d - 1.0 - alpha, k_lower(win, alpha, phi.sigma), 6.5 / phi.sigma);
}

// h(u) = <phi * phi, p_u> by real-space radial quadrature
double correlation_against_density(TestFunction const &phi, ModelParams const &params, double u)
{
  int const    d = params.d;
  double const s = phi.sigma;
  double const amp2 = phi.amplitude * phi.amplitude * std::pow(pi * s * s, 0.5 * d);
  auto         g = [&](double r) {
    return amp2 * std::exp(-r * r / (4.0 * s * s)) * density_p_radial(params, u, r) * std::pow(r, d - 1);
  };
  // Fixed Gauss rule on a geometric partition that does not move with u, so
  // h is a smooth function of u and the outer adaptive rule can converge.
  double const rmax = 24.0 * s;
  using rule = boost::math::quadrature::gauss<double, 30>;
  double lo = 0.0, total = 0.0;
  for (int k = 28; k >= 0; --k) {
    double const hi = rmax * std::pow(4.0, -k);
    total += rule::integrate(g, lo, hi);
    lo = hi;
  }
  return surface_area(d) * total;
}

double fstar_J1_raw(TimeWindow const &win, TestFunction const &phi, Lambda0 spec, ModelParams const &params)
{
  double const a = win.a(), b = win.b(), w = win.width(), c = a + b;
  auto         h = [&](double u) { return correlation_against_density(phi, params, u); };
  auto         tri = [&](double s) { return w - std::abs(s - c); };

  // atom part: int_{2a}^{2b} (w - |s - (a+b)|) h(s) ds
  auto geometric = [](double lo, double hi) {
    std::vector<double> n{lo};
    double              x = std::max(lo, 1e-6);
    if (x > lo) n.push_back(x);
    for (x *= 4.0; x < hi; x *= 4.0) n.push_back(x);
    n.push_back(hi);
    return n;
  };
  std::vector<double> nodes = geometric(2.0 * a, c);
  std::vector<double> upper = geometric(c, 2.0 * b);
  nodes.insert(nodes.end(), upper.begin() + 1, upper.end());
  double total = quad::gk_split([&](double s) { return tri(s) * h(s); }, nodes, 1e-11).value;

  if (spec == Lambda0::equilibrium) {
    // (V/2) int_{2a}^inf h(u) Omega(u) du, Omega the integrated triangle
    auto Omega = [&](double u) {
      if (u <= 2.0 * a) return 0.0;
      if (u <= c) return 0.5 * (u - 2.0 * a) * (u - 2.0 * a);
      if (u <= 2.0 * b) return w * w - 0.5 * (2.0 * b - u) * (2.0 * b - u);
      return w * w;
    };
    double const U = 1e14 * std::max(1.0, b);
    std::vector<double> n2 = nodes;
    for (double x = 8.0 * b; x < U; x *= 8.0) n2.push_back(x);
    n2.push_back(U);
    double const body = quad::gk_split([&](double u) { return h(u) * Omega(u); }, n2, 1e-11).value;
    // h(u) ~ C u^{-d/alpha} beyond U
    double const tail = h(U) * Omega(U) * U / (params.d / params.alpha - 1.0);
    total += 0.5 * params.V * (body + tail);
  }
  return total;
}

} // namespace

ExactL exact_L(double t1, double t2, double T, TestFunction const &phi, Lambda0 spec, ModelParams const &params)
{
  TimeWindow win{t1, t2, T};
  win.validate();
  params.validate();
  if (spec == Lambda0::equilibrium && !(params.alpha < params.d))
    throw ConfigError("equilibrium clan intensity needs alpha < d");
  ExactL out;
  out.F = params.F(T);
  double const F2 = out.F * out.F;
  if (t1 == t2) return out;
  out.J2 = fourier_J2_raw(win, phi, params) / F2;
  out.J3 = fourier_J3_raw(win, phi, params) / F2;
  out.J1 = out.J2;
  if (spec == Lambda0::equilibrium) out.J1 += fourier_riesz_raw(win, phi, params) / F2;
  out.J1_fstar = fstar_J1_raw(win, phi, spec, params) / F2;
  out.L = out.J1 - out.J2 + out.J3;
  return out;
}

ClanLaplace eq_clan_laplace(TestFunction const &f, double t, Point const &x, ModelParams const &params,
                            GridSpec const &grid, double tol, int max_iter)
{
  params.validate();
  if (!(t > 0.0)) throw DomainError("clan time must be > 0");
  Spectral           spec(params.d, grid.n, grid.L);
  GridField          fg = GridField::sample(params.d, grid.n, grid.L, [&](Point const &y) { return f(y); });
  Eigen::Index const ix = fg.flat_index(x);
  Vector const       lambda = spec.lambda(params.alpha);
  double const       V = params.V;
  ClanLaplace        out;

  // first-order term, exact in Fourier: V int_0^t T_{2s} f ds
  {
    CVector c = spec.forward(fg.values);
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= t * phi1(2.0 * t * lambda[i]);
    out.first_order = V * spec.inverse(c)[ix];
  }

  auto solve = [&](int refine, double &H, double &Hfk) {
    std::vector<double> nodes = segment_nodes({0.0, t}, grid, refine);
    size_t const        N = nodes.size();
    Etd                 etd(spec, params.alpha, nodes, {});
    CVector const       g0 = spec.forward((1.0 - (-fg.values.array()).exp()).matrix());
    std::vector<Vector> free(N);
    for (size_t k = 0; k < N; ++k) free[k] = spec.inverse(g0.cwiseProduct((-nodes[k] * lambda.array()).exp().matrix()));

    std::vector<Vector> w = free;
    double const        slab = V > 0.0 ? 0.25 / V : t;
    auto                wsrc = [&](int, int node) -> Vector { return -0.5 * V * w[node].array().square().matrix(); };
    PicardStats         st = picard_slabs(etd, w, &free, wsrc, slab, tol, max_iter);
    if (!(st.residual < tol)) throw NumericError("clan w-equation did not converge");
    out.iterations = std::max(out.iterations, st.iterations);

    // exponent: trapezoid of (T_s w(s))(x)
    std::vector<double> q(N);
    for (size_t k = 0; k < N; ++k) {
      CVector c = spec.forward(w[k]);
      c.array() *= (-nodes[k] * lambda.array()).exp();
      q[k] = spec.inverse(c)[ix];
    }
    double expo = 0.0;
    for (size_t k = 0; k + 1 < N; ++k) expo += 0.5 * (q[k] + q[k + 1]) * (nodes[k + 1] - nodes[k]);
    H = std::exp(-V * expo);

    // U(rho) = 1 - V int_0^rho T_{rho-s} [w(t - s) U(s)] ds; nodes are symmetric
    std::vector<Vector> U(N, Vector::Ones(fg.size()));
    std::vector<Vector> ones(N, Vector::Ones(fg.size()));
    auto                usrc = [&](int, int node) -> Vector { return -V * w[N - 1 - node].cwiseProduct(U[node]); };
    st = picard_slabs(etd, U, &ones, usrc, slab, tol, max_iter);
    if (!(st.residual < tol)) throw NumericError("Feynman-Kac iteration did not converge");
    out.iterations = std::max(out.iterations, st.iterations);
    Hfk = U.back()[ix];
  };

  double Hc, Hfkc, Hf, Hfkf;
  solve(1, Hc, Hfkc);
  solve(2, Hf, Hfkf);
  out.H = Hf + (Hf - Hc) / 3.0;
  out.H_error = std::abs(Hf - Hc) / 3.0;
  out.H_feynman_kac = Hfkf + (Hfkf - Hfkc) / 3.0;
  out.H_fk_error = std::abs(Hfkf - Hfkc) / 3.0;
  return out;
}

RieszValue equilibrium_intensity(TestFunction const &f, Point const &x, ModelParams const &params)
{
  params.validate();
  int const    d = params.d;
  double const alpha = params.alpha;
  if (!(alpha < d)) throw DomainError("equilibrium intensity needs alpha < d");
  double const c = riesz_constant(d, alpha);
  double const D = (x - f.center).norm();
  double const s2 = f.sigma * f.sigma;

  // spherical mean of f over the sphere of radius r around x
  auto sphere_mean = [&](double r) {
    switch (d) {
    case 1: return 0.5 * (f.radial(D + r) + f.radial(std::abs(D - r)));
    case 2: {
      double const z = r * D / s2;
      // exp(-z) I_0(z), asymptotic beyond the overflow range
      double const scaled = z < 600.0 ? std::exp(-z) * std::cyl_bessel_i(0.0, z)
                                      : (1.0 + 1.0 / (8.0 * z) + 9.0 / (128.0 * z * z)) / std::sqrt(2.0 * pi * z);
      return f.amplitude * std::exp(-(r - D) * (r - D) / (2.0 * s2)) * scaled;
    }
    default: {
      double const z = r * D / s2;
      if (z < 1e-8) return f.radial(std::hypot(r, D));
      // sinh(z)/z times the Gaussian, written with exp(-(r-D)^2/2s2)
      return f.amplitude * std::exp(-(r - D) * (r - D) / (2.0 * s2)) * (-std::expm1(-2.0 * z)) / (2.0 * z);
    }
    }
  };
  // r = s^{1/alpha} turns r^{alpha-1} dr into ds / alpha
  auto         g = [&](double s) { return sphere_mean(std::pow(s, 1.0 / alpha)) / alpha; };
  double const smax = std::pow(D + 12.0 * f.sigma, alpha);
  std::vector<double> nodes{0.0};
  if (D > 0.0) {
    nodes.push_back(std::pow(std::max(D - 6.0 * f.sigma, 0.0), alpha));
    nodes.push_back(std::pow(D, alpha));
  }
  nodes.push_back(smax);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  quad::Result r = quad::gk_split(g, nodes, 1e-12);
  RieszValue   out;
  out.value = 0.5 * params.V * c * surface_area(d) * r.value;

  // Fourier route: the Riesz kernel has transform |k|^{-alpha}
  double const kmax = 9.0 / f.sigma;
  std::vector<double> kn{0.0};
  double const        step = D > 0.0 ? std::min(pi / D, kmax / 8) : kmax / 8;
  for (double k = step; k < kmax; k += step) kn.push_back(k);
  kn.push_back(kmax);
  // k^{d-1-alpha} is singular at 0 for d = 1; substitute v = k^{d-alpha}
  double const e = d - alpha;
  auto fs = [&](double v) {
    double const k = std::pow(v, 1.0 / e);
    double const kr = k * D;
    double const om = d == 1 ? std::cos(kr)
                    : d == 2 ? std::cyl_bessel_j(0.0, kr)
                             : (kr < 1e-4 ? 1.0 - kr * kr / 6.0 : std::sin(kr) / kr);
    return f.fourier_abs(k) * om / e;
  };
  std::vector<double> vn;
  for (double k : kn) vn.push_back(std::pow(k, e));
  quad::Result rf = quad::gk_split(fs, vn, 1e-12);
  out.fourier = 0.5 * params.V * surface_area(d) / std::pow(2.0 * pi, d) * rf.value;
  return out;
}

std::vector<TauberianRow> tauberian_c_alpha_check(Lambda0 spec, ModelParams const &params,
                                                  std::vector<double> const &t_grid)
{
  params.validate();
  int const    d = params.d;
  double const alpha = params.alpha;
  bool const   eq = spec == Lambda0::equilibrium;
  if (eq && !(alpha < d)) throw DomainError("equilibrium clan intensity needs alpha < d");
  double const dens = eq ? 0.5 * params.V * riesz_constant(d, alpha) * surface_area(d) : 0.0;

  std::vector<TauberianRow> rows;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("times must be > 0");
    TauberianRow row;
    row.t = t;
    double const pre = std::pow(t, d / alpha - 1.0);
    row.atom = pre * density_p_radial(params, t, 0.0);
    if (eq) {
      // int_0^inf p_t(r) r^{alpha-1} dr with r = s^{1/alpha}
      double const scale = t; // s-scale of p_t
      auto         g = [&](double s) { return density_p_radial(params, t, std::pow(s, 1.0 / alpha)) / alpha; };
      double const S = 1e10 * scale;
      std::vector<double> nodes{0.0};
      for (double s = 1e-3 * scale; s < S; s *= 8.0) nodes.push_back(s);
      nodes.push_back(S);
      quad::Result r = quad::gk_split(g, nodes, 1e-12);
      double const tail = g(S) * S * alpha / d;
      row.palm = pre * dens * (r.value + tail);
      // direct radial mass of B(t); the power law on [0, eps] is integrated exactly
      double const eps = 1e-3 * t;
      double const mass =
        std::pow(eps, alpha) / alpha +
        quad::gk([&](double r) { return std::pow(r, alpha - 1.0); }, eps, t, 1e-14).value;
      row.ball = dens * mass / std::pow(t, alpha);
      row.ball_closed = dens / alpha;
    } else {
      row.palm = row.atom;
      row.ball = row.ball_closed = std::pow(t, -alpha);
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace occ
