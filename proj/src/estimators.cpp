#include "occ/estimators.hpp"
#include "occ/stable_motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace occ {

void ExactSum::add(double x)
{
  size_t i = 0;
  for (double y : partials_) {
    if (std::abs(x) < std::abs(y)) std::swap(x, y);
    double const hi = x + y;
    double const lo = y - (hi - x);
    if (lo != 0.0) partials_[i++] = lo;
    x = hi;
  }
  partials_.resize(i);
  partials_.push_back(x);
}

void ExactSum::merge(ExactSum const &o)
{
  for (double p : o.partials_) add(p);
}

double ExactSum::value() const
{
  // round the exact expansion to nearest, ties to even
  size_t n = partials_.size();
  if (n == 0) return 0.0;
  double hi = partials_[--n], lo = 0.0;
  while (n > 0) {
    double const x = hi, y = partials_[--n];
    hi = x + y;
    lo = y - (hi - x);
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
    double const y = lo * 2.0, x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

MomentAccumulator::MomentAccumulator(Vector grid)
  : grid_(std::move(grid))
  , sum_(static_cast<size_t>(grid_.size()))
  , cross_(static_cast<size_t>(grid_.size() * (grid_.size() + 1) / 2))
{
}

void MomentAccumulator::add(Vector const &x)
{
  Eigen::Index const m = grid_.size();
  if (x.size() != m) throw ConfigError("observation does not match the accumulator grid");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw NumericError("non-finite observation");
  size_t c = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    sum_[i].add(x[i]);
    for (Eigen::Index j = i; j < m; ++j) cross_[c++].add(x[i] * x[j]);
  }
  ++count_;
}

void MomentAccumulator::add(OccupationRecord const &r)
{
  if (r.t.size() != grid_.size() || r.t != grid_) throw ConfigError("record grid does not match the accumulator grid");
  add(r.values);
}

void MomentAccumulator::merge(MomentAccumulator const &o)
{
  if (o.count_ == 0 && o.grid_.size() == 0) return;
  if (grid_.size() == 0 && count_ == 0) {
    *this = o;
    return;
  }
  if (o.grid_.size() != grid_.size() || o.grid_ != grid_) throw ConfigError("cannot merge accumulators on different grids");
  for (size_t i = 0; i < sum_.size(); ++i) sum_[i].merge(o.sum_[i]);
  for (size_t i = 0; i < cross_.size(); ++i) cross_[i].merge(o.cross_[i]);
  count_ += o.count_;
}

Vector MomentAccumulator::mean() const
{
  Vector out(grid_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = count_ ? sum_[i].value() / count_ : 0.0;
  return out;
}

Matrix MomentAccumulator::raw_second() const
{
  Eigen::Index const m = grid_.size();
  Matrix             out(m, m);
  size_t             c = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) out(i, j) = out(j, i) = count_ ? cross_[c++].value() / count_ : 0.0;
  return out;
}

Matrix MomentAccumulator::covariance() const
{
  Eigen::Index const m = grid_.size();
  if (count_ < 2) return Matrix::Zero(m, m);
  Vector const mu = mean();
  double const n = static_cast<double>(count_);
  return (raw_second() - mu * mu.transpose()) * (n / (n - 1.0));
}

int batch_of(std::int64_t i, std::int64_t n, int batches)
{
  return static_cast<int>((static_cast<__int128>(i) * batches) / n);
}

namespace {

void need_batches(std::vector<MomentAccumulator> const &batches, int min_batches)
{
  int nonempty = 0;
  for (auto const &b : batches) nonempty += b.count() > 1;
  if (nonempty < min_batches)
    throw StatisticalError("need at least " + std::to_string(min_batches) + " batches with 2+ samples, have " +
                           std::to_string(nonempty));
}

template <typename Stat>
Matrix batch_std_error(std::vector<MomentAccumulator> const &batches, Stat &&stat)
{
  Matrix s1, s2;
  int    B = 0;
  for (auto const &b : batches) {
    if (b.count() < 2) continue;
    Matrix const v = stat(b);
    if (B == 0) {
      s1 = Matrix::Zero(v.rows(), v.cols());
      s2 = s1;
    }
    s1 += v;
    s2 += v.cwiseProduct(v);
    ++B;
  }
  Matrix const m = s1 / B;
  Matrix const var = ((s2 / B - m.cwiseProduct(m)) * (double(B) / (B - 1))).cwiseMax(0.0);
  return (var / B).cwiseSqrt();
}

MomentAccumulator pooled(std::vector<MomentAccumulator> const &batches)
{
  MomentAccumulator all;
  for (auto const &b : batches) all.merge(b);
  return all;
}

} // namespace

EstimateReport estimate_cov_surface(std::vector<MomentAccumulator> const &batches, int min_batches)
{
  need_batches(batches, min_batches);
  MomentAccumulator const all = pooled(batches);
  EstimateReport          r;
  r.x = all.grid();
  r.estimate = all.covariance();
  r.std_error = batch_std_error(batches, [](MomentAccumulator const &b) { return b.covariance(); });
  r.count = all.count();
  r.batches = static_cast<int>(batches.size());
  return r;
}

EstimateReport estimate_mean_curve(std::vector<MomentAccumulator> const &batches, int min_batches)
{
  need_batches(batches, min_batches);
  MomentAccumulator const all = pooled(batches);
  EstimateReport          r;
  r.x = all.grid();
  r.estimate = all.mean();
  r.std_error = batch_std_error(batches, [](MomentAccumulator const &b) { return Matrix(b.mean()); });
  r.count = all.count();
  r.batches = static_cast<int>(batches.size());
  return r;
}

double clan_tail_fraction(ModelParams const &params, double tau_max, double t)
{
  // ticks beyond tau_max carry the Palm kernel mass of p_{t+2s}, s > tau_max
  return std::pow(1.0 + 2.0 * tau_max / t, 1.0 - params.d / params.alpha);
}

namespace {

template <typename PerClan>
HReport clan_estimate(std::vector<PalmClanSample> const &clans, Vector const &grid, int batches, PerClan &&per)
{
  if (clans.empty()) throw StatisticalError("no clans");
  std::int64_t const             n = static_cast<std::int64_t>(clans.size());
  std::vector<MomentAccumulator> acc(static_cast<size_t>(batches), MomentAccumulator(grid));
  double                         m1 = 0.0, m15 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    acc[batch_of(i, n, batches)].add(per(clans[i]));
    double const c = static_cast<double>(clans[i].size());
    m1 += c;
    m15 += std::pow(c, 1.5);
  }
  HReport h;
  h.curve = estimate_mean_curve(acc, std::min(batches, 30));
  h.moment_ratio = m15 / m1;
  h.atom = Vector::Zero(grid.size());
  h.tail_fraction = Vector::Zero(grid.size());
  h.tail_flag.assign(grid.size(), 0);
  return h;
}

double min_horizon(std::vector<PalmClanSample> const &clans)
{
  double m = INFINITY;
  for (auto const &c : clans) m = std::min(m, c.tau_max);
  return m;
}

void set_tail(HReport &h, std::vector<PalmClanSample> const &clans, Vector const &scale, ModelParams const &params,
              double threshold)
{
  double const tau = min_horizon(clans);
  // finite clans carry tau_max = 0 and are complete
  if (!(tau > 0.0)) return;
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    h.tail_fraction[i] = clan_tail_fraction(params, tau, scale[i]);
    h.tail_flag[i] = h.tail_fraction[i] > threshold;
    if (h.tail_flag[i]) h.curve.flags.push_back("clan horizon short at grid point " + std::to_string(i));
  }
}

} // namespace

HReport estimate_H_palm(std::vector<PalmClanSample> const &clans, Vector const &t_grid, ModelParams const &params,
                        int batches, double tail_threshold)
{
  params.validate();
  double const e = params.d / params.alpha - 1.0;
  for (double t : t_grid)
    if (!(t > 0.0)) throw DomainError("times must be > 0");
  HReport h = clan_estimate(clans, t_grid, batches, [&](PalmClanSample const &c) {
    Vector v = Vector::Zero(t_grid.size());
    for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
      double const t = t_grid[i];
      double       s = 0.0;
      for (Eigen::Index j = 1; j < c.size(); ++j) s += density_p_radial(params, t, c.positions.col(j).norm());
      v[i] = std::pow(t, e) * s;
    }
    return v;
  });
  for (Eigen::Index i = 0; i < t_grid.size(); ++i)
    h.atom[i] = std::pow(t_grid[i], e) * density_p_radial(params, t_grid[i], 0.0);
  set_tail(h, clans, t_grid, params, tail_threshold);
  return h;
}

HReport estimate_H_ball(std::vector<PalmClanSample> const &clans, Vector const &r_grid, ModelParams const &params,
                        int batches, double tail_threshold)
{
  params.validate();
  for (double r : r_grid)
    if (!(r > 0.0)) throw DomainError("radii must be > 0");
  HReport h = clan_estimate(clans, r_grid, batches, [&](PalmClanSample const &c) {
    Vector v = Vector::Zero(r_grid.size());
    for (Eigen::Index j = 1; j < c.size(); ++j) {
      double const q = c.positions.col(j).norm();
      for (Eigen::Index i = 0; i < r_grid.size(); ++i) v[i] += q <= r_grid[i];
    }
    for (Eigen::Index i = 0; i < r_grid.size(); ++i) v[i] *= std::pow(r_grid[i], -params.alpha);
    return v;
  });
  for (Eigen::Index i = 0; i < r_grid.size(); ++i) h.atom[i] = std::pow(r_grid[i], -params.alpha);
  // a ball of radius r is filled by families of age ~ r^alpha
  Vector scale = r_grid.array().pow(params.alpha);
  set_tail(h, clans, scale, params, tail_threshold);
  return h;
}

SlopeFit fit_decay_exponent(Vector const &tau, Vector const &R)
{
  if (tau.size() != R.size()) throw DomainError("tau and R differ in length");
  if (tau.size() < 8) throw DomainError("need at least 8 points");
  for (Eigen::Index i = 0; i < R.size(); ++i)
    if (!(R[i] > 0.0) || !(tau[i] > 0.0)) throw DomainError("decay fit needs positive tau and R");
  if (tau.maxCoeff() < 100.0 * tau.minCoeff()) throw DomainError("tau grid must span two decades");
  Vector const x = tau.array().log(), y = R.array().log();
  double const n = static_cast<double>(x.size());
  double const mx = x.mean(), my = y.mean();
  double const sxx = (x.array() - mx).square().sum();
  double const sxy = ((x.array() - mx) * (y.array() - my)).sum();
  SlopeFit     f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double const rss = (y.array() - f.intercept - f.slope * x.array()).square().sum();
  f.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  return f;
}

int worker_count(int requested)
{
  if (requested > 0) return requested;
  if (char const *env = std::getenv("WORKER_COUNT")) {
    int const v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<MomentAccumulator> run_batched(std::int64_t n, int batches, int workers, Vector const &grid,
                                           std::function<Vector(std::int64_t)> const &replica)
{
  if (n < 1) throw ConfigError("replicas must be >= 1");
  batches = static_cast<int>(std::min<std::int64_t>(batches, n));
  std::vector<MomentAccumulator> acc(static_cast<size_t>(batches), MomentAccumulator(grid));
  parallel_for(batches, workers, [&](std::int64_t b) {
    // contiguous block of replica indices owned by batch b
    std::int64_t lo = (b * n + batches - 1) / batches, hi = ((b + 1) * n + batches - 1) / batches;
    for (std::int64_t i = lo; i < hi; ++i) acc[b].add(replica(i));
  });
  return acc;
}

} // namespace occ
