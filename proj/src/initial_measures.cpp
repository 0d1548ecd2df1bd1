#include "occ/initial_measures.hpp"
#include "occ/branching_sim.hpp"
#include "occ/stable_motion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace occ {

namespace {

Point uniform_in_box(int d, double L, Rng &rng)
{
  Point x(d);
  for (int i = 0; i < d; ++i) x[i] = (uniform01(rng) - 0.5) * L;
  return x;
}

Point uniform_in_ball(int d, double radius, Rng &rng)
{
  Point x(d);
  do {
    for (int i = 0; i < d; ++i) x[i] = 2.0 * uniform01(rng) - 1.0;
  } while (x.squaredNorm() > 1.0);
  return radius * x;
}

Matrix from_points(int d, std::vector<Point> const &pts)
{
  Matrix m(d, static_cast<Eigen::Index>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i];
  return m;
}

} // namespace

void make_simple(PointConfiguration &config, Rng &rng)
{
  Eigen::Index const n = config.size();
  if (n < 2) return;
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto const &P = config.positions;
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (int k = 0; k < config.d; ++k)
      if (P(k, a) != P(k, b)) return P(k, a) < P(k, b);
    return a < b;
  });
  // compare against the untouched first member of each run of ties
  Point head = config.positions.col(idx[0]);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (config.positions.col(idx[i]) == head) {
      Point dir(config.d);
      for (int k = 0; k < config.d; ++k) dir[k] = std_normal(rng);
      config.positions.col(idx[i]) += 1e-12 * std::max(config.L, 1.0) * dir.normalized();
    } else {
      head = config.positions.col(idx[i]);
    }
  }
}

PointConfiguration sample_poisson(int d, double L, double intensity, Rng &rng)
{
  if (!(L > 0.0)) throw DomainError("window side must be > 0");
  if (!(intensity > 0.0)) throw DomainError("intensity must be > 0");
  double const n_mean = intensity * std::pow(L, d);
  long const   n = std::poisson_distribution<long>(n_mean)(rng);
  PointConfiguration c(d, L, Matrix(d, n));
  for (long i = 0; i < n; ++i) c.positions.col(i) = uniform_in_box(d, L, rng);
  return c;
}

void ClanLaw::validate() const
{
  if (outcomes.empty()) throw ConfigError("clan law has no outcomes");
  double total = 0.0;
  for (auto const &o : outcomes) {
    if (!(o.prob >= 0.0)) throw ConfigError("clan outcome probability must be >= 0");
    if (o.pair_radius <= 0.0 && o.offsets.cols() > 0 && o.offsets.rows() != d)
      throw ConfigError("clan offsets have the wrong dimension");
    total += o.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("clan outcome probabilities must sum to 1");
  if (std::abs(mean_count() - 1.0) > 1e-12) throw ConfigError("clan law must have unit mean count");
}

double ClanLaw::mean_count() const
{
  double m = 0.0;
  for (auto const &o : outcomes) m += o.prob * o.count();
  return m;
}

double ClanLaw::count_variance() const
{
  double m2 = 0.0;
  for (auto const &o : outcomes) m2 += o.prob * o.count() * o.count();
  return m2 - mean_count() * mean_count();
}

int ClanLaw::max_count() const
{
  int c = 0;
  for (auto const &o : outcomes) c = std::max(c, o.count());
  return c;
}

double ClanLaw::extent() const
{
  double e = 0.0;
  for (auto const &o : outcomes) {
    if (o.pair_radius > 0.0)
      e = std::max(e, 0.5 * o.pair_radius);
    else
      for (Eigen::Index j = 0; j < o.offsets.cols(); ++j) e = std::max(e, o.offsets.col(j).norm());
  }
  return e;
}

Matrix ClanLaw::sample(Rng &rng, int *outcome) const
{
  double       u = uniform01(rng);
  size_t       j = 0;
  for (; j + 1 < outcomes.size(); ++j) {
    if (u < outcomes[j].prob) break;
    u -= outcomes[j].prob;
  }
  if (outcome) *outcome = static_cast<int>(j);
  ClanOutcome const &o = outcomes[j];
  if (o.pair_radius > 0.0) {
    Point const u2 = 0.5 * uniform_in_ball(d, o.pair_radius, rng);
    Matrix      m(d, 2);
    m.col(0) = u2;
    m.col(1) = -u2;
    return m;
  }
  return o.offsets.cols() ? o.offsets : Matrix(d, 0);
}

ClanLaw ClanLaw::singleton(int d)
{
  ClanLaw law;
  law.d = d;
  law.outcomes.push_back({1.0, Matrix::Zero(d, 1), 0.0});
  return law;
}

ClanLaw ClanLaw::thinned_pairs(int d, double radius)
{
  ClanLaw law;
  law.d = d;
  law.outcomes.push_back({0.25, Matrix(d, 0), 0.0});
  law.outcomes.push_back({0.5, Matrix::Zero(d, 1), 0.0});
  law.outcomes.push_back({0.25, Matrix(), radius});
  return law;
}

PointConfiguration sample_compound_clans(double L, ClanLaw const &law, Rng &rng)
{
  law.validate();
  int const          d = law.d;
  double const       m = law.extent();
  PointConfiguration parents = sample_poisson(d, L + 2.0 * m, 1.0, rng);
  std::vector<Point> pts;
  for (Eigen::Index i = 0; i < parents.size(); ++i) {
    Matrix const clan = law.sample(rng);
    for (Eigen::Index j = 0; j < clan.cols(); ++j) {
      Point const y = parents.positions.col(i) + clan.col(j);
      if ((y.array().abs() <= 0.5 * L).all()) pts.push_back(y);
    }
  }
  PointConfiguration c(d, L, from_points(d, pts));
  make_simple(c, rng);
  return c;
}

PointConfiguration sample_equilibrium_burnin(int d, double L, double t0, ModelParams const &params, Rng &rng,
                                             double margin_factor, std::int64_t cap)
{
  if (!(t0 >= 0.0)) throw DomainError("burn-in time must be >= 0");
  if (t0 == 0.0) return sample_poisson(d, L, 1.0, rng);
  double const       m = margin_factor * std::pow(t0, 1.0 / params.alpha);
  // Evolve on a torus of side L + 2m: the Poisson start is exactly
  // invariant there, so heavy tails cannot thin the window.
  double const       side = L + 2.0 * m;
  PointConfiguration wide = sample_poisson(d, side, 1.0, rng);
  Matrix             after = evolve_population(wide.positions, params, t0, rng, cap);
  after = after.unaryExpr([side](double x) { return x - side * std::round(x / side); });
  std::vector<Point> pts;
  for (Eigen::Index i = 0; i < after.cols(); ++i)
    if ((after.col(i).array().abs() <= 0.5 * L).all()) pts.push_back(after.col(i));
  PointConfiguration c(d, L, from_points(d, pts));
  make_simple(c, rng);
  return c;
}

PalmClanSample PalmClanSample::truncated(double tau) const
{
  PalmClanSample out;
  out.tau_max = std::min(tau, tau_max);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (tick[i] <= tau) keep.push_back(i);
  out.positions.resize(positions.rows(), static_cast<Eigen::Index>(keep.size()));
  out.tick.resize(static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    out.positions.col(static_cast<Eigen::Index>(j)) = positions.col(keep[j]);
    out.tick[static_cast<Eigen::Index>(j)] = tick[keep[j]];
  }
  return out;
}

PalmClanSample sample_palm_clan_eq(ModelParams const &params, double tau_max, Rng &rng, std::int64_t cap)
{
  if (!(tau_max > 0.0)) throw DomainError("clan horizon must be > 0");
  int const           d = params.d;
  IncrementSampler    inc(params);
  std::vector<Point>  pts{Point::Zero(d)};
  std::vector<double> ticks{0.0};
  // Ticks of the rate-V clock along the backward spine; each one starts an
  // independent family that has had exactly that long to evolve.
  Point        y = Point::Zero(d);
  double       s = 0.0;
  std::int64_t work = 0;
  if (params.V > 0.0) {
    for (;;) {
      double const gap = exponential(rng, params.V);
      if (s + gap > tau_max) break;
      y += inc(gap, rng);
      s += gap;
      Matrix const fam = evolve_population(Matrix(y), params, s, rng, cap - work, &work);
      for (Eigen::Index j = 0; j < fam.cols(); ++j) {
        pts.push_back(fam.col(j));
        ticks.push_back(s);
      }
    }
  }
  PalmClanSample out;
  out.tau_max = tau_max;
  out.positions = from_points(d, pts);
  out.tick = Eigen::Map<Vector>(ticks.data(), static_cast<Eigen::Index>(ticks.size()));
  return out;
}

PalmClanSample palm_clan_poisson(int d)
{
  PalmClanSample out;
  out.positions = Matrix::Zero(d, 1);
  out.tick = Vector::Zero(1);
  out.tau_max = 0.0;
  return out;
}

PalmClanSample sample_palm_clan_compound(ClanLaw const &law, Rng &rng)
{
  law.validate();
  // size-biased choice of the outcome
  double u = uniform01(rng) * law.mean_count();
  size_t j = 0;
  for (; j + 1 < law.outcomes.size(); ++j) {
    double const w = law.outcomes[j].prob * law.outcomes[j].count();
    if (u < w) break;
    u -= w;
  }
  ClanLaw fixed;
  fixed.d = law.d;
  fixed.outcomes.push_back(law.outcomes[j]);
  fixed.outcomes[0].prob = 1.0;
  Matrix const clan = fixed.sample(rng);
  Eigen::Index const origin = std::min<Eigen::Index>(clan.cols() - 1, static_cast<Eigen::Index>(uniform01(rng) * clan.cols()));
  PalmClanSample out;
  out.positions.resize(law.d, clan.cols());
  out.positions.col(0) = Point::Zero(law.d);
  Eigen::Index c = 1;
  for (Eigen::Index i = 0; i < clan.cols(); ++i)
    if (i != origin) out.positions.col(c++) = clan.col(i) - clan.col(origin);
  out.tick = Vector::Zero(clan.cols());
  return out;
}

} // namespace occ
