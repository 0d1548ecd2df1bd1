#include "occ/branching_sim.hpp"
#include "occ/stable_motion.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace occ {

namespace {

struct Pending
{
  double born;
  Point  x;
};

double lifetime(Rng &rng, double V)
{
  return V > 0.0 ? exponential(rng, V) : std::numeric_limits<double>::infinity();
}

bool splits(Rng &rng) { return uniform01(rng) < 0.5; }

} // namespace

MassPath simulate_mass_path(PointConfiguration const &start, ModelParams const &params, double T,
                            TestFunction const &phi, double dt, Rng &rng, SimOptions const &opts)
{
  params.validate();
  if (!(dt > 0.0)) throw DomainError("time step must be > 0");
  if (!(T >= dt)) throw DomainError("horizon must be >= time step");
  if (start.d != params.d || phi.dim() != params.d) throw ConfigError("dimension mismatch between start, phi and params");
  double const  Kd = T / dt;
  Eigen::Index const K = std::llround(Kd);
  if (std::abs(Kd - K) > 1e-9 * Kd) throw ConfigError("horizon must be a multiple of the time step");

  MassPath path;
  path.dt = dt;
  path.T = T;
  path.values = Vector::Zero(K + 1);
  path.interval = Vector::Zero(K);
  auto grid = [&](Eigen::Index k) { return k == K ? T : k * dt; };

  IncrementSampler     inc(params);
  std::vector<Pending> stack;
  for (Eigen::Index i = start.size() - 1; i >= 0; --i) stack.push_back({0.0, start.positions.col(i)});

  double const kill2 = opts.kill_radius * opts.kill_radius;
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    ++path.particles;
    double const death = p.born + lifetime(rng, params.V);
    double const end = std::min(death, T);
    double       tau = p.born;
    Point        x = std::move(p.x);
    double       f_prev = phi(x);
    Eigen::Index k = static_cast<Eigen::Index>(std::floor(tau / dt)) + 1;
    if (tau == 0.0) {
      path.values[0] += f_prev;
      k = 1;
    }
    while (k > 0 && grid(k - 1) > tau) --k; // guard against rounding in floor
    while (k <= K && grid(k) <= tau) ++k;
    bool killed = false;
    while (k <= K && grid(k) < end) {
      double const g = grid(k);
      x += inc(g - tau, rng);
      if (++path.particle_steps > opts.cap) throw ResourceError("population cap exceeded");
      double const f = phi(x);
      path.values[k] += f;
      path.interval[k - 1] += 0.5 * (f_prev + f) * (g - tau);
      tau = g;
      f_prev = f;
      ++k;
      if (kill2 > 0.0 && (x - phi.center).squaredNorm() > kill2) {
        killed = true;
        break;
      }
    }
    if (killed) {
      ++path.killed;
      continue;
    }
    if (end > tau) {
      x += inc(end - tau, rng);
      if (++path.particle_steps > opts.cap) throw ResourceError("population cap exceeded");
      double const f = phi(x);
      path.interval[k - 1] += 0.5 * (f_prev + f) * (end - tau);
      if (end == T && death >= T) path.values[K] += f;
    }
    if (death < T && splits(rng)) {
      stack.push_back({death, x});
      stack.push_back({death, std::move(x)});
    }
  }
  return path;
}

Vector cumulative_occupation(MassPath const &path)
{
  Vector c(path.interval.size() + 1);
  c[0] = 0.0;
  for (Eigen::Index k = 0; k < path.interval.size(); ++k) c[k + 1] = c[k] + path.interval[k];
  return c;
}

OccupationRecord occupation_fluctuation(MassPath const &path, ModelParams const &params, double T,
                                        TestFunction const &phi, Vector const &rescaled_grid)
{
  if (std::abs(path.T - T) > 1e-12 * T) throw ConfigError("path horizon does not match T");
  Vector const cum = cumulative_occupation(path);
  double const mass = phi.mass();
  double const F = params.F(T);

  OccupationRecord rec;
  rec.T = T;
  rec.dt = path.dt;
  rec.t = rescaled_grid;
  rec.values.resize(rescaled_grid.size());
  for (Eigen::Index i = 0; i < rescaled_grid.size(); ++i) {
    double const ti = rescaled_grid[i];
    if (!(ti >= 0.0 && ti <= 1.0)) throw ConfigError("rescaled times must lie in [0, 1]");
    double const m = T * ti / path.dt;
    long const   mi = std::lround(m);
    if (std::abs(m - mi) > 1e-9 * std::max(1.0, m)) throw ConfigError("rescaled grid is not aligned with the time step");
    rec.values[i] = (cum[mi] - T * ti * mass) / F;
  }
  return rec;
}

Matrix evolve_population(Matrix const &start, ModelParams const &params, double horizon, Rng &rng, std::int64_t cap,
                         std::int64_t *work_out)
{
  if (!(horizon >= 0.0)) throw DomainError("horizon must be >= 0");
  if (horizon == 0.0) return start;
  IncrementSampler     inc(params);
  std::vector<Pending> stack;
  std::vector<Point>   out;
  for (Eigen::Index i = start.cols() - 1; i >= 0; --i) stack.push_back({0.0, start.col(i)});
  std::int64_t work = 0;
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    if (++work > cap) throw ResourceError("population cap exceeded");
    if (work_out) ++*work_out;
    double const death = p.born + lifetime(rng, params.V);
    if (death >= horizon) {
      out.push_back(p.x + inc(horizon - p.born, rng));
      continue;
    }
    Point const x = p.x + inc(death - p.born, rng);
    if (splits(rng)) {
      stack.push_back({death, x});
      stack.push_back({death, x});
    }
  }
  Matrix m(start.rows(), static_cast<Eigen::Index>(out.size()));
  for (size_t i = 0; i < out.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = out[i];
  return m;
}

} // namespace occ
