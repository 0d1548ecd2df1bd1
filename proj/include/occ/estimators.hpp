#pragma once

#include "branching_sim.hpp"
#include "initial_measures.hpp"
#include "model_params.hpp"
#include "types.hpp"

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace occ {

// Exactly rounded floating-point sum. The partials hold the exact value, so
// the result does not depend on the order of additions or merges.
class ExactSum
{
public:
  void   add(double x);
  void   merge(ExactSum const &o);
  double value() const;

private:
  std::vector<double> partials_;
};

// Sums and cross-sums of vector observations on a fixed grid.
class MomentAccumulator
{
public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(Vector grid);

  void add(Vector const &x);
  void add(OccupationRecord const &r);
  void merge(MomentAccumulator const &o);

  std::int64_t  count() const { return count_; }
  Vector const &grid() const { return grid_; }
  Vector        mean() const;
  Matrix        raw_second() const; // E x x^T
  Matrix        covariance() const; // unbiased

private:
  Vector                grid_;
  std::int64_t          count_ = 0;
  std::vector<ExactSum> sum_;
  std::vector<ExactSum> cross_; // packed upper triangle, row major
};

struct EstimateMeta
{
  std::string   config_hash;
  std::uint64_t seed = 0;
  double        runtime_seconds = 0.0;
};

struct EstimateReport
{
  Vector       x;         // abscissae: t or r grid
  Matrix       estimate;  // m x m surface or m x 1 curve
  Matrix       std_error; // batch-means standard errors
  std::int64_t count = 0;
  int          batches = 0;
  EstimateMeta meta;
  std::vector<std::string> flags;
};

// Batched replication: replica i goes to batch floor(i B / n).
int batch_of(std::int64_t i, std::int64_t n, int batches);

EstimateReport estimate_cov_surface(std::vector<MomentAccumulator> const &batches, int min_batches = 30);
EstimateReport estimate_mean_curve(std::vector<MomentAccumulator> const &batches, int min_batches = 30);

struct HReport
{
  EstimateReport      curve;       // without the origin atom
  Vector              atom;        // origin contribution per grid point
  std::vector<char>   tail_flag;   // horizon too short for this grid point
  Vector              tail_fraction;
  double              moment_ratio = 0.0; // E count^{1+eps} / E count
};

// t^{d/alpha-1} sum_{y != 0} p_t(y) averaged over clans
HReport estimate_H_palm(std::vector<PalmClanSample> const &clans, Vector const &t_grid, ModelParams const &params,
                        int batches = 32, double tail_threshold = 0.05);
// r^{-alpha} #{y != 0 : |y| <= r} averaged over clans
HReport estimate_H_ball(std::vector<PalmClanSample> const &clans, Vector const &r_grid, ModelParams const &params,
                        int batches = 32, double tail_threshold = 0.05);

// Fraction of the equilibrium clan mean missing when the clan is cut at
// tau_max, for the scale t (the Palm kernel tail), exact for that clan law.
double clan_tail_fraction(ModelParams const &params, double tau_max, double t);

struct SlopeFit
{
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
};

// least squares on log R against log tau
SlopeFit fit_decay_exponent(Vector const &tau, Vector const &R);

int worker_count(int requested);

// Runs f(i) for i in [0, n) on the given number of threads. Work is handed
// out by an atomic counter; the first exception (by index) is rethrown.
template <typename F>
void parallel_for(std::int64_t n, int workers, F &&f)
{
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::int64_t>(n, 1))));
  std::atomic<std::int64_t> next{0};
  std::mutex                mu;
  std::int64_t              bad = n;
  std::exception_ptr        err;
  auto                      body = [&] {
    for (;;) {
      std::int64_t const i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lk(mu);
        if (i < bad) {
          bad = i;
          err = std::current_exception();
        }
        next.store(n);
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto &t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

// Runs n replicas grouped into contiguous batches; replica(i) returns the
// observation vector on the grid.
std::vector<MomentAccumulator> run_batched(std::int64_t n, int batches, int workers, Vector const &grid,
                                           std::function<Vector(std::int64_t)> const &replica);

} // namespace occ
