#pragma once

#include "model_params.hpp"
#include "point_configuration.hpp"
#include "rng.hpp"
#include "test_function.hpp"
#include "types.hpp"

#include <cstdint>

namespace occ {

struct SimOptions
{
  std::int64_t cap = 10'000'000; // particle-steps per replica
  double       kill_radius = 0.0; // 0 disables pruning
};

// <N_s, phi> at s = k dt plus the occupation integral over each grid
// interval. The integral is a per-particle trapezoid whose nodes are the
// grid times and the particle's own birth and death times.
struct MassPath
{
  double       dt = 0.0;
  double       T = 0.0;
  Vector       values;   // size K+1
  Vector       interval; // size K
  std::int64_t particle_steps = 0;
  std::int64_t particles = 0;
  std::int64_t killed = 0;

  Eigen::Index steps() const { return interval.size(); }
};

MassPath simulate_mass_path(PointConfiguration const &start, ModelParams const &params, double T,
                            TestFunction const &phi, double dt, Rng &rng, SimOptions const &opts = {});

struct OccupationRecord
{
  Vector        t;      // rescaled times in [0, 1]
  Vector        values; // <X_T(t_i), phi>
  double        T = 0.0;
  double        dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

// X_T(t) = F_T^{-1} int_0^{Tt} (<N_s, phi> - <lambda, phi>) ds
OccupationRecord occupation_fluctuation(MassPath const &path, ModelParams const &params, double T,
                                        TestFunction const &phi, Vector const &rescaled_grid);

// Raw int_{Tt}^{...} helper: int_0^{s} <N_u, phi> du at grid multiples.
Vector cumulative_occupation(MassPath const &path);

// Branching dynamics for a fixed horizon; returns the survivors' positions.
// work, when given, is incremented by the number of particles processed.
Matrix evolve_population(Matrix const &start, ModelParams const &params, double horizon, Rng &rng,
                         std::int64_t cap = 10'000'000, std::int64_t *work = nullptr);

} // namespace occ
