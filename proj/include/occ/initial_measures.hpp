#pragma once

#include "model_params.hpp"
#include "point_configuration.hpp"
#include "rng.hpp"
#include "types.hpp"

#include <cstdint>
#include <vector>

namespace occ {

PointConfiguration sample_poisson(int d, double L, double intensity, Rng &rng);

// One possible clan shape. With pair_radius > 0 the outcome is the pair
// {u/2, -u/2}, u uniform in the ball of that radius, and offsets is ignored.
struct ClanOutcome
{
  double prob = 0.0;
  Matrix offsets; // d x count
  double pair_radius = 0.0;

  int count() const { return pair_radius > 0.0 ? 2 : static_cast<int>(offsets.cols()); }
};

// Finite clan law; the compound construction needs unit mean count.
struct ClanLaw
{
  int                      d = 1;
  std::vector<ClanOutcome> outcomes;

  void   validate() const;
  double mean_count() const;
  double count_variance() const;
  int    max_count() const;
  double extent() const; // max distance of a clan point from its parent

  Matrix sample(Rng &rng, int *outcome = nullptr) const;

  static ClanLaw singleton(int d);
  // empty w.p. 1/4, {0} w.p. 1/2, random pair of diameter <= radius w.p. 1/4
  static ClanLaw thinned_pairs(int d, double radius = 1.0);
};

PointConfiguration sample_compound_clans(double L, ClanLaw const &law, Rng &rng);

// Poisson start on an enlarged window run for time t0, clipped back.
PointConfiguration sample_equilibrium_burnin(int d, double L, double t0, ModelParams const &params, Rng &rng,
                                             double margin_factor = 5.0, std::int64_t cap = 100'000'000);

// Palm clan seen from an atom at the origin. The origin is column 0.
// tick holds the clock time of the branch each point came from (0 for the
// origin), so the clan at any smaller horizon is a filter of this one.
struct PalmClanSample
{
  Matrix positions;
  Vector tick;
  double tau_max = 0.0;

  Eigen::Index size() const { return positions.cols(); }
  PalmClanSample truncated(double tau) const;
};

PalmClanSample sample_palm_clan_eq(ModelParams const &params, double tau_max, Rng &rng,
                                   std::int64_t cap = 100'000'000);
PalmClanSample palm_clan_poisson(int d);
// size-biased outcome, origin placed at a uniformly chosen clan point
PalmClanSample sample_palm_clan_compound(ClanLaw const &law, Rng &rng);

} // namespace occ
