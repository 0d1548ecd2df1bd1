#pragma once

#include "rng.hpp"
#include "types.hpp"

namespace occ {

// Finite point set in the window [-L/2, L/2]^d; one column per point.
struct PointConfiguration
{
  int    d = 1;
  double L = 0.0;
  Matrix positions;

  PointConfiguration() = default;
  PointConfiguration(int d_, double L_, Matrix pos = {})
    : d(d_)
    , L(L_)
    , positions(pos.size() ? std::move(pos) : Matrix(d_, 0))
  {}

  Eigen::Index size() const { return positions.cols(); }
  bool         inside(Eigen::Index i) const { return (positions.col(i).array().abs() <= 0.5 * L).all(); }

  static PointConfiguration single(Point const &x, double L)
  {
    PointConfiguration c(static_cast<int>(x.size()), L, Matrix(x));
    return c;
  }
};

// Separates exactly coincident points by a 1e-12 L jitter.
void make_simple(PointConfiguration &config, Rng &rng);

} // namespace occ
