#pragma once

#include "types.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace occ {

using CVector = Eigen::VectorXcd;

// Real function sampled on the periodic box [-L/2, L/2)^d with n points per
// axis. Flat index is row-major, the last axis runs fastest; the origin sits
// at per-axis index n/2.
struct GridField
{
  int    d = 1;
  int    n = 0;
  double L = 0.0;
  Vector values;

  GridField() = default;
  GridField(int d_, int n_, double L_);

  Eigen::Index size() const { return values.size(); }
  double       dx() const { return L / n; }
  double       cell_volume() const;
  double       coord(int i) const { return -0.5 * L + i * dx(); }
  Point        point(Eigen::Index flat) const;
  Eigen::Index flat_index(Point const &x) const; // nearest node
  double       integral() const { return values.sum() * cell_volume(); }
  bool         same_shape(GridField const &o) const { return d == o.d && n == o.n && L == o.L; }

  template <typename F>
  static GridField sample(int d, int n, double L, F &&f)
  {
    GridField g(d, n, L);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.values[i] = f(g.point(i));
    return g;
  }
};

// Cached d-dimensional FFT on one grid shape.
class Spectral
{
public:
  Spectral(int d, int n, double L);
  ~Spectral();
  Spectral(Spectral &&) noexcept;
  Spectral &operator=(Spectral &&) noexcept;

  CVector forward(Vector const &real) const;
  Vector  inverse(CVector const &spec) const; // real part
  void    forward_inplace(CVector &data) const;
  void    inverse_inplace(CVector &data) const;

  // |k| on the discrete frequency lattice, same layout as the field
  Vector const &wavenumber() const { return k_; }
  // |k|^alpha
  Vector lambda(double alpha) const;

  int    d() const { return d_; }
  int    n() const { return n_; }
  double L() const { return L_; }

private:
  void transform(CVector &data, bool inverse) const;

  int    d_, n_;
  double L_;
  Vector k_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// T_t f on the torus: FFT, multiply by exp(-t |k|^alpha), inverse FFT.
GridField semigroup_apply(GridField const &field, double t, double alpha);
GridField semigroup_apply(GridField const &field, double t, double alpha, Spectral const &spec);

} // namespace occ
