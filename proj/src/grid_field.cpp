#include "occ/grid_field.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace occ {

GridField::GridField(int d_, int n_, double L_)
  : d(d_)
  , n(n_)
  , L(L_)
{
  if (d < 1 || d > 3) throw DomainError("grid dimension must be 1, 2 or 3");
  if (n < 2 || (n & (n - 1)) != 0) throw DomainError("grid points per axis must be a power of two");
  if (!(L > 0.0)) throw DomainError("grid side length must be > 0");
  Eigen::Index sz = 1;
  for (int a = 0; a < d; ++a) sz *= n;
  values = Vector::Zero(sz);
}

double GridField::cell_volume() const { return std::pow(dx(), d); }

Point GridField::point(Eigen::Index flat) const
{
  Point p(d);
  for (int a = d - 1; a >= 0; --a) {
    p[a] = coord(static_cast<int>(flat % n));
    flat /= n;
  }
  return p;
}

Eigen::Index GridField::flat_index(Point const &x) const
{
  Eigen::Index flat = 0;
  for (int a = 0; a < d; ++a) {
    long i = std::lround((x[a] + 0.5 * L) / dx());
    i = ((i % n) + n) % n;
    flat = flat * n + i;
  }
  return flat;
}

struct Spectral::Impl
{
  Eigen::FFT<double> fft;
};

Spectral::Spectral(int d, int n, double L)
  : d_(d)
  , n_(n)
  , L_(L)
  , impl_(std::make_unique<Impl>())
{
  GridField shape(d, n, L); // validates
  k_.resize(shape.size());
  double const dk = 2.0 * std::numbers::pi / L;
  for (Eigen::Index flat = 0; flat < shape.size(); ++flat) {
    Eigen::Index f = flat;
    double       k2 = 0.0;
    for (int a = 0; a < d; ++a) {
      int m = static_cast<int>(f % n);
      f /= n;
      if (m > n / 2) m -= n;
      double const k = dk * m;
      k2 += k * k;
    }
    k_[flat] = std::sqrt(k2);
  }
}

Spectral::~Spectral() = default;
Spectral::Spectral(Spectral &&) noexcept = default;
Spectral &Spectral::operator=(Spectral &&) noexcept = default;

Vector Spectral::lambda(double alpha) const
{
  if (alpha == 2.0) return k_.array().square().matrix();
  return k_.array().pow(alpha).matrix();
}

void Spectral::transform(CVector &data, bool inverse) const
{
  Eigen::Index const total = data.size();
  std::vector<std::complex<double>> line(n_), out(n_);
  Eigen::Index stride = 1;
  for (int axis = d_ - 1; axis >= 0; --axis) {
    Eigen::Index const block = stride * n_;
    for (Eigen::Index base = 0; base < total; base += block) {
      for (Eigen::Index off = 0; off < stride; ++off) {
        for (int i = 0; i < n_; ++i) line[i] = data[base + off + i * stride];
        if (inverse)
          impl_->fft.inv(out, line);
        else
          impl_->fft.fwd(out, line);
        for (int i = 0; i < n_; ++i) data[base + off + i * stride] = out[i];
      }
    }
    stride = block;
  }
}

void Spectral::forward_inplace(CVector &data) const { transform(data, false); }
void Spectral::inverse_inplace(CVector &data) const { transform(data, true); }

CVector Spectral::forward(Vector const &real) const
{
  CVector c = real.cast<std::complex<double>>();
  transform(c, false);
  return c;
}

Vector Spectral::inverse(CVector const &spec) const
{
  CVector c = spec;
  transform(c, true);
  return c.real();
}

GridField semigroup_apply(GridField const &field, double t, double alpha, Spectral const &spec)
{
  if (!(t >= 0.0)) throw DomainError("semigroup time must be >= 0");
  if (t == 0.0) return field;
  CVector c = spec.forward(field.values);
  c.array() *= (-t * spec.lambda(alpha).array()).exp();
  GridField out = field;
  out.values = spec.inverse(c);
  return out;
}

GridField semigroup_apply(GridField const &field, double t, double alpha)
{
  Spectral spec(field.d, field.n, field.L);
  return semigroup_apply(field, t, alpha, spec);
}

} // namespace occ
