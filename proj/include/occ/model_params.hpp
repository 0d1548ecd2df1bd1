#pragma once

#include "types.hpp"

#include <cmath>

namespace occ {

struct ModelParams
{
  int    d = 1;
  double alpha = 2.0;
  double V = 1.0;

  ModelParams() = default;
  ModelParams(int d_, double alpha_, double V_) : d(d_), alpha(alpha_), V(V_) { validate(); }

  // Limit-theorem experiments need alpha < d < 2 alpha and V > 0.
  static ModelParams intermediate(int d, double alpha, double V)
  {
    ModelParams p(d, alpha, V);
    if (!(alpha < d && d < 2.0 * alpha))
      throw DomainError("intermediate-dimension mode requires alpha < d < 2 alpha");
    if (!(V > 0.0)) throw DomainError("intermediate-dimension mode requires V > 0");
    return p;
  }

  // V = 0 is accepted here: it switches branching off, which the
  // no-branching checks rely on.
  void validate() const
  {
    if (d < 1 || d > 3) throw DomainError("dimension must be 1, 2 or 3");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
    if (!(V >= 0.0) || !std::isfinite(V)) throw DomainError("branching rate must be finite and >= 0");
  }

  bool is_intermediate() const { return alpha < d && d < 2.0 * alpha; }

  double h() const { return 3.0 - d / alpha; }
  double F(double T) const { return std::pow(T, 0.5 * h()); }
};

} // namespace occ
