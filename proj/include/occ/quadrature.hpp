#pragma once

#include "types.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <sstream>
#include <vector>

namespace occ::quad {

struct Result
{
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod on [a, b].
template <typename F>
Result gk(F &&f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 10)
{
  Result r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol, &r.error);
  return r;
}

// Integral over [a, b] split at the given interior breakpoints (sorted). The
// tolerance is relative to the whole integral: a coarse pass sizes each
// piece, so tiny pieces are not refined to their own relative precision.
template <typename F>
Result gk_split(F &&f, std::vector<double> const &nodes, double rel_tol = 1e-12, unsigned max_depth = 10)
{
  std::vector<Result> coarse;
  double              scale = 0.0;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    coarse.push_back(nodes[i + 1] > nodes[i] ? gk(f, nodes[i], nodes[i + 1], rel_tol, 0) : Result{});
    scale += std::abs(coarse.back().value);
  }
  Result total;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    if (!(nodes[i + 1] > nodes[i])) continue;
    double const mag = std::abs(coarse[i].value);
    Result       piece = coarse[i];
    if (coarse[i].error > rel_tol * scale / static_cast<double>(coarse.size()) || !(mag > 0.0))
      piece = gk(f, nodes[i], nodes[i + 1], mag > 0.0 ? std::max(rel_tol, rel_tol * scale / mag / coarse.size()) : rel_tol,
                 max_depth);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

// Integral over (0, inf) of a function with structure spread over many
// scales: substitute k = exp(u) and integrate over dyadic blocks of u
// between k_lo and k_hi. Outside that range the integrand must be negligible.
template <typename F>
Result log_scale(F &&f, double k_lo, double k_hi, double rel_tol = 1e-12)
{
  auto g = [&](double u) {
    double const k = std::exp(u);
    return f(k) * k;
  };
  std::vector<double> nodes;
  double const        ulo = std::log(k_lo), uhi = std::log(k_hi);
  int const           blocks = std::max(1, static_cast<int>(std::ceil((uhi - ulo) / std::log(4.0))));
  for (int i = 0; i <= blocks; ++i) nodes.push_back(ulo + (uhi - ulo) * i / blocks);
  return gk_split(g, nodes, rel_tol);
}

inline void require(Result const &r, double tol, char const *what)
{
  if (!std::isfinite(r.value) || r.error > tol * std::max(std::abs(r.value), 1e-300)) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (value=" << r.value << " error=" << r.error << ")";
    throw NumericError(msg.str());
  }
}

} // namespace occ::quad
