#ifndef DIAGREG_PROX_HPP
#define DIAGREG_PROX_HPP

#include "core.hpp"

#include <algorithm>

namespace diagreg {

/// Step size gamma and regularization parameter lambda of one proximal step.
struct ProxParams {
  double gamma;
  double lambda;

  ProxParams(double g, double l) : gamma(g), lambda(l) {
    if (!(gamma > 0.0)) throw invalid_argument("ProxParams: gamma must be > 0");
    if (!(lambda > 0.0))
      throw invalid_argument("ProxParams: lambda must be > 0");
  }
};

/// Proximal map of s -> s + indicator_[-1/lambda, 0](s) with step gamma:
/// the projection of p - gamma onto [-1/lambda, 0].
inline double prox_conj_hinge(double p, const ProxParams& params) {
  return std::clamp(p - params.gamma, -1.0 / params.lambda, 0.0);
}

inline Vector prox_conj_hinge_vec(const Vector& p, const ProxParams& params) {
  const double lower = -1.0 / params.lambda;
  return (p.array() - params.gamma).cwiseMax(lower).cwiseMin(0.0).matrix();
}

}  // namespace diagreg

#endif  // DIAGREG_PROX_HPP
