#ifndef DIAGREG_BASELINES_HPP
#define DIAGREG_BASELINES_HPP

// Primal comparison methods: gradient descent on smooth margin losses,
// subgradient descent on the summed hinge loss, and gradient descent on least
// squares.

#include "model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace diagreg {

enum class MarginLossKind { exponential, logistic, hinge };

inline std::string to_string(MarginLossKind k) {
  switch (k) {
    case MarginLossKind::exponential: return "exponential";
    case MarginLossKind::logistic: return "logistic";
    case MarginLossKind::hinge: return "hinge";
  }
  return "unknown";
}

inline std::optional<MarginLossKind> parse_margin_loss(std::string_view s) {
  for (auto k : {MarginLossKind::exponential, MarginLossKind::logistic,
                 MarginLossKind::hinge})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

/// Loss of a margin a = y <w, x>.
struct MarginLoss {
  MarginLossKind kind;

  /// Inputs of the exponential loss are clipped at -700 so exp never overflows.
  static constexpr double exp_clip = -700.0;

  double value(double a) const {
    switch (kind) {
      case MarginLossKind::exponential:
        return std::exp(-std::max(a, exp_clip));
      case MarginLossKind::logistic:
        return a >= 0.0 ? std::log1p(std::exp(-a)) : -a + std::log1p(std::exp(a));
      case MarginLossKind::hinge:
        return std::max(0.0, 1.0 - a);
    }
    return 0.0;
  }

  /// Derivative for the smooth losses, the chosen subgradient for the hinge
  /// (-1 below margin 1, 0 at and above it).
  double derivative(double a) const {
    switch (kind) {
      case MarginLossKind::exponential:
        return -std::exp(-std::max(a, exp_clip));
      case MarginLossKind::logistic:
        if (a >= 0.0) {
          const double e = std::exp(-a);
          return -e / (1.0 + e);
        }
        return -1.0 / (1.0 + std::exp(a));
      case MarginLossKind::hinge:
        return a < 1.0 ? -1.0 : 0.0;
    }
    return 0.0;
  }

  bool smooth() const { return kind != MarginLossKind::hinge; }
};

/// Iterates of a primal method with the summed loss at each iterate and, for
/// classification methods, the unnormalized margin min_i <w_t, y_i x_i>.
struct PrimalTrace {
  std::vector<Vector> iterates;
  std::vector<double> objective;
  std::vector<double> margins;
};

inline Vector normalized(const Vector& w) {
  const double n = w.norm();
  return n > 0.0 ? Vector(w / n) : Vector(w);
}

namespace detail {
inline void record_margin_iterate(PrimalTrace& tr, const Vector& w,
                                  const Matrix& rows, const MarginLoss& loss) {
  const Vector m = rows * w;
  double obj = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) obj += loss.value(m(i));
  tr.iterates.push_back(w);
  tr.objective.push_back(obj);
  tr.margins.push_back(m.minCoeff());
}

inline void check_start(const Dataset& data, const Vector& w0) {
  if (static_cast<std::size_t>(w0.size()) != data.d())
    throw dimension_error("baseline: w0 has the wrong dimension");
}
}  // namespace detail

/// w_{t+1} = w_t - gamma sum_i y_i x_i l'(y_i <w_t, x_i>) for a smooth loss.
inline PrimalTrace gd_margin_loss(const Dataset& data, MarginLossKind kind,
                                  double gamma, std::size_t iterations,
                                  const Vector& w0) {
  const MarginLoss loss{kind};
  if (!loss.smooth())
    throw invalid_argument("gd_margin_loss: the hinge loss is not smooth");
  if (!(gamma > 0.0)) throw invalid_argument("gd_margin_loss: gamma must be > 0");
  detail::check_start(data, w0);
  const Matrix rows = signed_matrix(data).rows();
  PrimalTrace tr;
  Vector w = w0;
  detail::record_margin_iterate(tr, w, rows, loss);
  for (std::size_t t = 0; t < iterations; ++t) {
    const Vector m = rows * w;
    const Vector dl = m.unaryExpr([&](double a) { return loss.derivative(a); });
    w -= gamma * (rows.transpose() * dl);
    detail::record_margin_iterate(tr, w, rows, loss);
  }
  return tr;
}

/// Constant step gamma, or gamma0 / sqrt(t + 1).
struct StepRule {
  enum class kind { constant, inv_sqrt } rule = kind::constant;
  double gamma = 1e-2;

  double at(std::size_t t) const {
    return rule == kind::constant
               ? gamma
               : gamma / std::sqrt(static_cast<double>(t) + 1.0);
  }
};

/// w_{t+1} = w_t - gamma_t sum_i y_i x_i g_i, g_i = -1 if the margin of point
/// i is below 1 and 0 otherwise.
inline PrimalTrace subgrad_hinge(const Dataset& data, StepRule step,
                                 std::size_t iterations, const Vector& w0) {
  if (!(step.gamma > 0.0)) throw invalid_argument("subgrad_hinge: gamma must be > 0");
  detail::check_start(data, w0);
  const MarginLoss loss{MarginLossKind::hinge};
  const Matrix rows = signed_matrix(data).rows();
  PrimalTrace tr;
  Vector w = w0;
  detail::record_margin_iterate(tr, w, rows, loss);
  for (std::size_t t = 0; t < iterations; ++t) {
    const Vector m = rows * w;
    const Vector g = m.unaryExpr([&](double a) { return loss.derivative(a); });
    w -= step.at(t) * (rows.transpose() * g);
    detail::record_margin_iterate(tr, w, rows, loss);
  }
  return tr;
}

/// w_{t+1} = w_t - gamma X'(X w_t - y).
inline PrimalTrace gd_least_squares(const Matrix& x, const Vector& y,
                                    double gamma, std::size_t iterations,
                                    const Vector& w0) {
  if (x.rows() != y.size() || x.cols() != w0.size())
    throw dimension_error("gd_least_squares: dimension mismatch");
  if (!(gamma > 0.0)) throw invalid_argument("gd_least_squares: gamma must be > 0");
  PrimalTrace tr;
  Vector w = w0;
  tr.iterates.push_back(w);
  tr.objective.push_back(0.5 * (x * w - y).squaredNorm());
  for (std::size_t t = 0; t < iterations; ++t) {
    w -= gamma * (x.transpose() * (x * w - y));
    tr.iterates.push_back(w);
    tr.objective.push_back(0.5 * (x * w - y).squaredNorm());
  }
  return tr;
}

}  // namespace diagreg

#endif  // DIAGREG_BASELINES_HPP
