#ifndef DIAGREG_METRICS_HPP
#define DIAGREG_METRICS_HPP

#include "model.hpp"
#include "oracle.hpp"

#include <algorithm>
#include <optional>

namespace diagreg {

/// Raised by the normalized gaps when the iterate is (numerically) zero.
class degenerate_iterate : public error {
 public:
  using error::error;
};

inline constexpr double default_norm_floor = 1e-12;

/// One row of a solver trace. Optional fields are present iff their inputs
/// (oracle, test set, inertial state) were available.
struct MetricRow {
  std::size_t t = 0;
  std::optional<double> lambda_t;
  std::optional<double> dual_obj;
  std::optional<double> dual_gap;
  std::optional<double> norm_error;
  double margin = 0.0;
  std::optional<double> margin_gap;
  std::optional<double> angle_gap;
  std::optional<double> test_error;
  std::optional<double> energy;
  std::optional<double> primal_norm;  // |w_t|; not part of the CSV schema
};

/// M(w) = min_i <w, y_i x_i>.
inline double margin(const Vector& w, const SignedMatrix& xs) {
  if (static_cast<std::size_t>(w.size()) != xs.d())
    throw dimension_error("margin: dimension mismatch");
  return (xs.rows() * w).minCoeff();
}

/// M(w*/|w*|) - M(w/|w|).
inline double margin_gap(const Vector& w, const OracleSolution& sol,
                         const SignedMatrix& xs,
                         double norm_floor = default_norm_floor) {
  const double nw = w.norm();
  if (nw <= norm_floor) throw degenerate_iterate("margin_gap: |w| too small");
  return sol.margin_at_w_star / sol.norm_w_star - margin(w, xs) / nw;
}

/// 1 - cos(w, w*), in [0, 2].
inline double angle_gap(const Vector& w, const OracleSolution& sol,
                        double norm_floor = default_norm_floor) {
  const double nw = w.norm();
  if (nw <= norm_floor) throw degenerate_iterate("angle_gap: |w| too small");
  if (w.size() != sol.w_star.size())
    throw dimension_error("angle_gap: dimension mismatch");
  const double cosine = w.dot(sol.w_star) / (nw * sol.norm_w_star);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

// Kernel forms of the same quantities, with w = -Phi'u never formed:
// |w|^2 = u'Qu, <w, w*> = u'Qu*, margins = -Qu.

inline double margin_from_dual(const Vector& qu) { return (-qu).minCoeff(); }

inline double norm_error_from_dual(const Vector& u, const SignedGram& g,
                                   const OracleSolution& sol) {
  const Vector diff = u - sol.u_star;
  return std::sqrt(std::max(0.0, diff.dot(g.q() * diff)));
}

inline double margin_gap_from_dual(const Vector& u, const Vector& qu,
                                   const OracleSolution& sol,
                                   double norm_floor = default_norm_floor) {
  const double nw = std::sqrt(std::max(0.0, u.dot(qu)));
  if (nw <= norm_floor) throw degenerate_iterate("margin_gap: |w| too small");
  return sol.margin_at_w_star / sol.norm_w_star - margin_from_dual(qu) / nw;
}

inline double angle_gap_from_dual(const Vector& u, const Vector& qu,
                                  const OracleSolution& sol,
                                  double norm_floor = default_norm_floor) {
  const double nw = std::sqrt(std::max(0.0, u.dot(qu)));
  if (nw <= norm_floor) throw degenerate_iterate("angle_gap: |w| too small");
  const double cosine = qu.dot(sol.u_star) / (nw * sol.norm_w_star);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

/// Fraction of misclassified points for precomputed scores (tie -> +1).
inline double zero_one_error(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size() || labels.size() == 0)
    throw invalid_argument("zero_one_error: empty or mismatched test set");
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (classify(scores(i)) != static_cast<int>(labels(i))) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

inline double zero_one_error(const Vector& u, const Dataset& train,
                             const Kernel& kernel, const Dataset& test) {
  const Vector scores = -(cross_kernel(train, kernel, test.points()) * u);
  return zero_one_error(scores, test.labels());
}

/// Lyapunov energy of the inertial iteration with nu = alpha - 1:
///   (t+alpha-1)^2 (D_t(u_t) - D_inf(u*))
///     + |nu (u_{t-1} - u*) + (t+alpha-1)(u_t - u_{t-1})|^2 / (2 gamma).
inline double inertial_energy(std::size_t t, const Vector& u_t,
                              const Vector& u_prev, const OracleSolution& sol,
                              double alpha, double gamma, double dual_obj_t) {
  if (alpha < 3.0) throw invalid_argument("inertial_energy: alpha must be >= 3");
  if (!(gamma > 0.0)) throw invalid_argument("inertial_energy: gamma must be > 0");
  const double k = static_cast<double>(t) + alpha - 1.0;
  const double nu = alpha - 1.0;
  const Vector v = nu * (u_prev - sol.u_star) + k * (u_t - u_prev);
  return k * k * (dual_obj_t - sol.dual_value) + v.squaredNorm() / (2.0 * gamma);
}

/// Upper bounds on the angle and margin gaps implied by |w_t - w*| when
/// |w_t| >= delta = |w*| / 2.
struct AngleMarginBounds {
  double angle = 0.0;
  double margin = 0.0;
};

inline AngleMarginBounds angle_margin_bounds(double norm_error,
                                             double norm_w_star,
                                             double frobenius) {
  const double delta = 0.5 * norm_w_star;
  return {norm_error * norm_error / (2.0 * delta * norm_w_star),
          frobenius * norm_error / (delta * norm_w_star)};
}

}  // namespace diagreg

#endif  // DIAGREG_METRICS_HPP
