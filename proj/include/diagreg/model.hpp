#ifndef DIAGREG_MODEL_HPP
#define DIAGREG_MODEL_HPP

// Core domain types: labeled data, the signed data matrix, kernels, the
// signed Gram matrix and the two dual objectives built on it.

#include "core.hpp"

#include <cstddef>
#include <string>
#include <utility>

namespace diagreg {

/// Labeled points with labels in {-1, +1}; points are the rows of an n x d
/// matrix.
class Dataset {
 public:
  Dataset(Matrix points, Vector labels)
      : points_(std::move(points)), labels_(std::move(labels)) {
    if (points_.rows() < 1)
      throw invalid_argument("Dataset: at least one point is required");
    if (points_.rows() != labels_.size())
      throw dimension_error("Dataset: " + std::to_string(points_.rows()) +
                            " points but " + std::to_string(labels_.size()) +
                            " labels");
    for (Eigen::Index i = 0; i < labels_.size(); ++i) {
      if (labels_(i) != 1.0 && labels_(i) != -1.0)
        throw invalid_argument("Dataset: label " + std::to_string(i) +
                               " is not +1 or -1");
    }
  }

  const Matrix& points() const { return points_; }
  const Vector& labels() const { return labels_; }
  std::size_t n() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(points_.cols()); }

  Vector point(std::size_t i) const {
    return points_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  double label(std::size_t i) const {
    return labels_(static_cast<Eigen::Index>(i));
  }

 private:
  Matrix points_;
  Vector labels_;
};

/// Rows y_i * x_i. The dual iteration only ever sees data through this matrix
/// (or its Gram matrix).
class SignedMatrix {
 public:
  explicit SignedMatrix(Matrix rows) : rows_(std::move(rows)) {}
  const Matrix& rows() const { return rows_; }
  std::size_t n() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(rows_.cols()); }

 private:
  Matrix rows_;
};

inline SignedMatrix signed_matrix(const Dataset& data) {
  return SignedMatrix(data.labels().asDiagonal() * data.points());
}

/// Linear kernel <x, x'> or Gaussian kernel exp(-|x - x'|^2 / (2 sigma2)).
class Kernel {
 public:
  enum class kind { linear, gaussian };

  static Kernel linear() { return Kernel(kind::linear, 0.0); }
  static Kernel gaussian(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw invalid_argument("Kernel: gaussian sigma2 must be positive");
    return Kernel(kind::gaussian, sigma2);
  }

  kind type() const { return kind_; }
  bool is_linear() const { return kind_ == kind::linear; }
  double sigma2() const { return sigma2_; }

  template <typename A, typename B>
  double operator()(const Eigen::MatrixBase<A>& a,
                    const Eigen::MatrixBase<B>& b) const {
    if (a.size() != b.size())
      throw dimension_error("Kernel: argument dimensions differ");
    if (kind_ == kind::linear) return a.dot(b);
    return std::exp(-(a - b).squaredNorm() / (2.0 * sigma2_));
  }

  std::string name() const {
    return kind_ == kind::linear ? "linear"
                                 : "gaussian(" + format_double(sigma2_) + ")";
  }

 private:
  Kernel(kind k, double s) : kind_(k), sigma2_(s) {}
  kind kind_;
  double sigma2_;
};

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from the normalized all-ones vector. A second run from a fixed
/// non-constant vector covers the case where the ones vector is an
/// eigenvector of a smaller eigenvalue; the larger estimate wins. Returns 0
/// for the zero matrix.
inline double operator_norm(const Matrix& q) {
  const Eigen::Index n = q.rows();
  if (n == 0 || q.cols() != n)
    throw dimension_error("operator_norm: matrix must be square and non-empty");
  constexpr int max_iter = 20000;
  constexpr double stall = 1e-15;

  double best = 0.0;
  for (int start = 0; start < 2; ++start) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = start == 0 ? 1.0 : std::sin(1.0 + 0.618 * static_cast<double>(i));
    v.normalize();
    double rho = 0.0;
    double growth = 0.0;
    int quiet = 0;
    for (int k = 0; k < max_iter; ++k) {
      Vector y = q * v;
      growth = y.norm();
      if (growth == 0.0) break;
      const double next = v.dot(y);
      v = y / growth;
      if (std::abs(next - rho) <= stall * std::abs(next)) {
        if (++quiet >= 3) {
          rho = next;
          break;
        }
      } else {
        quiet = 0;
      }
      rho = next;
    }
    if (growth > 0.0) best = std::max({best, rho, growth});
  }
  return best;
}

/// Q_ij = y_i y_j K(x_i, x_j) together with its cached spectral norm.
class SignedGram {
 public:
  /// Wraps an already-built matrix; it must be square and symmetric.
  explicit SignedGram(Matrix q) : q_(std::move(q)) {
    if (q_.rows() == 0 || q_.rows() != q_.cols())
      throw dimension_error("SignedGram: matrix must be square and non-empty");
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw invalid_argument("SignedGram: matrix is not symmetric");
    op_norm_ = operator_norm(q_);
  }

  const Matrix& q() const { return q_; }
  double op_norm() const { return op_norm_; }
  std::size_t n() const { return static_cast<std::size_t>(q_.rows()); }

 private:
  Matrix q_;
  double op_norm_ = 0.0;
};

inline SignedGram gram(const Dataset& data, const Kernel& kernel) {
  const auto n = static_cast<Eigen::Index>(data.n());
  Matrix q(n, n);
  if (kernel.is_linear()) {
    const Matrix rows = signed_matrix(data).rows();
    q.setZero();
    q.selfadjointView<Eigen::Lower>().rankUpdate(rows);
    q.triangularView<Eigen::StrictlyUpper>() =
        q.transpose().triangularView<Eigen::StrictlyUpper>();
  } else {
    const Matrix& x = data.points();
    const Vector& y = data.labels();
    for (Eigen::Index i = 0; i < n; ++i) {
      q(i, i) = 1.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        const double v = y(i) * y(j) * kernel(x.row(i), x.row(j));
        q(i, j) = v;
        q(j, i) = v;
      }
    }
  }
  return SignedGram(std::move(q));
}

/// True when every coordinate of u lies in [-1/lambda, 0] up to `tol`.
inline bool in_box(const Vector& u, double lambda, double tol = 1e-12) {
  const double lower = -1.0 / lambda;
  const double slack_low = tol * std::max(1.0, std::abs(lower));
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u(i) > tol || u(i) < lower - slack_low) return false;
  }
  return true;
}

namespace detail {
inline void check_dual_size(const Vector& u, std::size_t n, const char* who) {
  if (static_cast<std::size_t>(u.size()) != n)
    throw dimension_error(std::string(who) + ": dual point has " +
                          std::to_string(u.size()) + " coordinates, expected " +
                          std::to_string(n));
}
inline double quadratic_part(const Vector& u, const SignedGram& g) {
  return 0.5 * u.dot(g.q() * u) + u.sum();
}
}  // namespace detail

/// Regularized dual D_lambda(u) = u'Qu/2 + sum(u) on [-1/lambda, 0]^n,
/// +infinity elsewhere.
inline double dual_objective_t(const Vector& u, double lambda,
                               const SignedGram& g) {
  if (!(lambda > 0.0))
    throw invalid_argument("dual_objective_t: lambda must be positive");
  detail::check_dual_size(u, g.n(), "dual_objective_t");
  if (!in_box(u, lambda)) return infinity;
  return detail::quadratic_part(u, g);
}

/// Min-norm dual D_inf(u) = u'Qu/2 + sum(u) on u <= 0, +infinity elsewhere.
inline double dual_objective_inf(const Vector& u, const SignedGram& g) {
  detail::check_dual_size(u, g.n(), "dual_objective_inf");
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u(i) > 1e-12) return infinity;
  return detail::quadratic_part(u, g);
}

/// w = -X'u.
inline Vector dual_to_primal(const Vector& u, const SignedMatrix& xs) {
  detail::check_dual_size(u, xs.n(), "dual_to_primal");
  return -(xs.rows().transpose() * u);
}

/// Sign with the tie broken towards +1.
inline int classify(double score) { return score >= 0.0 ? 1 : -1; }

/// score(x) = -sum_i u_i y_i K(x_i, x).
inline double predict(const Vector& u, const Dataset& train,
                      const Kernel& kernel, const Vector& x) {
  detail::check_dual_size(u, train.n(), "predict");
  if (static_cast<std::size_t>(x.size()) != train.d())
    throw dimension_error("predict: query has wrong dimension");
  const Matrix& pts = train.points();
  double s = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (u(i) == 0.0) continue;
    s -= u(i) * train.labels()(i) * kernel(pts.row(i).transpose(), x);
  }
  return s;
}

/// C_ji = y_i K(x_i, z_j), so that the scores of all query points are -C u.
inline Matrix cross_kernel(const Dataset& train, const Kernel& kernel,
                           const Matrix& queries) {
  if (static_cast<std::size_t>(queries.cols()) != train.d())
    throw dimension_error("cross_kernel: query dimension mismatch");
  const Matrix& pts = train.points();
  if (kernel.is_linear()) {
    return queries * (train.labels().asDiagonal() * pts).transpose();
  }
  Matrix c(queries.rows(), pts.rows());
  for (Eigen::Index j = 0; j < queries.rows(); ++j)
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      c(j, i) = train.labels()(i) * kernel(pts.row(i), queries.row(j));
  return c;
}

}  // namespace diagreg

#endif  // DIAGREG_MODEL_HPP
