#ifndef DIAGREG_ORACLE_HPP
#define DIAGREG_ORACLE_HPP

// Reference computations that the iterative solvers are checked against.
// Nothing in here calls into solvers.hpp.

#include "model.hpp"

#include <bit>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

namespace diagreg {

class non_separable : public error {
 public:
  using error::error;
};

class iteration_cap_exceeded : public error {
 public:
  using error::error;
};

class instance_too_large : public error {
 public:
  using error::error;
};

class inconsistent_system : public error {
 public:
  using error::error;
};

struct KktResiduals {
  double primal_feasibility = 0.0;       ///< max_i max(0, 1 - margin_i)
  double dual_feasibility = 0.0;         ///< max_i max(0, u_i)
  double complementary_slackness = 0.0;  ///< max_i |u_i| |margin_i - 1| / max(1, |u|_inf)
  double stationarity = 0.0;             ///< |w + X'u|; zero for kernel solutions
  double projected_gradient = 0.0;       ///< |u - min(u - grad D_inf(u), 0)|
};

/// Min-norm separating solution w* with its dual certificate u*.
struct OracleSolution {
  Vector w_star;  ///< empty for non-linear kernels
  Vector u_star;
  double norm_w_star = 0.0;
  double margin_at_w_star = 0.0;
  double dual_value = 0.0;  ///< D_inf(u*)
  KktResiduals kkt;
  std::size_t iterations = 0;
  double tolerance = 0.0;
};

namespace detail {

inline KktResiduals certificate(const Vector& u, const Vector& margins,
                                const Vector& qu,
                                const std::optional<SignedMatrix>& rows,
                                const Vector& w) {
  KktResiduals r;
  r.primal_feasibility = std::max(0.0, (1.0 - margins.array()).maxCoeff());
  r.dual_feasibility = std::max(0.0, u.maxCoeff());
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  r.complementary_slackness =
      (u.array().abs() * (margins.array() - 1.0).abs()).maxCoeff() / scale;
  if (rows) r.stationarity = (w + rows->rows().transpose() * u).norm();
  const Vector grad = qu.array() + 1.0;
  r.projected_gradient = (u - (u - grad).cwiseMin(0.0)).norm();
  return r;
}

}  // namespace detail

/// Minimizes D_inf by projected gradient on {u <= 0} with step 1/|Q|, until
/// |u_{k+1} - u_k| <= tol * step.
///
/// On non-separable data D_inf is unbounded below and |u_k| grows linearly,
/// while on separable data it stays bounded. The run is declared
/// non-separable when |u_k| roughly doubles between k/2 and k (checked at
/// powers of two from 2^16 and at the cap) while margins are still violated,
/// or when |u_k|_inf exceeds 1e12. Throws iteration_cap_exceeded when the cap
/// is hit otherwise.
inline OracleSolution solve_max_margin(const SignedGram& g,
                                       const std::optional<SignedMatrix>& rows,
                                       double tol = 1e-10,
                                       std::size_t max_iter = 10'000'000) {
  if (!(tol > 0.0)) throw invalid_argument("solve_max_margin: tol must be > 0");
  const double lip = g.op_norm();
  if (!(lip > 0.0))
    throw non_separable("solve_max_margin: all signed features are zero");
  const double step = 1.0 / lip;
  const Matrix& q = g.q();
  const auto n = static_cast<Eigen::Index>(g.n());
  auto violation = [&](const Vector& qu) {
    return std::max(0.0, (1.0 + qu.array()).maxCoeff());
  };

  Vector u = Vector::Zero(n);
  Vector qu = Vector::Zero(n);
  bool converged = false;
  bool diverged = false;
  std::size_t k = 0;
  std::size_t next_check = std::size_t{1} << 16;
  double norm_at_half = 0.0;
  double norm_at_cap_half = 0.0;
  while (k < max_iter) {
    ++k;
    Vector next = (u - step * (qu.array() + 1.0).matrix()).cwiseMin(0.0);
    const double moved = (next - u).norm();
    u = std::move(next);
    qu.noalias() = q * u;
    if (moved <= tol * step) {
      converged = true;
      break;
    }
    if (k == max_iter / 2) norm_at_cap_half = u.norm();
    if (k == next_check / 2) norm_at_half = u.norm();
    if (k == next_check) {
      if (u.norm() >= 1.9 * norm_at_half && violation(qu) > 10.0 * tol) {
        diverged = true;
        break;
      }
      next_check *= 2;
    }
    if ((k & 1023u) == 0 && u.cwiseAbs().maxCoeff() > 1e12) {
      diverged = true;
      break;
    }
  }
  if (!converged && !diverged && u.norm() >= 1.5 * norm_at_cap_half &&
      violation(qu) > 10.0 * tol)
    diverged = true;

  OracleSolution sol;
  sol.u_star = u;
  sol.iterations = k;
  sol.tolerance = tol;
  const Vector margins = -qu;
  if (rows) {
    sol.w_star = dual_to_primal(u, *rows);
    sol.norm_w_star = sol.w_star.norm();
  } else {
    sol.norm_w_star = std::sqrt(std::max(0.0, u.dot(qu)));
  }
  sol.margin_at_w_star = margins.minCoeff();
  sol.dual_value = 0.5 * u.dot(qu) + u.sum();
  sol.kkt = detail::certificate(u, margins, qu, rows, sol.w_star);

  if (diverged)
    throw non_separable("solve_max_margin: dual iterates diverge after " +
                        std::to_string(k) + " iterations (margin violation " +
                        format_double(sol.kkt.primal_feasibility) + ")");
  if (!converged)
    throw iteration_cap_exceeded("solve_max_margin: no convergence after " +
                                 std::to_string(k) + " iterations");
  if (sol.kkt.primal_feasibility > 10.0 * tol)
    throw non_separable("solve_max_margin: margin violation " +
                        format_double(sol.kkt.primal_feasibility) +
                        " exceeds 10*tol at convergence");
  if (sol.kkt.complementary_slackness > 10.0 * tol)
    throw iteration_cap_exceeded(
        "solve_max_margin: complementary slackness residual " +
        format_double(sol.kkt.complementary_slackness) + " exceeds 10*tol");
  return sol;
}

inline OracleSolution solve_max_margin(const Dataset& data, const Kernel& kernel,
                                       double tol = 1e-10,
                                       std::size_t max_iter = 10'000'000) {
  std::optional<SignedMatrix> rows;
  if (kernel.is_linear()) rows = signed_matrix(data);
  return solve_max_margin(gram(data, kernel), rows, tol, max_iter);
}

/// Best unit direction in the plane for the margin min_i <v, y_i x_i>:
/// k-point angular grid, then golden-section refinement on the winning arc.
inline Vector max_margin_direction_grid(const Dataset& data, std::size_t k) {
  if (data.d() != 2)
    throw dimension_error("max_margin_direction_grid: data must be 2-D");
  if (k < 3) throw invalid_argument("max_margin_direction_grid: k must be >= 3");
  const Matrix rows = signed_matrix(data).rows();
  auto margin_at = [&](double theta) {
    const Eigen::Vector2d v(std::cos(theta), std::sin(theta));
    return (rows * v).minCoeff();
  };

  const double h = 2.0 * std::numbers::pi / static_cast<double>(k);
  std::size_t best = 0;
  double best_m = margin_at(0.0);
  for (std::size_t j = 1; j < k; ++j) {
    const double m = margin_at(h * static_cast<double>(j));
    if (m > best_m) {
      best_m = m;
      best = j;
    }
  }
  if (!(best_m > 0.0))
    throw non_separable("max_margin_direction_grid: no direction separates");

  double best_theta = h * static_cast<double>(best);
  double a = best_theta - h;
  double b = best_theta + h;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = margin_at(c);
  double fd = margin_at(d);
  while (b - a > 1e-13) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = margin_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = margin_at(d);
    }
  }
  const double refined = 0.5 * (a + b);
  if (margin_at(refined) > best_m) best_theta = refined;
  return Eigen::Vector2d(std::cos(best_theta), std::sin(best_theta));
}

/// argmin over a uniform grid of [-1/lambda, 0] of s + (s - p)^2 / (2 gamma).
/// Each refinement pass re-grids the two cells around the current winner;
/// the objective is strictly convex, so the minimizer never leaves them.
inline double prox_bruteforce(double p, double gamma, double lambda,
                              std::size_t grid_size,
                              std::size_t refinements = 0) {
  if (grid_size < 1000)
    throw invalid_argument("prox_bruteforce: grid_size must be >= 1000");
  if (!(gamma > 0.0) || !(lambda > 0.0))
    throw invalid_argument("prox_bruteforce: gamma and lambda must be > 0");
  double lo = -1.0 / lambda;
  double hi = 0.0;
  double best_s = lo;
  for (std::size_t pass = 0; pass <= refinements; ++pass) {
    const double spacing = (hi - lo) / static_cast<double>(grid_size - 1);
    double best_v = infinity;
    for (std::size_t k = 0; k < grid_size; ++k) {
      const double s = lo + spacing * static_cast<double>(k);
      const double v = s + (s - p) * (s - p) / (2.0 * gamma);
      if (v < best_v) {
        best_v = v;
        best_s = s;
      }
    }
    lo = std::max(-1.0 / lambda, best_s - spacing);
    hi = std::min(0.0, best_s + spacing);
  }
  return best_s;
}

/// Minimal-norm interpolant X^+ y; throws when y is not in the range of X.
inline Vector pseudoinverse_solution(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size())
    throw dimension_error("pseudoinverse_solution: row count mismatch");
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x);
  Vector w = cod.solve(y);
  const double residual = (x * w - y).norm();
  if (residual > 1e-8)
    throw inconsistent_system("pseudoinverse_solution: residual " +
                              format_double(residual) + " > 1e-8");
  return w;
}

/// Error-bound constant of the polyhedral description of the dual solution
/// set: the maximum of 1/sigma_min over every linearly independent subset of
/// the rows of [X'; 1'] and [Id; -Id]. A row of -Id has the same singular
/// values as the matching row of Id, so only one sign is enumerated.
inline double hoffman_constant(const SignedMatrix& xs) {
  const auto n = static_cast<Eigen::Index>(xs.n());
  const auto d = static_cast<Eigen::Index>(xs.d());
  if (n > 10) throw instance_too_large("hoffman_constant: n > 10");
  if (d > 12) throw instance_too_large("hoffman_constant: d > 12");
  Matrix e(d + 1, n);
  e.topRows(d) = xs.rows().transpose();
  e.row(d).setOnes();

  const std::uint32_t e_sets = 1u << static_cast<unsigned>(d + 1);
  const std::uint32_t a_sets = 1u << static_cast<unsigned>(n);
  double tau = 0.0;
  for (std::uint32_t se = 0; se < e_sets; ++se) {
    const int ke = std::popcount(se);
    if (ke > n) continue;
    for (std::uint32_t sa = 0; sa < a_sets; ++sa) {
      const int ka = std::popcount(sa);
      if (ke + ka == 0 || ke + ka > n) continue;
      Matrix b(ke + ka, n);
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i <= d; ++i)
        if (se & (1u << i)) b.row(r++) = e.row(i);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sa & (1u << i)) {
          b.row(r).setZero();
          b(r++, i) = 1.0;
        }
      }
      const Eigen::JacobiSVD<Matrix> svd(b);
      const Vector& sv = svd.singularValues();
      const double smax = sv(0);
      const double smin = sv(sv.size() - 1);
      if (!(smax > 0.0) || smin <= 1e-10 * std::max(1.0, smax)) continue;
      tau = std::max(tau, 1.0 / smin);
    }
  }
  return tau;
}

struct MuEstimate {
  double mu = 0.0;
  double tau = 0.0;
  double level = 0.0;   ///< M = D_0(u0) - D_inf(u*)
  double radius = 0.0;  ///< R = |u0| + 2 |u*|
  double x_op = 0.0;    ///< |X|_op = sqrt(|XX'|_op)
};

/// Lojasiewicz constant
///   mu = 1 / (8 tau^2 ((3 sqrt(M) + sqrt(2) |X|_op R)^2 + 2))
/// for tiny linear instances (n <= 10).
inline MuEstimate estimate_mu(const Dataset& data, const Vector& u0,
                              const OracleSolution& sol) {
  if (data.n() > 10) throw instance_too_large("estimate_mu: n > 10");
  const SignedMatrix xs = signed_matrix(data);
  const SignedGram g = gram(data, Kernel::linear());
  const double d0 = dual_objective_inf(u0, g);
  if (!std::isfinite(d0))
    throw invalid_argument("estimate_mu: u0 must be non-positive");

  MuEstimate est;
  est.tau = hoffman_constant(xs);
  est.level = std::max(0.0, d0 - sol.dual_value);
  est.radius = u0.norm() + 2.0 * sol.u_star.norm();
  est.x_op = std::sqrt(g.op_norm());
  const double inner =
      3.0 * std::sqrt(est.level) + std::sqrt(2.0) * est.x_op * est.radius;
  est.mu = 1.0 / (8.0 * est.tau * est.tau * (inner * inner + 2.0));
  return est;
}

}  // namespace diagreg

#endif  // DIAGREG_ORACLE_HPP
