#ifndef DIAGREG_SOLVERS_HPP
#define DIAGREG_SOLVERS_HPP

// Diagonal proximal-gradient solvers on the dual of the penalized hinge loss:
// projected dual GD (alg1), its inertial variant (alg2), and the fixed-lambda
// Tikhonov solver.

#include "metrics.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "prox.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace diagreg {

enum class ScheduleFamily { constant, log, sqrt, linear, quadratic, exponential };

inline std::string to_string(ScheduleFamily f) {
  switch (f) {
    case ScheduleFamily::constant: return "constant";
    case ScheduleFamily::log: return "log";
    case ScheduleFamily::sqrt: return "sqrt";
    case ScheduleFamily::linear: return "linear";
    case ScheduleFamily::quadratic: return "quadratic";
    case ScheduleFamily::exponential: return "exponential";
  }
  return "unknown";
}

inline std::optional<ScheduleFamily> parse_schedule_family(std::string_view s) {
  for (auto f : {ScheduleFamily::constant, ScheduleFamily::log,
                 ScheduleFamily::sqrt, ScheduleFamily::linear,
                 ScheduleFamily::quadratic, ScheduleFamily::exponential})
    if (s == to_string(f)) return f;
  return std::nullopt;
}

/// lambda_t = lambda0 / max(1, g(t)) with g in {1, log t, sqrt t, t, t^2, 2^t}.
struct Schedule {
  ScheduleFamily family = ScheduleFamily::linear;
  double lambda0 = 1.0;
};

inline double schedule_value(const Schedule& s, std::size_t t) {
  const double x = static_cast<double>(t);
  double g = 1.0;
  switch (s.family) {
    case ScheduleFamily::constant: g = 1.0; break;
    case ScheduleFamily::log: g = t > 0 ? std::log(x) : 1.0; break;
    case ScheduleFamily::sqrt: g = std::sqrt(x); break;
    case ScheduleFamily::linear: g = x; break;
    case ScheduleFamily::quadratic: g = x * x; break;
    case ScheduleFamily::exponential: g = std::exp2(x); break;
  }
  g = std::max(1.0, g);
  // Floor at the smallest normal double so that 1/lambda stays finite.
  return std::max(s.lambda0 / g, std::numeric_limits<double>::min());
}

enum class Algorithm { alg1, alg2 };

struct SolverConfig {
  Schedule schedule;
  std::optional<double> gamma;  ///< nullopt: 0.999 / |Q|_op
  double alpha = 3.0;           ///< inertia parameter, alg2 only
  std::size_t iterations = 1000;
  std::optional<Vector> u0;     ///< nullopt: the zero vector
};

inline constexpr double gamma_safety = 0.999;

inline double resolve_gamma(const SolverConfig& c, const SignedGram& g) {
  if (c.gamma) {
    if (!(*c.gamma > 0.0)) throw invalid_argument("gamma must be positive");
    if (*c.gamma > 1.0 / g.op_norm())
      throw invalid_argument("gamma " + format_double(*c.gamma) +
                             " exceeds 1/|Q|_op = " +
                             format_double(1.0 / g.op_norm()));
    return *c.gamma;
  }
  if (!(g.op_norm() > 0.0))
    throw invalid_argument("cannot choose gamma: the signed Gram matrix is zero");
  return gamma_safety / g.op_norm();
}

/// Everything a dual solver reads: the data, its kernel, the signed Gram
/// matrix and, for the linear kernel, the signed rows used for w = -X'u.
struct DualProblem {
  Dataset data;
  Kernel kernel;
  SignedGram gram;
  std::optional<SignedMatrix> rows;

  DualProblem(Dataset d, Kernel k)
      : data(std::move(d)), kernel(k), gram(diagreg::gram(data, kernel)) {
    if (kernel.is_linear()) rows = signed_matrix(data);
  }

  Vector primal(const Vector& u) const {
    return rows ? dual_to_primal(u, *rows) : Vector();
  }
};

struct SolverState {
  std::size_t t = 0;
  Vector u;
  Vector u_prev;
  Vector w;  ///< empty for non-linear kernels
  double lambda_t = 0.0;
};

inline SolverState initial_state(const DualProblem& p, const SolverConfig& c) {
  const auto n = static_cast<Eigen::Index>(p.data.n());
  SolverState s;
  s.lambda_t = schedule_value(c.schedule, 0);
  s.u = c.u0 ? *c.u0 : Vector::Zero(n);
  if (s.u.size() != n) throw dimension_error("u0 has the wrong dimension");
  if (!in_box(s.u, s.lambda_t))
    throw invalid_argument("u0 must lie in [-1/lambda0, 0]^n");
  s.u_prev = s.u;
  s.w = p.primal(s.u);
  return s;
}

namespace detail {
inline double step_size(const SolverConfig& c) {
  if (!c.gamma)
    throw invalid_argument("step: gamma must be resolved before stepping");
  return *c.gamma;
}

inline SolverState forward_backward(const SolverState& s, const Vector& z,
                                    const DualProblem& p,
                                    const SolverConfig& c) {
  const double gamma = step_size(c);
  const Vector g = z - gamma * (p.gram.q() * z);
  SolverState next;
  next.t = s.t + 1;
  next.u = prox_conj_hinge_vec(g, ProxParams(gamma, s.lambda_t));
  next.u_prev = s.u;
  next.w = p.primal(next.u);
  next.lambda_t = schedule_value(c.schedule, next.t);
  return next;
}
}  // namespace detail

/// u+ = prox(u - gamma Q u) with the box [-1/lambda_t, 0]; c.gamma must be set.
inline SolverState step_alg1(const SolverState& s, const DualProblem& p,
                             const SolverConfig& c) {
  return detail::forward_backward(s, s.u, p, c);
}

/// Inertial step from z = u + t/(t+alpha) (u - u_prev); requires t >= 1.
inline SolverState step_alg2(const SolverState& s, const DualProblem& p,
                             const SolverConfig& c) {
  if (s.t < 1) throw invalid_argument("step_alg2: requires t >= 1");
  if (c.alpha < 3.0) throw invalid_argument("step_alg2: alpha must be >= 3");
  const double t = static_cast<double>(s.t);
  const double extrapolation = t / (t + c.alpha);
  const Vector z = s.u + extrapolation * (s.u - s.u_prev);
  return detail::forward_backward(s, z, p, c);
}

struct Trace {
  std::vector<MetricRow> rows;
  SolverState final_state;
  double gamma = 0.0;
  double op_norm = 0.0;
};

/// Optional inputs that switch on extra trace columns.
struct TraceInputs {
  const OracleSolution* oracle = nullptr;
  const Dataset* test = nullptr;
};

namespace detail {

class RowRecorder {
 public:
  RowRecorder(const DualProblem& p, const SolverConfig& c, Algorithm a,
              TraceInputs in, double gamma)
      : p_(p), c_(c), algorithm_(a), in_(in), gamma_(gamma) {
    if (in_.test) {
      test_scores_ = cross_kernel(p_.data, p_.kernel, in_.test->points());
      test_labels_ = in_.test->labels();
    }
    if (in_.oracle && p_.rows && in_.oracle->w_star.size() == 0)
      throw invalid_argument("trace: linear problem needs an oracle with w*");
  }

  MetricRow record(const SolverState& s) const {
    MetricRow row;
    row.t = s.t;
    row.lambda_t = s.lambda_t;
    const Vector qu = p_.gram.q() * s.u;
    const double d = dual_objective_t(s.u, s.lambda_t, p_.gram);
    row.dual_obj = d;
    if (p_.rows) {
      row.margin = margin(s.w, *p_.rows);
      row.primal_norm = s.w.norm();
    } else {
      row.margin = margin_from_dual(qu);
      row.primal_norm = std::sqrt(std::max(0.0, s.u.dot(qu)));
    }
    if (const OracleSolution* sol = in_.oracle) {
      row.dual_gap = d - sol->dual_value;
      row.norm_error = p_.rows ? (s.w - sol->w_star).norm()
                               : norm_error_from_dual(s.u, p_.gram, *sol);
      if (*row.primal_norm > default_norm_floor) {
        if (p_.rows) {
          row.margin_gap = margin_gap(s.w, *sol, *p_.rows);
          row.angle_gap = angle_gap(s.w, *sol);
        } else {
          row.margin_gap = margin_gap_from_dual(s.u, qu, *sol);
          row.angle_gap = angle_gap_from_dual(s.u, qu, *sol);
        }
      }
      if (algorithm_ == Algorithm::alg2 && s.t >= 1)
        row.energy =
            inertial_energy(s.t, s.u, s.u_prev, *sol, c_.alpha, gamma_, d);
    }
    if (in_.test) {
      const Vector scores = -(test_scores_ * s.u);
      row.test_error = zero_one_error(scores, test_labels_);
    }
    return row;
  }

 private:
  const DualProblem& p_;
  const SolverConfig& c_;
  Algorithm algorithm_;
  TraceInputs in_;
  double gamma_;
  Matrix test_scores_;
  Vector test_labels_;
};

}  // namespace detail

/// Runs exactly `iterations` steps and records T+1 rows (t = 0..T). The
/// inertial run starts from u_0 = u_1, so its first update is made at t = 1.
inline Trace run(const DualProblem& p, SolverConfig c, Algorithm a,
                 TraceInputs in = {}) {
  c.gamma = resolve_gamma(c, p.gram);
  if (a == Algorithm::alg2 && c.alpha < 3.0)
    throw invalid_argument("alg2 requires alpha >= 3");
  const detail::RowRecorder recorder(p, c, a, in, *c.gamma);

  Trace trace;
  trace.gamma = *c.gamma;
  trace.op_norm = p.gram.op_norm();
  trace.rows.reserve(c.iterations + 1);

  SolverState s = initial_state(p, c);
  trace.rows.push_back(recorder.record(s));
  for (std::size_t t = 0; t < c.iterations; ++t) {
    if (a == Algorithm::alg1) {
      s = step_alg1(s, p, c);
    } else if (s.t == 0) {
      // u_1 = u_0: advance the clock only.
      s.t = 1;
      s.lambda_t = schedule_value(c.schedule, 1);
    } else {
      s = step_alg2(s, p, c);
    }
    trace.rows.push_back(recorder.record(s));
  }
  trace.final_state = std::move(s);
  return trace;
}

struct TikhonovResult {
  Vector u;
  Vector w;  ///< empty when no signed rows were given
  std::size_t iterations = 0;
  bool converged = false;
};

/// Fixed-lambda proximal gradient on D_lambda from u = 0, stopped when
/// |u_{k+1} - u_k| <= tol * gamma or after max_iter steps.
inline TikhonovResult solve_tikhonov_dual(const SignedGram& g, double lambda,
                                          double gamma, double tol,
                                          std::size_t max_iter) {
  if (!(tol > 0.0)) throw invalid_argument("solve_tikhonov_dual: tol must be > 0");
  if (gamma > 1.0 / g.op_norm())
    throw invalid_argument("solve_tikhonov_dual: gamma exceeds 1/|Q|_op");
  const ProxParams params(gamma, lambda);
  TikhonovResult r;
  r.u = Vector::Zero(static_cast<Eigen::Index>(g.n()));
  while (r.iterations < max_iter) {
    ++r.iterations;
    Vector next = prox_conj_hinge_vec(r.u - gamma * (g.q() * r.u), params);
    const double moved = (next - r.u).norm();
    r.u = std::move(next);
    if (moved <= tol * gamma) {
      r.converged = true;
      break;
    }
  }
  return r;
}

inline TikhonovResult solve_tikhonov_dual(const SignedGram& g,
                                          const SignedMatrix& xs, double lambda,
                                          double gamma, double tol,
                                          std::size_t max_iter) {
  TikhonovResult r = solve_tikhonov_dual(g, lambda, gamma, tol, max_iter);
  r.w = dual_to_primal(r.u, xs);
  return r;
}

/// |w|^2/2 + (1/lambda) sum_i max(0, 1 - <w, y_i x_i>).
inline double tikhonov_primal_objective(const Vector& w, const SignedMatrix& xs,
                                        double lambda) {
  const Vector m = xs.rows() * w;
  return 0.5 * w.squaredNorm() + (1.0 - m.array()).cwiseMax(0.0).sum() / lambda;
}

/// Same objective evaluated through the Gram matrix at w = -Phi'u.
inline double tikhonov_primal_objective(const Vector& u, const SignedGram& g,
                                        double lambda) {
  const Vector qu = g.q() * u;
  return 0.5 * u.dot(qu) + (1.0 + qu.array()).cwiseMax(0.0).sum() / lambda;
}

}  // namespace diagreg

#endif  // DIAGREG_SOLVERS_HPP
