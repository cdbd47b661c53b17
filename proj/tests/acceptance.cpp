#include "diagreg/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace diagreg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string verdict(bool ok) { return ok ? "ok" : "FAILED"; }

Dataset anchor_data() { return make_dataset(DataConfig{}).train; }

Dataset random_separable(Rng& rng, std::size_t n, std::size_t d, double gap) {
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& c : v) c = rng.normal();
  v.normalize();
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows();) {
    Vector p(static_cast<Eigen::Index>(d));
    for (auto& c : p) c = rng.uniform(-3.0, 3.0);
    const double s = p.dot(v);
    if (std::abs(s) < gap) continue;
    x.row(i) = p.transpose();
    y(i) = s > 0.0 ? 1.0 : -1.0;
    ++i;
  }
  return Dataset(x, y);
}

SolverConfig linear_schedule(double lambda0, std::size_t iterations) {
  SolverConfig c;
  c.schedule = {ScheduleFamily::linear, lambda0};
  c.iterations = iterations;
  return c;
}

Outcome prox_equivalence() {
  Rng rng(derive_seed(1, 0));
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double p = rng.uniform(-10.0, 10.0);
    const double gamma = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const double lambda = std::exp(rng.uniform(std::log(1e-2), std::log(10.0)));
    const double fast = prox_conj_hinge(p, ProxParams(gamma, lambda));
    const double slow = prox_bruteforce(p, gamma, lambda, 10'001, 3);
    worst = std::max(worst, std::abs(fast - slow));
  }
  return {worst <= 1e-5, "max |prox - grid argmin| = " + g(worst) + " over 1000 triples"};
}

Outcome exact_solution() {
  const auto sol = solve_max_margin(anchor_data(), Kernel::linear());
  const double dw = (sol.w_star - Eigen::Vector2d(0.5, 0.5)).norm();
  const double dm = std::abs(sol.margin_at_w_star - 1.0);
  return {dw <= 1e-6 && dm <= 1e-6,
          "|w* - (1/2,1/2)| = " + g(dw) + ", |M(w*) - 1| = " + g(dm)};
}

Outcome alg1_convergence() {
  const Dataset data = anchor_data();
  const auto sol = solve_max_margin(data, Kernel::linear());
  const DualProblem p(data, Kernel::linear());
  const Trace tr = run(p, linear_schedule(4.0, 1000), Algorithm::alg1, {&sol, nullptr});
  const double err = (tr.final_state.w - sol.w_star).norm();
  double worst_rise = 0.0;
  for (std::size_t t = 1; t < tr.rows.size(); ++t)
    worst_rise = std::max(worst_rise, *tr.rows[t].dual_obj - *tr.rows[t - 1].dual_obj);
  const bool mono = worst_rise <= 1e-10;
  return {err <= 1e-3 && mono,
          "|w_T - w*| = " + g(err) + " (" + verdict(err <= 1e-3) +
              "), max dual_obj increase = " + g(worst_rise) + " (" + verdict(mono) + ")"};
}

Outcome linear_rate() {
  const Dataset data = gen_support_anchor(4, 0);
  const auto sol = solve_max_margin(data, Kernel::linear());
  const DualProblem p(data, Kernel::linear());
  const double lambda0 = 1.0 / sol.u_star.norm();
  const Trace tr = run(p, linear_schedule(lambda0, 2000), Algorithm::alg1, {&sol, nullptr});
  const Vector u0 = Vector::Zero(4);
  const auto est = estimate_mu(data, u0, sol);
  const double gm = tr.gamma * est.mu;
  const double rho = 1.0 - gm / (1.0 + gm);
  const double d0 = dual_objective_t(u0, lambda0, p.gram) - sol.dual_value;

  const Vector w0 = Vector::Zero(2);
  const double c2 = w0.squaredNorm() - sol.norm_w_star * sol.norm_w_star +
                    (u0 - sol.u_star).sum();
  const double c = std::sqrt(std::max(0.0, c2));

  std::size_t dual_bad = 0, iter_bad = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& r : tr.rows) {
    const double t = static_cast<double>(r.t);
    if (*r.dual_gap > d0 * std::pow(rho, t) + 1e-12) ++dual_bad;
    if (*r.norm_error > c * std::pow(rho, t / 2.0) + 1e-12) ++iter_bad;
    if (*r.norm_error > 1e-12) {
      const double y = std::log(*r.norm_error);
      sx += t; sy += y; sxx += t * t; sxy += t * y; ++m;
    }
  }
  const double bound_slope = 0.5 * std::log(rho);
  double slope = -infinity;
  if (m >= 2) {
    const double md = static_cast<double>(m);
    slope = (md * sxy - sx * sy) / (md * sxx - sx * sx);
  }
  const bool slope_ok = slope < 0.0 && slope <= bound_slope;
  const double diag = std::sqrt(2.0 * d0);
  return {dual_bad == 0 && iter_bad == 0 && slope_ok,
          "mu = " + g(est.mu) + ", rho = " + g(rho) + "; dual bound violations " +
              std::to_string(dual_bad) + "/2001 (" + verdict(dual_bad == 0) +
              "); iterate bound with C = " + g(c) + " violations " +
              std::to_string(iter_bad) + "/2001 (" + verdict(iter_bad == 0) +
              "; sqrt(2(D_0(u_0) - D_inf(u*))) = " + g(diag) + "); log-error slope " +
              g(slope) + " vs bound " + g(bound_slope) + " (" + verdict(slope_ok) + ")"};
}

Outcome inertial_guarantees() {
  const Dataset data = anchor_data();
  const auto sol = solve_max_margin(data, Kernel::linear());
  const DualProblem p(data, Kernel::linear());
  const double lambda0 = 1.0 / sol.u_star.norm();
  bool ok = true;
  std::string detail;
  for (double alpha : {3.0, 10.0}) {
    SolverConfig cfg = linear_schedule(lambda0, 2000);
    cfg.alpha = alpha;
    const Trace tr = run(p, cfg, Algorithm::alg2, {&sol, nullptr});
    const Vector u0 = Vector::Zero(static_cast<Eigen::Index>(data.n()));
    const double c =
        (alpha - 1.0) * std::sqrt(std::max(
                            0.0, -sol.norm_w_star * sol.norm_w_star +
                                     2.0 * (u0 - sol.u_star).lpNorm<1>() +
                                     (u0 - sol.u_star).squaredNorm() / tr.gamma));
    double worst_rise = -infinity;
    std::size_t bad = 0;
    for (std::size_t t = 0; t < tr.rows.size(); ++t) {
      const auto& r = tr.rows[t];
      if (t >= 1 && r.energy && tr.rows[t - 1].energy)
        worst_rise = std::max(worst_rise, *r.energy - *tr.rows[t - 1].energy);
      if (*r.norm_error > c / (static_cast<double>(r.t) + alpha - 1.0) + 1e-12) ++bad;
    }
    const bool this_ok = worst_rise <= 1e-9 && bad == 0;
    ok = ok && this_ok;
    detail += "alpha " + g(alpha) + ": max E increase " + g(worst_rise) + ", C = " + g(c) +
              ", bound violations " + std::to_string(bad) + " (" + verdict(this_ok) + "); ";
  }
  return {ok, detail};
}

Outcome grid_equivalence() {
  Rng rng(derive_seed(6, 0));
  double worst_angle = 0.0, worst_margin = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Dataset data = random_separable(rng, 25, 2, 0.1);
    const auto sol = solve_max_margin(data, Kernel::linear());
    const Vector dir = max_margin_direction_grid(data, 3600);
    const Vector ws = sol.w_star / sol.norm_w_star;
    const double cross = dir(0) * ws(1) - dir(1) * ws(0);
    worst_angle = std::max(worst_angle, std::abs(std::atan2(cross, dir.dot(ws))));
    const double m = margin(dir, signed_matrix(data));
    worst_margin = std::max(worst_margin, std::abs(m - 1.0 / sol.norm_w_star));
  }
  return {worst_angle <= 1e-3 && worst_margin <= 1e-3,
          "max angular error " + g(worst_angle) + ", max |M(v) - 1/|w*|| " + g(worst_margin)};
}

Outcome dual_primal_bound() {
  Rng rng(derive_seed(7, 0));
  std::size_t violations = 0;
  double worst = -infinity;
  for (int k = 0; k < 10; ++k) {
    const Dataset data = random_separable(rng, 15, 3, 0.2);
    const auto sol = solve_max_margin(data, Kernel::linear());
    const SignedGram gr = gram(data, Kernel::linear());
    const SignedMatrix xs = signed_matrix(data);
    const double scale = 3.0 * sol.u_star.cwiseAbs().maxCoeff();
    for (int j = 0; j < 1000; ++j) {
      Vector u(sol.u_star.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (j % 2 == 0)
          u(i) = rng.uniform01() < 0.3 ? 0.0 : -scale * rng.uniform01();
        else
          u(i) = std::min(0.0, sol.u_star(i) + 1e-2 * scale * rng.normal());
      }
      const double lhs = 0.5 * (dual_to_primal(u, xs) - sol.w_star).squaredNorm();
      const double rhs = dual_objective_inf(u, gr) - sol.dual_value;
      worst = std::max(worst, lhs - rhs);
      if (lhs > rhs + 1e-9) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) +
                               " violations over 10000 points, max (lhs - rhs) = " + g(worst)};
}

Outcome lemma_a4_bounds() {
  const Dataset data = anchor_data();
  const auto sol = solve_max_margin(data, Kernel::linear());
  const DualProblem p(data, Kernel::linear());
  const double frob = signed_matrix(data).rows().norm();
  std::vector<std::pair<Algorithm, double>> runs = {
      {Algorithm::alg1, 3.0}, {Algorithm::alg2, 3.0}, {Algorithm::alg2, 10.0}};
  std::size_t checked = 0, violations = 0;
  for (const auto& [alg, alpha] : runs) {
    for (auto family : {ScheduleFamily::linear, ScheduleFamily::sqrt}) {
      SolverConfig cfg;
      cfg.schedule = {family, 4.0};
      cfg.iterations = 1000;
      cfg.alpha = alpha;
      const Trace tr = run(p, cfg, alg, {&sol, nullptr});
      for (const auto& r : tr.rows) {
        if (*r.primal_norm < 0.5 * sol.norm_w_star || !r.angle_gap) continue;
        ++checked;
        const auto b = angle_margin_bounds(*r.norm_error, sol.norm_w_star, frob);
        if (*r.angle_gap > b.angle + 1e-9 || *r.margin_gap > b.margin + 1e-9) ++violations;
      }
    }
  }
  return {violations == 0 && checked > 0,
          std::to_string(violations) + " violations over " + std::to_string(checked) +
              " rows of 6 traces"};
}

Outcome tikhonov_path() {
  const Dataset data = anchor_data();
  const auto sol = solve_max_margin(data, Kernel::linear());
  const SignedGram gr = gram(data, Kernel::linear());
  const SignedMatrix xs = signed_matrix(data);
  const double gamma = gamma_safety / gr.op_norm();
  std::vector<double> errors;
  double worst_gap = 0.0;
  for (double lambda : {1.0, 0.1, 0.01, 0.001}) {
    const auto r = solve_tikhonov_dual(gr, xs, lambda, gamma, 1e-13, 2'000'000);
    errors.push_back((r.w - sol.w_star).norm());
    const double gap = tikhonov_primal_objective(r.w, xs, lambda) +
                       dual_objective_t(r.u, lambda, gr);
    worst_gap = std::max(worst_gap, std::abs(gap));
  }
  bool strict = true;
  for (std::size_t i = 1; i < errors.size(); ++i) strict = strict && errors[i] < errors[i - 1];
  std::string list;
  for (double e : errors) list += (list.empty() ? "" : ", ") + g(e);
  const bool ok = strict && errors.back() <= 1e-2 && worst_gap <= 1e-6;
  return {ok, "|w_lambda - w*| = [" + list + "] strictly decreasing: " + verdict(strict) +
                  "; final <= 1e-2: " + verdict(errors.back() <= 1e-2) +
                  "; max duality gap " + g(worst_gap)};
}

Outcome least_squares() {
  Rng rng(derive_seed(10, 0));
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Matrix x(3, 8);
    for (auto& c : x.reshaped()) c = rng.normal();
    Vector w(8);
    for (auto& c : w) c = rng.normal();
    const Vector y = x * w;
    const double gamma = 1.0 / operator_norm(x * x.transpose());
    const auto tr = gd_least_squares(x, y, gamma, 20000, Vector::Zero(8));
    worst = std::max(worst, (tr.iterates.back() - pseudoinverse_solution(x, y)).norm());
  }
  return {worst <= 1e-6, "max |w_T - X^+ y| = " + g(worst) + " over 20 systems"};
}

Outcome subgradient_non_regularization() {
  const Dataset data = anchor_data();
  const auto sol = solve_max_margin(data, Kernel::linear());
  const SignedMatrix xs = signed_matrix(data);
  const Vector w_plus = sol.w_star / sol.norm_w_star;
  const double pi = std::acos(-1.0);
  Vector w0 = Eigen::Vector2d(std::cos(pi / 6.0), std::sin(pi / 6.0));
  w0 *= 2.0 / margin(w0, xs);
  const auto sg = subgrad_hinge(data, StepRule{StepRule::kind::constant, 1e-3}, 1000, w0);
  const double hinge = sg.objective.back();
  const double sg_gap = (normalized(sg.iterates.back()) - w_plus).norm();

  const DualProblem p(data, Kernel::linear());
  const Trace tr = run(p, linear_schedule(4.0, 1000), Algorithm::alg1);
  const double a1_gap = (normalized(tr.final_state.w) - w_plus).norm();
  return {hinge <= 1e-9 && sg_gap > 0.05 && a1_gap < 1e-2,
          "subgradient: hinge " + g(hinge) + ", direction gap " + g(sg_gap) +
              "; Algorithm 1: direction gap " + g(a1_gap)};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome blob_pipeline() {
  const json j = json::parse(R"({
    "data": {"source": "gaussian_blobs", "n_total": 1200, "std": 0.4, "split": 0.5},
    "kernel": {"type": "gaussian", "sigma2": 0.15},
    "algorithms": ["alg1", {"type": "alg2", "alpha": 3}],
    "iterations": 2000,
    "compute_oracle": false,
    "sweep": {"lambda0": [0.01, 10, 100], "noise_p": [0, 0.1, 0.2]}
  })");
  const fs::path base = fs::temp_directory_path() / "diagreg_acceptance";
  fs::remove_all(base);
  std::vector<ExperimentResult> results;
  for (const char* sub : {"first", "second"}) {
    json c = j;
    c["output_dir"] = (base / sub).string();
    results.push_back(run_experiment(parse_config(c), c, false));
  }
  std::size_t traces = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(base / "first")) {
    const auto name = e.path().filename().string();
    if (!name.ends_with("_trace.csv")) continue;
    ++traces;
    if (read_all(e.path()) != read_all(base / "second" / name)) ++differing;
  }
  double worst_clean = 0.0;
  for (const auto& r : results.front().runs)
    if (r.noise_p == 0.0) worst_clean = std::max(worst_clean, *r.rows.back().test_error);
  const bool ok = results.front().runs.size() == 18 && traces == 18 && differing == 0 &&
                  worst_clean <= 0.1;
  return {ok, std::to_string(results.front().runs.size()) + " runs, " + std::to_string(traces) +
                  " traces, " + std::to_string(differing) +
                  " differ between reruns; worst noiseless test error " + g(worst_clean)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "prox oracle equivalence", 1.0, prox_equivalence},
      {2, "exact anchor solution", 1.0, exact_solution},
      {3, "Algorithm 1 convergence", 5.0, alg1_convergence},
      {4, "linear rate of Algorithm 1", 10.0, linear_rate},
      {5, "inertial guarantees", 10.0, inertial_guarantees},
      {6, "grid direction equals normalized min-norm solution", 30.0, grid_equivalence},
      {7, "dual-primal distance bound", 5.0, dual_primal_bound},
      {8, "angle and margin gap bounds", infinity, lemma_a4_bounds},
      {9, "Tikhonov path", 10.0, tikhonov_path},
      {10, "least-squares gradient descent", 5.0, least_squares},
      {11, "subgradient method does not regularize", infinity,
       subgradient_non_regularization},
      {12, "kernel pipeline smoke run", 120.0, blob_pipeline},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": "
              << o.detail << "; " << g(secs) << " s";
    if (std::isfinite(c.limit_s))
      std::cout << " (limit " << g(c.limit_s) << " s" << (in_time ? "" : ", exceeded") << ")";
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
