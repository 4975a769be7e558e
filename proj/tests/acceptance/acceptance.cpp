// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "battery.hpp"
#include "khess/commands.hpp"
#include "khess/convexity.hpp"
#include "khess/errors.hpp"
#include "khess/field.hpp"
#include "khess/linsolve.hpp"
#include "khess/nashmoser.hpp"
#include "khess/symfun.hpp"
#include "manufactured.hpp"
#include "models.hpp"
#include "oracles.hpp"

using namespace khess;

namespace {

constexpr double kOracleTol = 1e-9;
constexpr double kGradTol = 1e-6;
constexpr double kMongeAmpereTol = 1e-12;
constexpr double kIdentityTol = 1e-12;
constexpr double kSlopeMin = 4.5;
constexpr double kSpreadMax = 2.0;
constexpr double kEllipticityEps = 1e-2;
constexpr double kThresholdMin = 1e-3;
constexpr double kOrderMin = 1.9;
constexpr double kNuSpreadMax = 2.0;
constexpr double kReduction2d = 1e4;
constexpr double kReduction3d = 1e3;
constexpr double kFlatRatioMax = 1e-2;
constexpr double kStabilityMax = 3.0;
constexpr double kVectorTol = 1e-8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

// shared between criteria 9 and 10
std::optional<ApproxSolution> run2d_approx;
std::optional<GridField> run2d_w;

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int n : {3, 4, 5}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::MatrixXd a = oracle::random_symmetric(n, rng, 2.0);
      const double norm = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().cwiseAbs().maxCoeff();
      for (int k = 1; k <= n; ++k) {
        const double d = std::abs(s_k_minors(SymMatrix(a), k) - s_k_eigen(SymMatrix(a), k));
        worst = std::max(worst, d / (1.0 + std::pow(norm, k)));
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kOracleTol && t < 5.0,
          "max |minors - eigen| / (1 + |M|^k) = " + fmt(worst) + " (<= 1e-9), " + fmt(t) + " s (< 5 s)"};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const int k = 1 + (trial / 4) % n;
    const Eigen::MatrixXd a = oracle::random_symmetric(n, rng);
    const SymMatrix g = s_k_grad(SymMatrix(a), k);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
        e(i, j) = e(j, i) = 1.0;
        const double fd = (s_k_minors(SymMatrix(a + h * e), k) - s_k_minors(SymMatrix(a - h * e), k)) / (2 * h);
        const double an = (i == j ? 1.0 : 2.0) * g(i, j);
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kGradTol && t < 5.0, "max relative error " + fmt(worst) + " (<= 1e-6), " + fmt(t) + " s (< 5 s)"};
}

Outcome monge_ampere() {
  double worst = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  int segments = 0;
  for (int n : {2, 3}) {
    std::vector<Monomial> terms;
    for (int i = 0; i + 1 < n; ++i) terms.push_back({0.5, models::e(n, {{i, 2}})});
    terms.push_back({1.0 / 12.0, models::e(n, {{n - 1, 4}})});
    const KModel u = KModel::from_polynomial(Polynomial(n, terms));
    std::mt19937_64 rng(303 + static_cast<unsigned>(n));
    std::uniform_real_distribution<double> un(-1.0, 1.0), ut(0.02, 0.98), us(0.25, 1.0);
    for (int s = 0; s < 1000; ++s) {
      Eigen::VectorXd y(n);
      for (int a = 0; a < n; ++a) y(a) = un(rng);
      worst = std::max(worst, std::abs(s_k_minors(SymMatrix(u.hessian(y)), n) - y(n - 1) * y(n - 1)));
    }
    const HessianFn hess = [&u](const Eigen::VectorXd& y) { return u.hessian(y); };
    for (int s = 0; s < 500; ++s) {
      SegmentTest t;
      t.y = Eigen::VectorXd(n);
      for (int a = 0; a < n; ++a) t.y(a) = un(rng);
      if (s % 10 == 0) {
        // along the degenerate axis through the origin
        t.y.head(n - 1).setZero();
        t.z = -us(rng) * t.y;
      } else if (s % 10 < 4) {
        t.z = -us(rng) * t.y;
      } else {
        t.z = Eigen::VectorXd(n);
        for (int a = 0; a < n; ++a) t.z(a) = un(rng);
      }
      t.t = ut(rng);
      min_margin = std::min(min_margin, segment_convexity(hess, t).margin);
      ++segments;
    }
  }
  return {worst <= kMongeAmpereTol && min_margin > 0.0,
          "max |S_n - y_n^2| = " + fmt(worst) + " over 2000 points (<= 1e-12), min margin " + fmt(min_margin) +
              " over " + std::to_string(segments) + " segments (> 0)"};
}

Outcome trace_identity() {
  double worst = 0.0;
  for (auto [n, k] : {std::pair{2, 2}, {3, 2}, {3, 3}, {4, 3}}) {
    std::vector<double> c;
    for (int j = k; j <= n; ++j) c.push_back(1.0 - 0.15 * (j - k));
    std::vector<double> tau;
    for (int i = 1; i < k; ++i) tau.push_back(1.0 / i);
    const KModel km = models::quadratic(n, k, c);
    const ApproxSolution a = build_P(km, Cutoff(), models::spec_for(km, k, tau, 0.1));
    worst = std::max(worst, verify_trace_identity(a, sample_omega(a.spec(), n == 4 ? 9 : 15)).relative);
  }
  return {worst <= kIdentityTol, "max relative error " + fmt(worst) + " over (2,2) (3,2) (3,3) (4,3) (<= 1e-12)"};
}

Outcome residual_scaling() {
  const auto t0 = Clock::now();
  const KModel km = models::cubic_2d();
  const ApproxSolution a = build_P(km, Cutoff(), models::spec_for(km, 2, {1.0}, 0.25));
  const GridSpec g = GridSpec::uniform(2, 2, 64, 64, a.spec().delta0());
  const ResidualTable tab = residual_psi(a, g, {0.25, 0.125, 0.0625, 0.03125});
  const double t = seconds_since(t0);
  return {tab.slope >= kSlopeMin && t < 60.0,
          "log-log slope " + fmt(tab.slope) + " (>= 4.5), " + fmt(t) + " s (< 60 s)"};
}

Outcome smoothing_constants() {
  const GridSpec g = GridSpec::uniform(2, 2, 128, 128, M_PI / 2);
  const auto b = battery::smoothing_battery(g, 50, 11, 32);
  const SmoothingConstants c = measure_smoothing_constants(b, {2, 4, 8, 16}, 4);
  const double spread = c.worst_spread();
  return {spread < kSpreadMax, "worst max_t C / min_t C = " + fmt(spread) + " over s1, s2 <= 4 (< 2)"};
}

Outcome degenerate_ellipticity() {
  double min_form = std::numeric_limits<double>::infinity();
  double min_threshold = std::numeric_limits<double>::infinity();
  bool all_pass = true;
  for (int n : {2, 3}) {
    const KModel km = n == 2 ? models::cubic_2d() : models::cubic_3d();
    const ApproxSolution ap = build_P(km, Cutoff(), models::spec_for(km, 2, {1.0}, kEllipticityEps));
    const GridSpec g = GridSpec::uniform(n, 2, n == 2 ? 24 : 10, n == 2 ? 24 : 10, ap.spec().delta0());
    const Background bg = Background::build(ap, g);
    std::mt19937_64 rng(404 + static_cast<unsigned>(n));
    for (int f = 0; f < 20; ++f) {
      GridField w = random_c3_field(g, rng);
      w *= 1.0 / cnorm(w, budget_order(n));
      const double theta = residual_G(w, bg).max_abs();
      const EllipticityReport rep = check_degenerate_ellipticity(w, bg, theta, 256);
      min_form = std::min(min_form, rep.min_form);
      all_pass = all_pass && rep.pass && rep.min_form >= -kEllipticityTol;
      const EllipticityThreshold th = ellipticity_threshold(w, ap, g, 1e-4, 0.5, 8);
      min_threshold = std::min(min_threshold, th.eps_pass);
    }
  }
  return {all_pass && min_threshold >= kThresholdMin,
          "40 fields at eps = 1e-2: min quadratic form " + fmt(min_form) + " (>= -1e-8), min threshold eps* " +
              fmt(min_threshold) + " (>= 1e-3)"};
}

Outcome linear_solver() {
  const KModel km = models::cubic_2d();
  const ApproxSolution ap = build_P(km, Cutoff(), models::spec_for(km, 2, {1.0}, 0.1));
  const double d0 = ap.spec().delta0();
  const manufactured::Separable f = manufactured::separable(2, d0);
  std::vector<double> errs;
  for (int m : {16, 32, 64, 128}) {
    const GridSpec g = GridSpec::uniform(2, 2, m, m, d0);
    const Background bg = Background::build(ap, g);
    LinearProblem p = assemble(GridField(g), bg, residual_G(GridField(g), bg).max_abs(), 0.01, default_mu(d0));
    manufactured::apply_exact(p, f);
    errs.push_back(manufactured::l2_error(solve_report(p).rho_bar, f));
  }
  double min_order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < errs.size(); ++i) min_order = std::min(min_order, std::log2(errs[i - 1] / errs[i]));

  const GridSpec g = GridSpec::uniform(2, 2, 32, 32, d0);
  const Background bg = Background::build(ap, g);
  const double theta = residual_G(GridField(g), bg).max_abs();
  double worst_spread = 0.0;
  for (const GridField& rhs : battery::smoothing_battery(g, 6, 17, 6)) {
    std::vector<double> r;
    for (double nu : {1e-1, 1e-2, 1e-3}) {
      LinearProblem p = assemble(GridField(g), bg, theta, nu, default_mu(d0));
      p.set_rhs(rhs);
      r.push_back(apriori_ratio(solve(p), rhs, 0));
    }
    worst_spread = std::max(worst_spread, *std::max_element(r.begin(), r.end()) / *std::min_element(r.begin(), r.end()));
  }
  return {min_order >= kOrderMin && worst_spread < kNuSpreadMax,
          "min observed order " + fmt(min_order) + " over 16..128 (>= 1.9), ||rho||_0/||g||_0 spread over nu " +
              fmt(worst_spread) + " (< 2)"};
}

struct RunSummary {
  double reduction = 0.0;
  double seconds = 0.0;
  int steps = 0;
};

RunSummary nash_moser_run(const KModel& km, int points, std::optional<ApproxSolution>* keep_approx,
                          std::optional<GridField>* keep_w) {
  const int n = km.dim();
  const ApproxSolution ap = build_P(km, Cutoff(), models::spec_for(km, 2, {1.0}, 0.1));
  const GridSpec g = GridSpec::uniform(n, 2, points, points, ap.spec().delta0());
  NashMoserParams p = NashMoserParams::practical(n, 2);
  p.max_iter = 15;
  p.stop_tol = 1e-10;
  const auto t0 = Clock::now();
  const NashMoser nm(ap, g, p);
  const IterationState st = nm.run();
  RunSummary s;
  s.seconds = seconds_since(t0);
  s.steps = static_cast<int>(st.trace.rows.size()) - 1;
  double g_min = st.trace.rows.front().g_norm_inf;
  for (const TraceRow& r : st.trace.rows) g_min = std::min(g_min, r.g_norm_inf);
  s.reduction = g_min > 0.0 ? st.trace.rows.front().g_norm_inf / g_min : std::numeric_limits<double>::infinity();
  if (keep_approx) keep_approx->emplace(ap);
  if (keep_w) keep_w->emplace(st.w);
  return s;
}

Outcome nash_moser() {
  const RunSummary a = nash_moser_run(models::cubic_2d(), 64, &run2d_approx, &run2d_w);
  const RunSummary b = nash_moser_run(models::cubic_3d(), 32, nullptr, nullptr);
  const bool ok = a.reduction >= kReduction2d && a.seconds < 120.0 && b.reduction >= kReduction3d && b.seconds < 600.0;
  return {ok, "2D 64^2: reduction " + fmt(a.reduction) + " in " + std::to_string(a.steps) + " steps, " +
                  fmt(a.seconds) + " s (>= 1e4, < 120 s); 3D 32^3: reduction " + fmt(b.reduction) + " in " +
                  std::to_string(b.steps) + " steps, " + fmt(b.seconds) + " s (>= 1e3, < 600 s)"};
}

Outcome certification() {
  if (!run2d_w) return {false, "no converged 2D field"};
  const ApproxSolution& ap = *run2d_approx;
  const GridField& w = *run2d_w;
  const SegmentSummary seg = certify_segments(ap, w, 500, 12, 505);
  const Background bg = Background::build(ap, w.grid());
  const DominanceResult dom = dominance_margin(r_field(w, bg), w.grid(), ap.spec());
  const FlatnessReport flat = boundary_flatness(w, residual(w, bg).theta);
  const bool flat_ok = flat.second_ratio() <= kFlatRatioMax && flat.third_ratio() <= kFlatRatioMax;
  return {seg.pass && dom.ok && flat_ok,
          "segments " + std::to_string(500 - seg.failures) + "/500 (min margin " + fmt(seg.min_margin) +
              "), dominance min " + fmt(dom.min_margin) + " (tol " + fmt(dom.tolerance) + "), flatness slice/interior " +
              fmt(flat.second_ratio()) + " second, " + fmt(flat.third_ratio()) + " third (<= 1e-2)"};
}

Outcome eigen_structure_bounds() {
  struct Case {
    int n, k;
    std::vector<double> tau;
    int points;
  };
  double tau_stab = 0.0, zero_stab = 0.0, vec_stab = 0.0, der_stab = 0.0, disagreement = 0.0;
  std::string error;
  for (const Case& c : {Case{2, 2, {1.0}, 16}, Case{3, 3, {1.0, 0.5}, 10}}) {
    const EigenSummary s = certify_eigen(c.tau, c.n, c.k, c.points, 0.5, 50, 606, 1e-2, 1e-3);
    if (!s.error.empty()) error = s.error;
    tau_stab = std::max(tau_stab, s.tau_stability);
    zero_stab = std::max(zero_stab, s.zero_stability);
    vec_stab = std::max(vec_stab, s.vector_stability);
    der_stab = std::max(der_stab, s.derivative_stability);
    disagreement = std::max(disagreement, s.max_disagreement);
  }
  const bool ok = error.empty() && tau_stab <= kStabilityMax && zero_stab <= kStabilityMax && disagreement <= kVectorTol;
  std::string d = "50 fields on (2,2) and (3,3), eps 1e-2 -> 1e-3: ratio stability |lambda - tau|/eps " +
                  fmt(tau_stab) + ", |lambda''|/sqrt(eps) " + fmt(zero_stab) + " (<= 3); eigenvector disagreement " +
                  fmt(disagreement) + " (<= 1e-8); measured vector " + fmt(vec_stab) + ", derivative " + fmt(der_stab);
  if (!error.empty()) d += "; " + error;
  return {ok, d};
}

Outcome schedule_arithmetic() {
  RunConfig cfg;
  cfg.gamma = 1.5;
  cfg.formats.clear();
  std::ostringstream out;
  const int rc = cmd_schedule(cfg, 2, out);
  const std::string text = out.str();
  const bool printed = text.find("a_min = 18\n") != std::string::npos && text.find("s_star_min = 40\n") != std::string::npos;

  NashMoserParams p;
  p.gamma = 1.5;
  p.a_exp = 18.0;
  p.s_star = 40.0;
  const bool frontier = check_schedule(p, 2, 2).feasible;
  p.a_exp = 17.999;
  const bool below_a = !check_schedule(p, 2, 2).feasible;
  p.a_exp = 18.0;
  p.s_star = 39.999;
  const bool below_s = !check_schedule(p, 2, 2).feasible;

  bool rejects = true;
  for (double gamma : {1.0, 0.9}) {
    RunConfig bad;
    bad.gamma = gamma;
    bad.formats.clear();
    std::ostringstream sink;
    rejects = rejects && cmd_schedule(bad, 2, sink) != 0;
    NashMoserParams q;
    q.gamma = gamma;
    try {
      NashMoserParams::create(2, 2, q);
      rejects = false;
    } catch (const ConfigError&) {
    }
  }
  const bool ok = rc == 0 && printed && frontier && below_a && below_s && rejects;
  return {ok, std::string("gamma = 1.5: a_min 18, s*_min 40 ") + (printed ? "reported" : "NOT reported") +
                  ", frontier " + (frontier && below_a && below_s ? "sharp" : "not sharp") + "; gamma <= 1 " +
                  (rejects ? "rejected" : "accepted")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "s_k oracle equivalence", oracle_equivalence},
      {2, "s_k gradient check", gradient_check},
      {3, "Monge-Ampere example", monge_ampere},
      {4, "trace identity", trace_identity},
      {5, "residual scaling", residual_scaling},
      {6, "smoothing operator constants", smoothing_constants},
      {7, "degenerate ellipticity", degenerate_ellipticity},
      {8, "linear solver", linear_solver},
      {9, "Nash-Moser end-to-end", nash_moser},
      {10, "certification of the converged solution", certification},
      {11, "eigen-structure bounds", eigen_structure_bounds},
      {12, "schedule arithmetic", schedule_arithmetic},
  };
  int passed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (o.pass) ++passed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << o.detail << "  ("
              << fmt(seconds_since(t0)) << " s)" << std::endl;
  }
  std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
