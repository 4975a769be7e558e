#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "khess/approx.hpp"
#include "khess/grid.hpp"
#include "khess/linsolve.hpp"

namespace khess {

enum class ScheduleMode { practical, faithful };

const char* to_string(ScheduleMode m);
ScheduleMode parse_schedule_mode(const std::string& s);

struct ScheduleReport {
  int n = 0;
  int k = 0;
  double gamma = 0.0;
  double beta = 0.0;
  /// 2(k-2) + 2[n/2] + 6 + a gamma <= 2a - 1
  double lhs1 = 0.0;
  double rhs1 = 0.0;
  bool ok1 = false;
  /// s* - [n/2] - 3 - beta >= a gamma + 1
  double lhs2 = 0.0;
  double rhs2 = 0.0;
  bool ok2 = false;
  /// Smallest admissible a for this gamma; +inf when gamma >= 2.
  double a_min = 0.0;
  /// Smallest admissible s* at a_min.
  double s_star_min = 0.0;
  bool feasible = false;
  std::string message;
};

/// Exponents of the iteration. mu_m = sigma^{gamma^m}.
struct NashMoserParams {
  double sigma = 2.0;
  double gamma = 1.2;
  double a_exp = 0.0;
  double s_star = 0.0;
  int max_iter = 15;
  double stop_tol = 1e-6;
  ScheduleMode mode = ScheduleMode::practical;
  /// Sobolev order reported as w_norm_s.
  int norm_s = 2;
  /// Weight exponent of the linear solves; default_mu(delta0) when unset.
  std::optional<double> mu_weight;

  double beta() const { return 4.0 / (gamma - 1.0); }
  double mu_m(int m) const;

  /// Validates sigma, gamma and the exponent conditions for (n, k). Unset
  /// a_exp or s_star (<= 0) are replaced by the smallest admissible values.
  static NashMoserParams create(int n, int k, NashMoserParams p);
  /// sigma = 2, gamma = 1.2, smoothing capped at the grid resolution.
  static NashMoserParams practical(int n, int k);
};

/// Exponent conditions for the given a_exp and s_star.
ScheduleReport check_schedule(const NashMoserParams& params, int n, int k);

/// max over m <= m_max of C^2 sigma^{-gamma^m} Cs^{m+1}, and the smallest
/// sigma that keeps it at or below 1/4.
struct SigmaProxy {
  double worst = 0.0;
  int worst_m = 0;
  double sigma_min = 0.0;
};
SigmaProxy sigma_largeness(double sigma, double gamma, double c, double c_s, int m_max = 60);

struct ResidualResult {
  GridField g;
  double theta = 0.0;
};

/// g = -G(w) and theta = max|G(w)| over the grid.
ResidualResult residual(const GridField& w, const Background& bg);
ResidualResult residual(const GridField& w, const ApproxSolution& approx);

struct TraceRow {
  int m = 0;
  double mu_m = 0.0;
  double theta = 0.0;
  double g_norm0 = 0.0;
  double g_norm_inf = 0.0;
  double w_norm_s = 0.0;
  double wall_ms = 0.0;
  /// Quantities of the step taken from this state; zero on the last row.
  double rho_norm0 = 0.0;
  double t_smooth = 0.0;
  double nu = 0.0;
  double ellipticity_min = 0.0;
  double solver_residual = 0.0;
  double w_cnorm = 0.0;
  bool budget_warning = false;
  /// mu_m^a max(||g_m||_0, ||g_m||_inf)
  double d_m = 0.0;
};

enum class RunStatus { converged, max_iter, ellipticity_failure, solver_failure };
const char* to_string(RunStatus s);

struct IterationTrace {
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::max_iter;
  std::string message;
  /// Sobolev order of the M/N proxies (s* capped at the grid limit).
  int proxy_s = 0;
  double M_proxy = 0.0;
  double N_proxy = 0.0;

  /// m,mu_m,theta_m,g_norm0,g_norm_inf,w_norm_s,wall_ms. With timing off,
  /// wall_ms is written as 0 so reruns are byte-identical.
  void write_csv(const std::string& path, bool timing = true) const;
  /// All per-step columns.
  void write_detail_csv(const std::string& path, bool timing = true) const;
};

struct IterationState {
  GridField w;
  IterationTrace trace;
};

/// Iteration bound to one instance and grid.
class NashMoser {
 public:
  NashMoser(const ApproxSolution& approx, const GridSpec& grid, NashMoserParams params);
  /// Uses a prepared background, e.g. with a modified K~.
  NashMoser(const ApproxSolution& approx, Background bg, NashMoserParams params);

  const Background& background() const { return bg_; }
  const NashMoserParams& params() const { return params_; }
  double mu_weight() const;
  /// Smoothing scale for step m.
  double smoothing_scale(int m) const;

  IterationState initial() const;
  /// Records the row for the current w, then assembles, solves, smooths and
  /// updates. Throws NumericError on an ellipticity failure and SolverError
  /// when the linear solve fails.
  IterationState step(IterationState state) const;
  /// Iterates until ||g_m||_inf <= stop_tol ||g_0||_inf or max_iter steps.
  IterationState run(IterationState state) const;
  IterationState run() const { return run(initial()); }

 private:
  void advance(IterationState& state) const;
  TraceRow observe(const GridField& w, int m, const ResidualResult& r) const;

  ApproxSolution approx_;
  NashMoserParams params_;
  Background bg_;
};

/// u(eps^2 x) = psi(eps^2 x) + eps^{17/2} w(x) on the grid nodes.
GridField assemble_u(const ApproxSolution& approx, const GridField& w);

}  // namespace khess
