#include "khess/nashmoser.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "khess/errors.hpp"
#include "khess/field.hpp"

namespace khess {

namespace {

int half(int n) { return n / 2; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(ScheduleMode m) { return m == ScheduleMode::practical ? "practical" : "faithful"; }

ScheduleMode parse_schedule_mode(const std::string& s) {
  if (s == "practical") return ScheduleMode::practical;
  if (s == "faithful") return ScheduleMode::faithful;
  throw ConfigError("mode must be practical or faithful, got '" + s + "'");
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iter: return "max_iter";
    case RunStatus::ellipticity_failure: return "ellipticity_failure";
    case RunStatus::solver_failure: return "solver_failure";
  }
  return "unknown";
}

double NashMoserParams::mu_m(int m) const { return std::pow(sigma, std::pow(gamma, m)); }

ScheduleReport check_schedule(const NashMoserParams& p, int n, int k) {
  ScheduleReport r;
  r.n = n;
  r.k = k;
  r.gamma = p.gamma;
  if (!(p.gamma > 1.0)) {
    r.beta = std::numeric_limits<double>::infinity();
    r.a_min = r.s_star_min = std::numeric_limits<double>::infinity();
    r.message = "gamma must exceed 1: beta = 4/(gamma-1) is unbounded";
    return r;
  }
  r.beta = p.beta();
  const double c1 = 2.0 * (k - 2) + 2.0 * half(n) + 6.0;
  r.a_min = p.gamma < 2.0 ? (c1 + 1.0) / (2.0 - p.gamma) : std::numeric_limits<double>::infinity();
  r.s_star_min = half(n) + 3.0 + r.beta + r.a_min * p.gamma + 1.0;
  r.lhs1 = c1 + p.a_exp * p.gamma;
  r.rhs1 = 2.0 * p.a_exp - 1.0;
  r.ok1 = p.a_exp > 0.0 && r.lhs1 <= r.rhs1;
  r.lhs2 = p.s_star - half(n) - 3.0 - r.beta;
  r.rhs2 = p.a_exp * p.gamma + 1.0;
  r.ok2 = r.lhs2 >= r.rhs2;
  r.feasible = r.ok1 && r.ok2;
  std::ostringstream msg;
  if (!std::isfinite(r.a_min))
    msg << "gamma >= 2: 2(k-2)+2[n/2]+6+a*gamma <= 2a-1 has no solution a > 0";
  else if (!r.ok1)
    msg << "2(k-2)+2[n/2]+6+a*gamma <= 2a-1 fails: " << r.lhs1 << " > " << r.rhs1 << " (need a >= " << r.a_min << ")";
  else if (!r.ok2)
    msg << "s*-[n/2]-3-beta >= a*gamma+1 fails: " << r.lhs2 << " < " << r.rhs2
        << " (need s* >= " << half(n) + 3.0 + r.beta + r.rhs2 << ")";
  else
    msg << "feasible";
  r.message = msg.str();
  return r;
}

NashMoserParams NashMoserParams::create(int n, int k, NashMoserParams p) {
  if (!(p.sigma > 1.0)) throw ConfigError("sigma must exceed 1");
  if (!(p.gamma > 1.0)) throw ConfigError("gamma must exceed 1");
  if (p.max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  if (!(p.stop_tol >= 0.0)) throw ConfigError("stop_tol must be nonnegative");
  if (p.norm_s < 0) throw ConfigError("norm_s must be nonnegative");
  if (p.mu_weight && !(*p.mu_weight >= 0.0)) throw ConfigError("mu_weight must be nonnegative");
  const ScheduleReport base = check_schedule(p, n, k);
  if (!std::isfinite(base.a_min)) throw ConfigError("infeasible schedule: " + base.message);
  if (p.a_exp <= 0.0) p.a_exp = base.a_min;
  if (p.s_star <= 0.0) p.s_star = std::ceil(half(n) + 3.0 + p.beta() + p.a_exp * p.gamma + 1.0);
  const ScheduleReport r = check_schedule(p, n, k);
  if (!r.feasible) throw ConfigError("infeasible schedule: " + r.message);
  return p;
}

NashMoserParams NashMoserParams::practical(int n, int k) {
  NashMoserParams p;
  p.sigma = 2.0;
  p.gamma = 1.2;
  p.mode = ScheduleMode::practical;
  return create(n, k, p);
}

SigmaProxy sigma_largeness(double sigma, double gamma, double c, double c_s, int m_max) {
  SigmaProxy out;
  out.worst = -1.0;
  for (int m = 0; m <= m_max; ++m) {
    const double gm = std::pow(gamma, m);
    const double logv = 2.0 * std::log(c) - gm * std::log(sigma) + (m + 1) * std::log(c_s);
    const double v = std::exp(logv);
    if (v > out.worst) {
      out.worst = v;
      out.worst_m = m;
    }
    const double need = std::exp((std::log(4.0) + 2.0 * std::log(c) + (m + 1) * std::log(c_s)) / gm);
    out.sigma_min = std::max(out.sigma_min, need);
  }
  return out;
}

ResidualResult residual(const GridField& w, const Background& bg) {
  ResidualResult r;
  r.g = residual_G(w, bg);
  r.theta = r.g.max_abs();
  r.g *= -1.0;
  return r;
}

ResidualResult residual(const GridField& w, const ApproxSolution& approx) {
  return residual(w, Background::build(approx, w.grid()));
}

void IterationTrace::write_csv(const std::string& path, bool timing) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "m,mu_m,theta_m,g_norm0,g_norm_inf,w_norm_s,wall_ms\n";
  for (const auto& r : rows)
    out << r.m << ',' << fmt(r.mu_m) << ',' << fmt(r.theta) << ',' << fmt(r.g_norm0) << ',' << fmt(r.g_norm_inf)
        << ',' << fmt(r.w_norm_s) << ',' << fmt(timing ? r.wall_ms : 0.0) << '\n';
}

void IterationTrace::write_detail_csv(const std::string& path, bool timing) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "m,mu_m,theta_m,g_norm0,g_norm_inf,w_norm_s,rho_norm0,t_smooth,nu,ellipticity_min,solver_residual,"
         "w_cnorm,budget_warning,d_m,wall_ms\n";
  for (const auto& r : rows)
    out << r.m << ',' << fmt(r.mu_m) << ',' << fmt(r.theta) << ',' << fmt(r.g_norm0) << ',' << fmt(r.g_norm_inf)
        << ',' << fmt(r.w_norm_s) << ',' << fmt(r.rho_norm0) << ',' << fmt(r.t_smooth) << ',' << fmt(r.nu) << ','
        << fmt(r.ellipticity_min) << ',' << fmt(r.solver_residual) << ',' << fmt(r.w_cnorm) << ','
        << (r.budget_warning ? 1 : 0) << ',' << fmt(r.d_m) << ',' << fmt(timing ? r.wall_ms : 0.0) << '\n';
}

NashMoser::NashMoser(const ApproxSolution& approx, const GridSpec& grid, NashMoserParams params)
    : NashMoser(approx, Background::build(approx, grid), std::move(params)) {}

NashMoser::NashMoser(const ApproxSolution& approx, Background bg, NashMoserParams params)
    : approx_(approx), params_(NashMoserParams::create(bg.grid.n(), bg.grid.k(), params)), bg_(std::move(bg)) {
  if (params_.norm_s > sobolev_cap(bg_.grid)) throw ConfigError("norm_s exceeds the Sobolev cap of this grid");
}

double NashMoser::mu_weight() const { return params_.mu_weight.value_or(default_mu(bg_.grid.delta0())); }

double NashMoser::smoothing_scale(int m) const {
  const double mu = params_.mu_m(m);
  if (params_.mode == ScheduleMode::practical) return std::min(mu, max_frequency(bg_.grid));
  return mu;
}

IterationState NashMoser::initial() const {
  IterationState s;
  s.w = GridField(bg_.grid);
  const GridSpec& g = bg_.grid;
  const int n = g.n();
  s.trace.proxy_s = std::max(1, std::min(static_cast<int>(params_.s_star), sobolev_cap(g) - 2));
  const int ps = s.trace.proxy_s;
  const ResidualResult r0 = residual(s.w, bg_);
  std::vector<GridField> pij;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      GridField f(g);
      for (std::size_t id = 0; id < g.size(); ++id)
        f[id] = bg_.hess_psi[id](i, j) - (i == j && i < g.k() - 1 ? approx_.spec().tau()[static_cast<std::size_t>(i)] : 0.0);
      pij.push_back(std::move(f));
    }
  const double e4 = std::pow(bg_.epsilon, 4);
  auto M = [&](int s) {
    double v = sobolev_norm(r0.g, s);
    for (const auto& f : pij) v += e4 * sobolev_norm(f, std::max(0, s - 1));
    return v;
  };
  double p2 = 0.0;
  for (const auto& f : pij) p2 += sobolev_norm(f, ps + 2);
  s.trace.M_proxy = M(ps);
  s.trace.N_proxy = s.trace.M_proxy + p2 * (1.0 + M(half(n) + 1));
  return s;
}

TraceRow NashMoser::observe(const GridField& w, int m, const ResidualResult& r) const {
  TraceRow row;
  row.m = m;
  row.mu_m = params_.mu_m(m);
  row.theta = r.theta;
  row.g_norm0 = sobolev_norm(r.g, 0);
  row.g_norm_inf = r.g.max_abs();
  row.w_norm_s = sobolev_norm(w, params_.norm_s);
  row.d_m = std::pow(row.mu_m, params_.a_exp) * std::max(row.g_norm0, row.g_norm_inf);
  return row;
}

IterationState NashMoser::step(IterationState state) const {
  advance(state);
  return state;
}

void NashMoser::advance(IterationState& state) const {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const int m = static_cast<int>(state.trace.rows.size());
  const ResidualResult r = residual(state.w, bg_);
  TraceRow row = observe(state.w, m, r);
  const EllipticityReport ell = check_degenerate_ellipticity(state.w, bg_, r.theta);
  row.ellipticity_min = ell.min_form;
  if (!ell.pass) {
    row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    state.trace.rows.push_back(row);
    throw NumericError("step " + std::to_string(m) + ": ellipticity check failed, min form " +
                       std::to_string(ell.min_form));
  }
  row.nu = default_nu(r.theta);
  LinearProblem prob = assemble(state.w, bg_, r.theta, row.nu, mu_weight());
  prob.set_rhs(r.g);
  row.w_cnorm = prob.w_cnorm;
  row.budget_warning = prob.budget_warning;
  SolveReport sol;
  try {
    sol = solve_report(prob);
  } catch (const SolverError& e) {
    row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    state.trace.rows.push_back(row);
    throw SolverError("step " + std::to_string(m) + ": " + e.what());
  }
  row.solver_residual = sol.relative_residual;
  row.rho_norm0 = sobolev_norm(sol.rho, 0);
  row.t_smooth = smoothing_scale(m);
  state.w += smooth(sol.rho, row.t_smooth);
  row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  state.trace.rows.push_back(row);
}

IterationState NashMoser::run(IterationState state) const {
  using clock = std::chrono::steady_clock;
  for (;;) {
    const auto t0 = clock::now();
    const int m = static_cast<int>(state.trace.rows.size());
    const ResidualResult r = residual(state.w, bg_);
    const double ginf = r.g.max_abs();
    const double g0 = m == 0 ? ginf : state.trace.rows.front().g_norm_inf;
    const bool done = ginf == 0.0 || ginf <= params_.stop_tol * g0;
    if (done || m >= params_.max_iter) {
      TraceRow row = observe(state.w, m, r);
      row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      state.trace.rows.push_back(row);
      state.trace.status = done ? RunStatus::converged : RunStatus::max_iter;
      state.trace.message = done ? "residual reduced below stop_tol" : "max_iter reached";
      return state;
    }
    try {
      advance(state);
    } catch (const NumericError& e) {
      state.trace.status = RunStatus::ellipticity_failure;
      state.trace.message = e.what();
      return state;
    } catch (const SolverError& e) {
      state.trace.status = RunStatus::solver_failure;
      state.trace.message = e.what();
      return state;
    }
  }
}

GridField assemble_u(const ApproxSolution& approx, const GridField& w) {
  const double eps = approx.spec().epsilon();
  const double e2 = eps * eps;
  const double scale = std::pow(eps, 8.5);
  GridField u(w.grid());
  for (std::size_t id = 0; id < u.size(); ++id) u[id] = approx.psi(e2 * w.grid().point(id)) + scale * w[id];
  return u;
}

}  // namespace khess
