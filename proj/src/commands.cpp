#include "khess/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <random>

#include "khess/errors.hpp"
#include "khess/field.hpp"

namespace khess {

namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void prepare_out(const RunConfig& cfg) { std::filesystem::create_directories(cfg.out_dir); }

void write_json(const RunConfig& cfg, const std::string& file, const json& j) {
  if (!cfg.wants("json")) return;
  const std::string path = cfg.out_path(file);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

double stability(double a, double b) {
  if (a == 0.0 && b == 0.0) return 1.0;
  if (a == 0.0 || b == 0.0) return kInf;
  return std::max(a / b, b / a);
}

std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

json grid_json(const GridSpec& g) {
  json j;
  j["n"] = g.n();
  j["k"] = g.k();
  j["delta0"] = g.delta0();
  json iv = json::array();
  for (int a = 0; a < g.n(); ++a) iv.push_back(g.intervals(a));
  j["intervals"] = iv;
  return j;
}

json problem_json(const ProblemSpec& s) {
  json j;
  j["n"] = s.n();
  j["k"] = s.k();
  j["tau"] = s.tau();
  j["curvatures"] = s.curvatures();
  j["epsilon"] = s.epsilon();
  j["delta0"] = s.delta0();
  j["alpha"] = s.alpha();
  j["alpha_bound"] = s.alpha_bound();
  return j;
}

int sample_count(int n) { return n <= 2 ? 41 : n == 3 ? 17 : 9; }

}  // namespace

SegmentSummary certify_segments(const ApproxSolution& approx, const GridField& w, int count, int order,
                                std::uint64_t seed) {
  const ProblemSpec& spec = approx.spec();
  const int n = spec.n();
  const int kp = spec.k() - 1;
  const SolutionHessian sh(approx, w);
  const HessianFn hess = sh.fn();
  const Eigen::VectorXd hw = spec.half_widths();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.02, 0.98), us(0.25, 1.0);
  SegmentSummary s;
  s.min_margin = kInf;
  s.min_excess = kInf;
  for (int i = 0; i < count; ++i) {
    SegmentTest t;
    t.order = order;
    t.y = Eigen::VectorXd(n);
    t.z = Eigen::VectorXd(n);
    for (int a = 0; a < n; ++a) t.y(a) = hw(a) * u(rng);
    // every tenth segment passes through the origin
    if (i % 10 == 0) {
      t.z = -us(rng) * t.y;
    } else {
      for (int a = 0; a < n; ++a) t.z(a) = hw(a) * u(rng);
    }
    t.t = ut(rng);
    const Eigen::VectorXd xi = t.y - t.z;
    const SegmentResult r = segment_convexity(hess, t);
    SegmentRow row{t.y, t.z, t.t, r.margin, 0.0, r.order};
    for (int a = 0; a < kp; ++a) row.lower_bound += 0.25 * spec.tau()[static_cast<std::size_t>(a)] * xi(a) * xi(a);
    row.lower_bound += 0.5 * spec.alpha() * segment_b(t, spec.k()) * xi.tail(n - kp).squaredNorm();
    const double xi2 = xi.squaredNorm();
    const double excess = (row.margin - row.lower_bound) / xi2;
    if (!(row.margin > 0.0) || !(excess >= -1e-12)) ++s.failures;
    s.min_margin = std::min(s.min_margin, row.margin);
    s.min_excess = std::min(s.min_excess, excess);
    s.rows.push_back(std::move(row));
  }
  s.pass = s.failures == 0;
  return s;
}

EigenSummary certify_eigen(const std::vector<double>& tau, int n, int k, int points, double delta0, int fields,
                           std::uint64_t seed, double eps_hi, double eps_lo) {
  EigenSummary s;
  s.fields = fields;
  s.eps_hi = eps_hi;
  s.eps_lo = eps_lo;
  const GridSpec grid = GridSpec::uniform(n, k, points, points, delta0);
  std::mt19937_64 rng(seed);
  try {
    for (int f = 0; f < fields; ++f) {
      const GridField w = random_c3_field(grid, rng);
      const EigenPerturbation hi = eig_perturb(tau, w, eps_hi);
      const EigenPerturbation lo = eig_perturb(tau, w, eps_lo);
      s.tau_hi.push_back(hi.ratio_tau);
      s.tau_lo.push_back(lo.ratio_tau);
      s.zero_hi.push_back(hi.ratio_zero);
      s.zero_lo.push_back(lo.ratio_zero);
      s.vec_hi.push_back(hi.ratio_vectors);
      s.vec_lo.push_back(lo.ratio_vectors);
      s.der_hi.push_back(hi.ratio_derivative);
      s.der_lo.push_back(lo.ratio_derivative);
      s.max_disagreement =
          std::max({s.max_disagreement, hi.max_vector_disagreement, lo.max_vector_disagreement});
      s.tau_stability = std::max(s.tau_stability, stability(hi.ratio_tau, lo.ratio_tau));
      s.zero_stability = std::max(s.zero_stability, stability(hi.ratio_zero, lo.ratio_zero));
      s.vector_stability = std::max(s.vector_stability, stability(hi.ratio_vectors, lo.ratio_vectors));
      s.derivative_stability = std::max(s.derivative_stability, stability(hi.ratio_derivative, lo.ratio_derivative));
    }
  } catch (const NumericError& e) {
    s.error = e.what();
    return s;
  }
  s.pass = s.max_disagreement <= 1e-8;
  return s;
}

Certificate certify(const Instance& inst, const GridField& w, const RunConfig& cfg) {
  const GridSpec& grid = w.grid();
  if (grid.n() != inst.spec.n() || grid.k() != inst.spec.k())
    throw ConfigError("snapshot grid does not match the instance (n, k)");
  const std::uint64_t seed = cfg.seed.value_or(0);
  Certificate c;
  c.segments = certify_segments(inst.approx, w, cfg.segments, cfg.quad_order, seed);
  const Background bg = Background::build(inst.approx, grid);
  c.dominance = dominance_margin(r_field(w, bg), grid, inst.spec);
  c.residual_inf = residual(w, bg).theta;
  c.flatness = boundary_flatness(w, c.residual_inf);
  if (cfg.eigen_fields > 0) {
    c.eigen = certify_eigen(inst.spec.tau(), inst.spec.n(), inst.spec.k(), cfg.eigen_grid, inst.spec.delta0(),
                            cfg.eigen_fields, seed + 1);
  } else {
    c.eigen.pass = true;
  }
  c.pass = c.segments.pass && c.dominance.ok && c.flatness.pass && c.eigen.pass;
  return c;
}

int cmd_construct(const RunConfig& cfg, bool eps_sweep, std::ostream& out) {
  const Instance inst = make_instance(cfg);
  build_ktilde(inst.kmodel, Cutoff(), inst.spec);
  const auto samples = sample_omega(inst.spec, sample_count(inst.spec.n()));
  const IdentityReport id = verify_trace_identity(inst.approx, samples);
  const DominanceReport dom = verify_diag_dominance(inst.approx, samples);
  const std::vector<double> eps = eps_sweep ? descending(cfg.eps_list) : std::vector<double>{cfg.epsilon};
  const ResidualTable res = residual_psi(inst.approx, inst.grid, eps);

  const bool id_ok = id.relative <= 1e-12;
  const bool slope_ok = !eps_sweep || res.slope >= 4.5;
  const bool pass = id_ok && dom.ok && slope_ok;

  prepare_out(cfg);
  json j;
  j["command"] = "construct";
  j["problem"] = problem_json(inst.spec);
  j["grid"] = grid_json(inst.grid);
  j["trace_identity"] = {{"max_error", id.max_error}, {"scale", id.scale}, {"relative", id.relative},
                         {"samples", id.samples}, {"worst_point", to_json(id.worst_point)}, {"pass", id_ok}};
  j["diag_dominance"] = {{"min_margin", dom.min_margin},
                         {"min_lower_bound_margin", dom.min_lower_bound_margin},
                         {"worst_point", to_json(dom.worst_point)},
                         {"worst_j", dom.worst_j + 1},
                         {"validity_radius", dom.validity_radius},
                         {"search_radius", dom.search_radius},
                         {"pass", dom.ok}};
  j["residual"] = {{"eps", res.eps}, {"residual", res.residual}};
  if (eps_sweep) j["residual"]["slope"] = res.slope;
  j["pass"] = pass;
  write_json(cfg, "construct.json", j);
  if (cfg.wants("csv")) {
    auto csv = open_csv(cfg.out_path("construct.csv"));
    csv << "eps,residual_psi\n";
    for (std::size_t i = 0; i < res.eps.size(); ++i) csv << res.eps[i] << ',' << res.residual[i] << '\n';
  }

  out << "trace identity: relative error " << id.relative << " over " << id.samples << " samples "
      << verdict(id_ok) << '\n';
  out << "diagonal dominance: min margin " << dom.min_margin << ", validity radius " << dom.validity_radius << ' '
      << verdict(dom.ok) << '\n';
  for (std::size_t i = 0; i < res.eps.size(); ++i)
    out << "residual eps=" << res.eps[i] << ": " << res.residual[i] << '\n';
  if (eps_sweep) out << "residual slope " << res.slope << " (need >= 4.5) " << verdict(slope_ok) << '\n';
  out << "construct " << verdict(pass) << '\n';
  return pass ? 0 : 1;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const Instance inst = make_instance(cfg);
  const int n = inst.spec.n();
  const NashMoser nm(inst.approx, inst.grid, cfg.nashmoser_params(n));
  const auto t0 = std::chrono::steady_clock::now();
  const IterationState st = nm.run();
  const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const auto& rows = st.trace.rows;
  prepare_out(cfg);
  st.trace.write_csv(cfg.out_path("trace.csv"), cfg.timing);
  st.trace.write_detail_csv(cfg.out_path("trace_detail.csv"), cfg.timing);
  write_snapshot(st.w, cfg.out_path("w.snap"), "w");
  write_snapshot(assemble_u(inst.approx, st.w), cfg.out_path("u.snap"), "u");
  std::vector<int> fixed(static_cast<std::size_t>(n), 0);
  for (int a = 2; a < n; ++a)
    fixed[static_cast<std::size_t>(a)] = inst.grid.is_periodic(a) ? 0 : inst.grid.center(a);
  write_slice_csv(st.w, cfg.out_path("w_slice.csv"), {0, 1}, fixed);
  if (cfg.dump_system) {
    const GridField w0(inst.grid);
    const double theta0 = rows.empty() ? 0.0 : rows.front().theta;
    const LinearProblem lp = assemble(w0, nm.background(), theta0, default_nu(theta0), nm.mu_weight());
    write_sparse(build_system(lp), cfg.out_path("system0.txt"));
  }

  const double g0 = rows.front().g_norm_inf;
  const double gl = rows.back().g_norm_inf;
  const double reduction = gl > 0.0 ? g0 / gl : kInf;
  const bool converged = st.trace.status == RunStatus::converged;
  const NashMoserParams& p = nm.params();
  json j;
  j["command"] = "solve";
  j["seed"] = cfg.seed.value_or(0);
  j["problem"] = problem_json(inst.spec);
  j["grid"] = grid_json(inst.grid);
  j["schedule"] = {{"mode", to_string(p.mode)}, {"sigma", p.sigma},       {"gamma", p.gamma},
                   {"a", p.a_exp},              {"s_star", p.s_star},     {"max_iter", p.max_iter},
                   {"stop_tol", p.stop_tol},    {"mu_weight", nm.mu_weight()}};
  j["status"] = to_string(st.trace.status);
  j["message"] = st.trace.message;
  j["steps"] = static_cast<int>(rows.size()) - 1;
  j["g_norm_inf_initial"] = g0;
  j["g_norm_inf_final"] = gl;
  j["reduction"] = reduction;
  j["theta_final"] = rows.back().theta;
  j["proxies"] = {{"s", st.trace.proxy_s}, {"M", st.trace.M_proxy}, {"N", st.trace.N_proxy}};
  if (cfg.timing) j["wall_ms"] = wall_ms;
  j["pass"] = converged;
  write_json(cfg, "solve.json", j);

  out << "status " << to_string(st.trace.status) << " after " << rows.size() - 1 << " steps";
  if (!st.trace.message.empty()) out << " (" << st.trace.message << ")";
  out << '\n';
  out << "g_inf " << g0 << " -> " << gl << ", reduction " << reduction << "x\n";
  out << "wrote " << cfg.out_path("trace.csv") << ", " << cfg.out_path("w.snap") << '\n';
  return converged ? 0 : 1;
}

int cmd_certify(const RunConfig& cfg, std::ostream& out) {
  const Instance inst = make_instance(cfg);
  GridField w = read_snapshot(cfg.snapshot_path());
  w *= cfg.w_scale;
  const Certificate c = certify(inst, w, cfg);

  prepare_out(cfg);
  if (cfg.wants("csv")) {
    auto csv = open_csv(cfg.out_path("segments.csv"));
    const int n = inst.spec.n();
    csv << "index,t,margin,lower_bound,order";
    for (int a = 0; a < n; ++a) csv << ",y" << a + 1;
    for (int a = 0; a < n; ++a) csv << ",z" << a + 1;
    csv << '\n';
    for (std::size_t i = 0; i < c.segments.rows.size(); ++i) {
      const SegmentRow& r = c.segments.rows[i];
      csv << i << ',' << r.t << ',' << r.margin << ',' << r.lower_bound << ',' << r.order;
      for (int a = 0; a < n; ++a) csv << ',' << r.y(a);
      for (int a = 0; a < n; ++a) csv << ',' << r.z(a);
      csv << '\n';
    }
  }
  const auto& d = c.dominance;
  const auto& f = c.flatness;
  const auto& e = c.eigen;
  json j;
  j["command"] = "certify";
  j["seed"] = cfg.seed.value_or(0);
  j["snapshot"] = cfg.snapshot_path();
  j["w_scale"] = cfg.w_scale;
  j["problem"] = problem_json(inst.spec);
  j["grid"] = grid_json(w.grid());
  j["segments"] = {{"count", c.segments.rows.size()}, {"min_margin", c.segments.min_margin},
                   {"min_excess_over_lower_bound", c.segments.min_excess},
                   {"failures", c.segments.failures}, {"pass", c.segments.pass}};
  j["dominance"] = {{"min_margin", d.min_margin},
                    {"worst_point", to_json(d.worst_point)},
                    {"worst_j", d.worst_j + 1},
                    {"mixed_constant", d.mixed_constant},
                    {"mixed_at_zero", d.mixed_at_zero},
                    {"tolerance", d.tolerance},
                    {"pass", d.ok}};
  j["flatness"] = {{"slice_second", f.slice_second},       {"slice_third", f.slice_third},
                   {"interior_second", f.interior_second}, {"interior_third", f.interior_third},
                   {"second_ratio", f.second_ratio()},     {"third_ratio", f.third_ratio()},
                   {"residual_inf", c.residual_inf},       {"tolerance", f.tolerance},
                   {"pass", f.pass}};
  j["eigen"] = {{"fields", e.fields},
                {"eps", {e.eps_hi, e.eps_lo}},
                {"max_vector_disagreement", e.max_disagreement},
                {"ratio_tau", {e.tau_hi, e.tau_lo}},
                {"ratio_zero", {e.zero_hi, e.zero_lo}},
                {"ratio_vectors", {e.vec_hi, e.vec_lo}},
                {"ratio_derivative", {e.der_hi, e.der_lo}},
                {"tau_stability", e.tau_stability},
                {"zero_stability", e.zero_stability},
                {"vector_stability", e.vector_stability},
                {"derivative_stability", e.derivative_stability},
                {"error", e.error},
                {"pass", e.pass}};
  j["pass"] = c.pass;
  write_json(cfg, "certify.json", j);

  out << "segments: " << c.segments.rows.size() << " triples, min margin " << c.segments.min_margin
      << ", min excess " << c.segments.min_excess << ", failures " << c.segments.failures << ' '
      << verdict(c.segments.pass) << '\n';
  out << "dominance: min margin " << d.min_margin << " (tolerance " << d.tolerance << "), mixed constant "
      << d.mixed_constant << ' ' << verdict(d.ok) << '\n';
  out << "flatness: slice " << f.slice_second << " / " << f.slice_third << ", interior " << f.interior_second
      << " / " << f.interior_third << ", tolerance " << f.tolerance << ' ' << verdict(f.pass) << '\n';
  if (e.fields > 0) {
    out << "eigen: " << e.fields << " fields, vector disagreement " << e.max_disagreement << ", ratio stability tau "
        << e.tau_stability << " zero " << e.zero_stability << " vectors " << e.vector_stability << " derivative "
        << e.derivative_stability;
    if (!e.error.empty()) out << " (" << e.error << ")";
    out << ' ' << verdict(e.pass) << '\n';
  }
  out << "certify " << verdict(c.pass) << '\n';
  return c.pass ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const std::vector<double> eps = descending(cfg.eps_list);
  if (eps.size() < 2) throw ConfigError("sweep needs at least two eps values");
  const Instance inst = make_instance(cfg, eps.front());
  const ResidualTable res = residual_psi(inst.approx, inst.grid, eps);
  const bool slope_ok = res.slope >= 4.5;

  struct SolveRow {
    std::string status;
    int steps = 0;
    double g0 = 0.0;
    double gl = 0.0;
  };
  std::vector<SolveRow> solves;
  double eps0 = 0.0;
  if (cfg.sweep_solve) {
    for (double e : eps) {
      SolveRow row;
      try {
        const Instance ie = make_instance(cfg, e);
        const NashMoser nm(ie.approx, ie.grid, cfg.nashmoser_params(ie.spec.n()));
        const IterationState st = nm.run();
        row.status = to_string(st.trace.status);
        row.steps = static_cast<int>(st.trace.rows.size()) - 1;
        row.g0 = st.trace.rows.front().g_norm_inf;
        row.gl = st.trace.rows.back().g_norm_inf;
        if (st.trace.status == RunStatus::converged) eps0 = std::max(eps0, e);
      } catch (const std::runtime_error& ex) {
        row.status = std::string("error: ") + ex.what();
      }
      solves.push_back(row);
    }
  }

  prepare_out(cfg);
  if (cfg.wants("csv")) {
    auto csv = open_csv(cfg.out_path("sweep.csv"));
    csv << "eps,residual_psi";
    if (cfg.sweep_solve) csv << ",status,steps,g_norm_inf_initial,g_norm_inf_final";
    csv << '\n';
    for (std::size_t i = 0; i < eps.size(); ++i) {
      csv << eps[i] << ',' << res.residual[i];
      if (cfg.sweep_solve) {
        std::string status = solves[i].status;
        std::replace(status.begin(), status.end(), ',', ';');
        csv << ',' << status << ',' << solves[i].steps << ',' << solves[i].g0 << ',' << solves[i].gl;
      }
      csv << '\n';
    }
  }
  json j;
  j["command"] = "sweep";
  j["problem"] = problem_json(inst.spec);
  j["grid"] = grid_json(inst.grid);
  j["eps"] = eps;
  j["residual_psi"] = res.residual;
  j["slope"] = res.slope;
  if (cfg.sweep_solve) {
    json s = json::array();
    for (std::size_t i = 0; i < eps.size(); ++i)
      s.push_back({{"eps", eps[i]},
                   {"status", solves[i].status},
                   {"steps", solves[i].steps},
                   {"g_norm_inf_initial", solves[i].g0},
                   {"g_norm_inf_final", solves[i].gl}});
    j["solves"] = s;
    j["largest_converged_eps"] = eps0 > 0.0 ? json(eps0) : json(nullptr);
  }
  j["pass"] = slope_ok;
  write_json(cfg, "sweep.json", j);

  for (std::size_t i = 0; i < eps.size(); ++i) {
    out << "eps=" << eps[i] << ": residual " << res.residual[i];
    if (cfg.sweep_solve) out << ", solve " << solves[i].status << " in " << solves[i].steps << " steps";
    out << '\n';
  }
  out << "residual slope " << res.slope << " (need >= 4.5) " << verdict(slope_ok) << '\n';
  if (cfg.sweep_solve) {
    if (eps0 > 0.0)
      out << "largest converged eps " << eps0 << '\n';
    else
      out << "no eps in the list converged\n";
  }
  return slope_ok ? 0 : 1;
}

int cmd_schedule(const RunConfig& cfg, int n, std::ostream& out) {
  if (!cfg.kmodel.empty()) n = Polynomial::load(cfg.kmodel).dim();
  const int k = cfg.k;
  if (n < 2 || k < 2 || k > n) throw ConfigError("require 2 <= k <= n");
  NashMoserParams p;
  p.sigma = cfg.sigma;
  p.gamma = cfg.gamma;
  p.a_exp = cfg.a_exp;
  p.s_star = cfg.s_star;
  const ScheduleReport frontier = check_schedule(p, n, k);
  if (p.a_exp <= 0.0 && std::isfinite(frontier.a_min)) p.a_exp = frontier.a_min;
  if (p.s_star <= 0.0 && std::isfinite(frontier.s_star_min)) p.s_star = frontier.s_star_min;
  const ScheduleReport r = check_schedule(p, n, k);
  const bool sigma_ok = p.sigma > 1.0;
  const bool pass = sigma_ok && r.feasible;

  json j;
  j["command"] = "schedule";
  j["n"] = n;
  j["k"] = k;
  j["sigma"] = p.sigma;
  j["gamma"] = p.gamma;
  j["beta"] = r.beta;
  j["a"] = p.a_exp;
  j["s_star"] = p.s_star;
  j["a_min"] = r.a_min;
  j["s_star_min"] = r.s_star_min;
  j["condition1"] = {{"lhs", r.lhs1}, {"rhs", r.rhs1}, {"ok", r.ok1}};
  j["condition2"] = {{"lhs", r.lhs2}, {"rhs", r.rhs2}, {"ok", r.ok2}};
  if (sigma_ok && p.gamma > 1.0) {
    const SigmaProxy sp = sigma_largeness(p.sigma, p.gamma, 1.0, 1.0);
    j["sigma_proxy_unit_constants"] = {{"worst", sp.worst}, {"worst_m", sp.worst_m}, {"sigma_min", sp.sigma_min}};
  }
  j["message"] = sigma_ok ? r.message : "sigma must exceed 1";
  j["pass"] = pass;
  if (cfg.wants("json")) {
    prepare_out(cfg);
    write_json(cfg, "schedule.json", j);
  }

  out << "n = " << n << ", k = " << k << ", gamma = " << p.gamma << ", beta = " << r.beta << '\n';
  out << "a_min = " << r.a_min << '\n';
  out << "s_star_min = " << r.s_star_min << '\n';
  out << "a = " << p.a_exp << ", s_star = " << p.s_star << '\n';
  if (!sigma_ok) out << "sigma must exceed 1\n";
  out << r.message << '\n';
  out << "schedule " << verdict(pass) << '\n';
  return pass ? 0 : 1;
}

namespace {

// Flag values land in `given`; only options that were actually passed are
// copied over the defaults and the config file.
struct Flags {
  RunConfig given;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> copies;

  template <class T>
  void add(CLI::App* app, const std::string& name, T RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_option(name, given.*field, help);
    copies.emplace_back(opt, [this, field](RunConfig& dst) { dst.*field = given.*field; });
  }

  template <class T>
  void add_list(CLI::App* app, const std::string& name, std::vector<T> RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_option(name, given.*field, help)->delimiter(',');
    copies.emplace_back(opt, [this, field](RunConfig& dst) { dst.*field = given.*field; });
  }

  void add_optional(CLI::App* app, const std::string& name, std::optional<double> RunConfig::*field,
                    std::shared_ptr<double> slot, const std::string& help) {
    CLI::Option* opt = app->add_option(name, *slot, help);
    copies.emplace_back(opt, [field, slot](RunConfig& dst) { dst.*field = *slot; });
  }

  void apply(RunConfig& cfg) const {
    for (const auto& [opt, copy] : copies)
      if (opt->count() > 0) copy(cfg);
  }
};

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Degenerate k-Hessian toolkit: construction, Nash-Moser solve and convexity certificate"};
  app.require_subcommand(1);

  Flags flags;
  std::string config_path;
  bool eps_sweep = false;
  int schedule_n = 2;
  std::uint64_t seed = 0;
  auto alpha = std::make_shared<double>(0.0);
  auto mu_weight = std::make_shared<double>(0.0);
  std::string mode_name;
  bool no_timing = false;
  bool no_sweep_solve = false;
  bool dump_system = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI file; flags override its values")->check(CLI::ExistingFile);
    flags.add(sub, "--out", &RunConfig::out_dir, "output directory");
    flags.add_list(sub, "--format", &RunConfig::formats, "report formats: csv, json");
    sub->add_flag("--no-timing", no_timing, "write wall_ms as 0 so reruns are byte-identical");
    flags.add(sub, "--kmodel", &RunConfig::kmodel, "polynomial K model file");
    flags.add(sub, "--k", &RunConfig::k, "Hessian order k");
    flags.add_list(sub, "--tau", &RunConfig::tau, "tau_1 > ... > tau_{k-1} > 0");
    flags.add(sub, "--epsilon", &RunConfig::epsilon, "scale parameter");
    flags.add(sub, "--delta0", &RunConfig::delta0, "half width of the Dirichlet box");
    flags.add_optional(sub, "--alpha", &RunConfig::alpha, alpha, "corrector weight (default: half the bound)");
    flags.add(sub, "--periodic", &RunConfig::periodic, "nodes per periodic axis");
    flags.add(sub, "--dirichlet", &RunConfig::dirichlet, "intervals per Dirichlet axis");
  };
  auto iteration = [&](CLI::App* sub) {
    sub->add_option("--mode", mode_name, "practical or faithful")->check(CLI::IsMember({"practical", "faithful"}));
    flags.add(sub, "--sigma", &RunConfig::sigma, "schedule base sigma > 1");
    flags.add(sub, "--gamma", &RunConfig::gamma, "schedule exponent gamma > 1");
    flags.add(sub, "--a", &RunConfig::a_exp, "exponent a (default: smallest admissible)");
    flags.add(sub, "--s-star", &RunConfig::s_star, "target regularity s* (default: smallest admissible)");
    flags.add(sub, "--max-iter", &RunConfig::max_iter, "iteration cap");
    flags.add(sub, "--stop-tol", &RunConfig::stop_tol, "relative stop tolerance on ||g||_inf");
    flags.add(sub, "--norm-s", &RunConfig::norm_s, "Sobolev order of w_norm_s");
    flags.add_optional(sub, "--mu-weight", &RunConfig::mu_weight, mu_weight, "weight exponent of the linear solves");
  };

  CLI::App* construct = app.add_subcommand("construct", "build K~, P and psi; trace identity, dominance, residual");
  common(construct);
  flags.add_list(construct, "--eps-list", &RunConfig::eps_list, "eps values for --eps-sweep");
  construct->add_flag("--eps-sweep", eps_sweep, "residual table over --eps-list with fitted slope");

  CLI::App* solve = app.add_subcommand("solve", "run the Nash-Moser iteration");
  common(solve);
  iteration(solve);
  solve->add_option("--seed", seed, "seed recorded with the run")->required();
  solve->add_flag("--dump-system", dump_system, "write the first linear system to system0.txt");

  CLI::App* cert = app.add_subcommand("certify", "convexity certificate of a solved snapshot");
  common(cert);
  cert->add_option("--seed", seed, "seed of the random batteries")->required();
  flags.add(cert, "--w", &RunConfig::w_path, "w snapshot (default: <out>/w.snap)");
  flags.add(cert, "--segments", &RunConfig::segments, "number of random segment triples");
  flags.add(cert, "--quad-order", &RunConfig::quad_order, "initial Gauss-Legendre order");
  flags.add(cert, "--w-scale", &RunConfig::w_scale, "multiply w before certifying");
  flags.add(cert, "--eigen-fields", &RunConfig::eigen_fields, "random fields for the eigen-structure check");
  flags.add(cert, "--eigen-grid", &RunConfig::eigen_grid, "grid points per axis for the eigen check");

  CLI::App* sweep = app.add_subcommand("sweep", "eps scaling of the residual and per-eps solves");
  common(sweep);
  iteration(sweep);
  flags.add_list(sweep, "--eps-list", &RunConfig::eps_list, "eps values");
  sweep->add_flag("--no-sweep-solve", no_sweep_solve, "skip the per-eps solves");

  CLI::App* sched = app.add_subcommand("schedule", "exponent conditions of the iteration schedule");
  sched->add_option("--config", config_path, "INI file; flags override its values")->check(CLI::ExistingFile);
  flags.add(sched, "--out", &RunConfig::out_dir, "output directory");
  flags.add_list(sched, "--format", &RunConfig::formats, "report formats: csv, json");
  flags.add(sched, "--kmodel", &RunConfig::kmodel, "polynomial K model file (sets n)");
  sched->add_option("--n", schedule_n, "dimension when no K model is given");
  flags.add(sched, "--k", &RunConfig::k, "Hessian order k");
  flags.add(sched, "--sigma", &RunConfig::sigma, "schedule base sigma > 1");
  flags.add(sched, "--gamma", &RunConfig::gamma, "schedule exponent gamma");
  flags.add(sched, "--a", &RunConfig::a_exp, "exponent a (default: smallest admissible)");
  flags.add(sched, "--s-star", &RunConfig::s_star, "target regularity s* (default: smallest admissible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    flags.apply(cfg);
    if (!mode_name.empty()) cfg.mode = parse_schedule_mode(mode_name);
    if (no_timing) cfg.timing = false;
    if (no_sweep_solve) cfg.sweep_solve = false;
    if (dump_system) cfg.dump_system = true;
    if (*solve || *cert) cfg.seed = seed;

    if (*construct) return cmd_construct(cfg, eps_sweep, std::cout);
    if (*solve) return cmd_solve(cfg, std::cout);
    if (*cert) return cmd_certify(cfg, std::cout);
    if (*sweep) return cmd_sweep(cfg, std::cout);
    return cmd_schedule(cfg, schedule_n, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace khess
