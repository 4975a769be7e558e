#include "khess/config.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "khess/errors.hpp"

namespace khess {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"problem.kmodel", [](RunConfig& c, const std::string&, const std::string& v) { c.kmodel = v; }},
      {"problem.k", [](RunConfig& c, const std::string& k, const std::string& v) { c.k = static_cast<int>(to_int(k, v)); }},
      {"problem.tau", [](RunConfig& c, const std::string& k, const std::string& v) { c.tau = to_doubles(k, v); }},
      {"problem.epsilon", [](RunConfig& c, const std::string& k, const std::string& v) { c.epsilon = to_double(k, v); }},
      {"problem.delta0", [](RunConfig& c, const std::string& k, const std::string& v) { c.delta0 = to_double(k, v); }},
      {"problem.alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha = to_double(k, v); }},
      {"grid.periodic", [](RunConfig& c, const std::string& k, const std::string& v) { c.periodic = static_cast<int>(to_int(k, v)); }},
      {"grid.dirichlet", [](RunConfig& c, const std::string& k, const std::string& v) { c.dirichlet = static_cast<int>(to_int(k, v)); }},
      {"nashmoser.mode", [](RunConfig& c, const std::string&, const std::string& v) { c.mode = parse_schedule_mode(v); }},
      {"nashmoser.sigma", [](RunConfig& c, const std::string& k, const std::string& v) { c.sigma = to_double(k, v); }},
      {"nashmoser.gamma", [](RunConfig& c, const std::string& k, const std::string& v) { c.gamma = to_double(k, v); }},
      {"nashmoser.a", [](RunConfig& c, const std::string& k, const std::string& v) { c.a_exp = to_double(k, v); }},
      {"nashmoser.s_star", [](RunConfig& c, const std::string& k, const std::string& v) { c.s_star = to_double(k, v); }},
      {"nashmoser.max_iter", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_iter = static_cast<int>(to_int(k, v)); }},
      {"nashmoser.stop_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.stop_tol = to_double(k, v); }},
      {"nashmoser.norm_s", [](RunConfig& c, const std::string& k, const std::string& v) { c.norm_s = static_cast<int>(to_int(k, v)); }},
      {"nashmoser.mu_weight", [](RunConfig& c, const std::string& k, const std::string& v) { c.mu_weight = to_double(k, v); }},
      {"output.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"output.formats", [](RunConfig& c, const std::string&, const std::string& v) { c.formats = split_list(v); }},
      {"output.dump_system", [](RunConfig& c, const std::string& k, const std::string& v) { c.dump_system = to_bool(k, v); }},
      {"output.timing", [](RunConfig& c, const std::string& k, const std::string& v) { c.timing = to_bool(k, v); }},
      {"certify.w", [](RunConfig& c, const std::string&, const std::string& v) { c.w_path = v; }},
      {"certify.segments", [](RunConfig& c, const std::string& k, const std::string& v) { c.segments = static_cast<int>(to_int(k, v)); }},
      {"certify.quad_order", [](RunConfig& c, const std::string& k, const std::string& v) { c.quad_order = static_cast<int>(to_int(k, v)); }},
      {"certify.w_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.w_scale = to_double(k, v); }},
      {"certify.eigen_fields", [](RunConfig& c, const std::string& k, const std::string& v) { c.eigen_fields = static_cast<int>(to_int(k, v)); }},
      {"certify.eigen_grid", [](RunConfig& c, const std::string& k, const std::string& v) { c.eigen_grid = static_cast<int>(to_int(k, v)); }},
      {"sweep.eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.eps_list = to_doubles(k, v); }},
      {"sweep.solve", [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_solve = to_bool(k, v); }},
  };
  return m;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == '[' || ch == ']' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(strip_quotes(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(strip_quotes(cur));
  return out;
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

NashMoserParams RunConfig::nashmoser_params(int n) const {
  NashMoserParams p;
  p.sigma = sigma;
  p.gamma = gamma;
  p.a_exp = a_exp;
  p.s_star = s_star;
  p.max_iter = max_iter;
  p.stop_tol = stop_tol;
  p.mode = mode;
  p.norm_s = norm_s;
  p.mu_weight = mu_weight;
  return NashMoserParams::create(n, k, p);
}

std::string RunConfig::out_path(const std::string& file) const {
  return (std::filesystem::path(out_dir) / file).string();
}

std::string RunConfig::snapshot_path() const { return w_path.empty() ? out_path("w.snap") : w_path; }

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(path + ": unknown key '" + key + "'");
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    it->second(cfg, key, strip_quotes(value));
  }
  if (!cfg.kmodel.empty() && std::filesystem::path(cfg.kmodel).is_relative())
    cfg.kmodel = (std::filesystem::path(path).parent_path() / cfg.kmodel).lexically_normal().string();
}

Instance make_instance(const RunConfig& cfg) { return make_instance(cfg, cfg.epsilon); }

Instance make_instance(const RunConfig& cfg, double epsilon) {
  if (cfg.kmodel.empty()) throw ConfigError("no kmodel file given");
  KModel km = KModel::from_polynomial(Polynomial::load(cfg.kmodel));
  const int n = km.dim();
  ProblemSpec spec = ProblemSpec::create(n, cfg.k, cfg.tau, km.curvatures(cfg.k), epsilon, cfg.delta0, cfg.alpha);
  km.validate(cfg.k, spec.half_widths());
  ApproxSolution approx = build_P(km, Cutoff(), spec);
  GridSpec grid = GridSpec::uniform(n, cfg.k, cfg.periodic, cfg.dirichlet, cfg.delta0);
  return {std::move(km), std::move(spec), std::move(approx), std::move(grid)};
}

}  // namespace khess
