#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "khess/approx.hpp"
#include "khess/grid.hpp"
#include "khess/nashmoser.hpp"

namespace khess {

/// Everything a subcommand needs. Defaults describe the 2D desk instance;
/// a config file overrides them and command-line flags override both.
struct RunConfig {
  // [problem]
  std::string kmodel;
  int k = 2;
  std::vector<double> tau{1.0};
  double epsilon = 0.1;
  double delta0 = 0.5;
  std::optional<double> alpha;

  // [grid]
  int periodic = 64;
  int dirichlet = 64;

  // [nashmoser]
  ScheduleMode mode = ScheduleMode::practical;
  double sigma = 2.0;
  double gamma = 1.2;
  double a_exp = 0.0;
  double s_star = 0.0;
  int max_iter = 15;
  double stop_tol = 1e-10;
  int norm_s = 2;
  std::optional<double> mu_weight;

  // [output]
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool timing = true;
  /// solve: write the first linear system as "row col value" lines.
  bool dump_system = false;

  // --seed only
  std::optional<std::uint64_t> seed;

  // [certify]
  std::string w_path;
  int segments = 500;
  int quad_order = 12;
  double w_scale = 1.0;
  int eigen_fields = 10;
  int eigen_grid = 16;

  // [sweep]
  std::vector<double> eps_list{0.25, 0.125, 0.0625, 0.03125};
  bool sweep_solve = true;

  bool wants(const std::string& format) const;
  NashMoserParams nashmoser_params(int n) const;
  std::string out_path(const std::string& file) const;
  /// w_path, or <out_dir>/w.snap when unset.
  std::string snapshot_path() const;
};

/// Reads an INI file with [problem], [grid], [nashmoser], [output],
/// [certify] and [sweep] sections into cfg. A relative kmodel path resolves
/// against the file's directory. Unknown keys throw ConfigError.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Splits "a, b c" on commas and whitespace.
std::vector<std::string> split_list(const std::string& s);

struct Instance {
  KModel kmodel;
  ProblemSpec spec;
  ApproxSolution approx;
  GridSpec grid;
};

/// Loads the KModel and builds spec, approximate solution and grid.
Instance make_instance(const RunConfig& cfg);
Instance make_instance(const RunConfig& cfg, double epsilon);

}  // namespace khess
