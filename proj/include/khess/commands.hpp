#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "khess/config.hpp"
#include "khess/convexity.hpp"

namespace khess {

struct SegmentRow {
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  double t = 0.0;
  double margin = 0.0;
  /// 1/4 sum_{i<k} tau_i xi_i^2 + 1/2 alpha eps^4 b(t) |xi''|^2
  double lower_bound = 0.0;
  int order = 0;
};

struct SegmentSummary {
  std::vector<SegmentRow> rows;
  double min_margin = 0.0;
  /// min over rows of (margin - lower_bound) / |xi|^2
  double min_excess = 0.0;
  int failures = 0;
  bool pass = false;
};

/// Random (y, z, t) triples in Omega_eps; passes when every margin is positive
/// and at least lower_bound - 1e-12 |xi|^2.
SegmentSummary certify_segments(const ApproxSolution& approx, const GridField& w, int count, int order,
                                std::uint64_t seed);

struct EigenSummary {
  int fields = 0;
  double eps_hi = 1e-2;
  double eps_lo = 1e-3;
  /// per field, at eps_hi and eps_lo
  std::vector<double> tau_hi, tau_lo, zero_hi, zero_lo, vec_hi, vec_lo, der_hi, der_lo;
  double max_disagreement = 0.0;
  /// max over fields of max(r_hi / r_lo, r_lo / r_hi)
  double tau_stability = 0.0;
  double zero_stability = 0.0;
  double vector_stability = 0.0;
  double derivative_stability = 0.0;
  std::string error;
  /// no gap collapse and eigenvector rows agree to 1e-8
  bool pass = false;
};

/// eig_perturb on random fields with ||w||_{C^3} = 1 at eps_hi and eps_lo.
EigenSummary certify_eigen(const std::vector<double>& tau, int n, int k, int points, double delta0, int fields,
                           std::uint64_t seed, double eps_hi = 1e-2, double eps_lo = 1e-3);

struct Certificate {
  SegmentSummary segments;
  DominanceResult dominance;
  FlatnessReport flatness;
  double residual_inf = 0.0;
  EigenSummary eigen;
  bool pass = false;
};

Certificate certify(const Instance& inst, const GridField& w, const RunConfig& cfg);

int cmd_construct(const RunConfig& cfg, bool eps_sweep, std::ostream& out);
int cmd_solve(const RunConfig& cfg, std::ostream& out);
int cmd_certify(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
/// n is used when cfg.kmodel is empty.
int cmd_schedule(const RunConfig& cfg, int n, std::ostream& out);

/// Exit status: 0 when every check passes, 1 when a check fails, 2 on
/// configuration or runtime errors.
int cli_main(int argc, char** argv);

}  // namespace khess
