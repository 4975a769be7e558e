#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "khess/approx.hpp"
#include "khess/grid.hpp"
#include "khess/linsolve.hpp"

namespace khess {

using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Nodes and weights of the q-point Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int q);

struct SegmentTest {
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  double t = 0.5;
  int order = 12;
};

/// x(s, mu) = (s mu + (1-s) t) y + (s (1-mu) + (1-s)(1-t)) z
Eigen::VectorXd segment_point(const SegmentTest& test, double s, double mu);

struct SegmentResult {
  double margin = 0.0;
  /// Order at which orders q and q+4 agreed.
  int order = 0;
  double disagreement = 0.0;
};

/// sum_ij (y_i - z_i)(y_j - z_j) int int u_ij(x(s, mu)) dmu ds by tensor
/// Gauss-Legendre. The order is raised by 4 until orders q and q+4 agree to
/// 1e-8 relative; QuadratureError past order 64.
SegmentResult segment_convexity(const HessianFn& hess, const SegmentTest& test);

/// int int |x''(s, mu)|^2 dmu ds with x'' the components from axis k-1 on.
double segment_b(const SegmentTest& test, int k);

/// D^2_y u for u(y) = psi(y) + eps^{17/2} w(y / eps^2): exact D^2 psi plus
/// eps^{9/2} times the tensor-cubic interpolant of the finite-difference
/// Hessian of w.
class SolutionHessian {
 public:
  SolutionHessian(const ApproxSolution& approx, const GridField& w);
  Eigen::MatrixXd operator()(const Eigen::VectorXd& y) const;
  /// Interpolated D^2_x w at x.
  Eigen::MatrixXd w_hessian(const Eigen::VectorXd& x) const;
  HessianFn fn() const;

 private:
  ApproxSolution approx_;
  GridSpec grid_;
  std::vector<GridField> hw_;  // upper triangle, row-major
  double scale_ = 0.0;
};

struct DominanceResult {
  /// min over nodes and j >= k of r_jj - sum_{i>=k, i!=j} |r_ij| - alpha eps^4 |x''|^2
  double min_margin = 0.0;
  Eigen::VectorXd worst_point;
  int worst_j = 0;
  /// max over x'' != 0 of max_{i<k<=j} |r_ij| / (eps^4 |x''| + eps^{9/2} |x''|^2)
  double mixed_constant = 0.0;
  /// max over the x'' = 0 slice of |r_ij|, i < k <= j
  double mixed_at_zero = 0.0;
  double tolerance = 0.0;
  bool ok = false;
};

/// r(w) at every grid node.
std::vector<Eigen::MatrixXd> r_field(const GridField& w, const Background& bg);

/// Passes when min_margin >= -1e-12 max|r_ij| over the degenerate block.
DominanceResult dominance_margin(const std::vector<Eigen::MatrixXd>& r, const GridSpec& grid,
                                 const ProblemSpec& spec);

struct FlatnessReport {
  /// max on x'' = 0 of |d_i d_j w| with i or j a Dirichlet axis
  double slice_second = 0.0;
  /// max on x'' = 0 of |d_i d_j d_p w| with p and (i or j) Dirichlet axes
  double slice_third = 0.0;
  /// same maxima over all interior nodes
  double interior_second = 0.0;
  double interior_third = 0.0;
  double tolerance = 0.0;
  /// slice maxima within tolerance
  bool pass = false;
  double second_ratio() const;
  double third_ratio() const;
};

/// max(10 h^2, 10 residual_inf) with h the coarsest spacing.
double flatness_tol(const GridSpec& grid, double residual_inf);

FlatnessReport boundary_flatness(const GridField& w, double residual_inf);

struct EigenPerturbation {
  std::vector<double> tau;
  double epsilon = 0.0;
  /// per node, descending
  std::vector<Eigen::VectorXd> lambda;
  /// per node, rows T_1..T_{k-1} from the reduced elimination solve
  std::vector<Eigen::MatrixXd> t_rows;
  /// per node, the same rows from the symmetric eigensolver after sign alignment
  std::vector<Eigen::MatrixXd> t_rows_eigen;
  double max_vector_disagreement = 0.0;
  /// max over nodes of sum_{i<k} |lambda_i - tau_i| / (eps sum |w_ij|)
  double ratio_tau = 0.0;
  /// max over nodes of sum_{i>=k} |lambda_i| / (eps^{1/2} (sum |w_ij|)^{1/2})
  double ratio_zero = 0.0;
  /// max over nodes of (sum_{i<k} |T_ii - 1| + sum_{i<k, j!=i} |T_ij|) / (eps sum |w_ij|)
  double ratio_vectors = 0.0;
  /// max over nodes of sum_{i<k} sum_j |D T_ij| / (eps sum |w_ijl|)
  double ratio_derivative = 0.0;
  /// T_ij sampled as grid fields, index i * n + j for i < k-1
  std::vector<GridField> t_fields;
};

/// delta = 1/4 min_i (1 - tau_{i+1}/tau_i, tau_i/tau_{i+1} - 1), or 1/4 when k = 2.
double eigen_bracket_delta(const std::vector<double>& tau);
/// 1/4 min_i (tau_i - tau_{i+1}); +inf when k = 2.
double eigen_gap_tol(const std::vector<double>& tau);

/// Eigen-structure of diag(tau, 0) + eps D^2 w at every grid node. The first
/// k-1 eigenvalues are found by bisection of det(r - t I) on
/// [(1-delta) tau_i, (1+delta) tau_i]; each eigenvector then solves the
/// system with its i-th component fixed to 1 and is normalized with T_ii > 0.
/// Throws NumericError when a bracket holds no root or the gap collapses.
EigenPerturbation eig_perturb(const std::vector<double>& tau, const GridField& w, double eps);

/// Random smooth field with ||w||_{C^3} = 1: a few modes cos(l . x' + phase)
/// times a random cubic in x''.
GridField random_c3_field(const GridSpec& grid, std::mt19937_64& rng, int modes = 4);

}  // namespace khess
