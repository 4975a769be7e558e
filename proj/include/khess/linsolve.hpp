#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <vector>

#include "khess/approx.hpp"
#include "khess/grid.hpp"

namespace khess {

/// Grid samples of the approximate solution: D^2 psi(eps^2 x) and K~(eps^2 x).
struct Background {
  GridSpec grid;
  int k = 0;
  double epsilon = 0.0;
  std::vector<Eigen::MatrixXd> hess_psi;
  GridField ktilde;

  static Background build(const ApproxSolution& approx, const GridSpec& grid);
  /// eps^{9/2}
  double w_scale() const;
};

/// Second-order finite-difference Hessian of f at node id. Central stencils in
/// the interior (periodic wrap on x'), one-sided on Dirichlet faces. This is
/// the stencil the linear operator uses.
Eigen::MatrixXd fd_hessian(const GridField& f, std::size_t id);

/// r(w) = D^2 psi(eps^2 x) + eps^{9/2} D^2 w(x) at node id.
Eigen::MatrixXd r_of_w(const GridField& w, const Background& bg, std::size_t id);

/// G(w) = eps^{-9/2} (S_k(r(w)) - K~) on interior nodes; zero on Dirichlet faces,
/// where the boundary condition replaces the equation.
GridField residual_G(const GridField& w, const Background& bg);

/// Derivative order of the C-norm budget ||w||_{C^{[n/2]+3}} <= 1.
int budget_order(int n);

/// sum_ij a_ij d_i d_j rho + sum_i b_i d_i rho + c rho = g_rhs, rho periodic in x',
/// zero on the x'' faces. The unknown is the weighted rho_bar = rho e^{mu |x''|^2}.
struct LinearProblem {
  GridSpec grid;
  /// a[i * n + j], symmetric.
  std::vector<GridField> a;
  std::vector<GridField> b;
  GridField c;
  GridField g_rhs;
  /// e^{mu sum_{j>=k} x_j^2}
  GridField weight;
  double mu = 0.0;
  double nu = 0.0;
  double theta = 0.0;
  /// ||w||_{C^{[n/2]+3}} at assembly; above 1 the estimates are not guaranteed.
  double w_cnorm = 0.0;
  bool budget_warning = false;

  int n() const { return grid.n(); }
  const GridField& a_ij(int i, int j) const { return a[static_cast<std::size_t>(i * grid.n() + j)]; }
  /// Sets g_rhs = e^{mu |x''|^2} g.
  void set_rhs(const GridField& g);
  /// Constant coefficients, no weight.
  static LinearProblem constant(const GridSpec& grid, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                double c);
};

/// mu = min(1/delta0, 4)/2.
double default_mu(double delta0);
/// nu = max(1e-6, 0.1 theta).
double default_nu(double theta);

/// Coefficients of the regularized weighted operator at w:
///   a_ij = S_k^{ij}(r(w)) + delta_ij (theta + nu),
///   b_i  = -4 sum_{j>=k} mu x_j S_k^{ij} - [i>=k] 4 mu x_i theta,
///   c    = -2 mu sum_{i>=k} (S_k^{ii} + theta) + 4 sum_{i,j>=k} mu^2 x_i x_j S_k^{ij}
///          + 4 theta sum_{i>=k} mu^2 x_i^2.
/// g_rhs is left at zero; see LinearProblem::set_rhs.
LinearProblem assemble(const GridField& w, const Background& bg, double theta, double nu, double mu);
LinearProblem assemble(const GridField& w, const ApproxSolution& approx, double theta, double nu, double mu);

struct EllipticityReport {
  /// min over nodes and sampled unit xi of theta + sum S_k^{ij} xi_i xi_j
  double min_form = 0.0;
  /// min over nodes of theta + lambda_min(S_k^{ij})
  double min_eigen = 0.0;
  Eigen::VectorXd worst_point;
  std::size_t directions = 0;
  bool pass = false;
};

constexpr double kEllipticityTol = 1e-8;

EllipticityReport check_degenerate_ellipticity(const GridField& w, const Background& bg, double theta,
                                               std::size_t directions = 1024);

struct EllipticityThreshold {
  /// Largest eps in the bracket for which the check passed.
  double eps_pass = 0.0;
  /// Smallest eps observed to fail; equals eps_hi when every probe passed.
  double eps_fail = 0.0;
  bool all_pass = false;
  int probes = 0;
};

/// Bisection in log eps on (eps_lo, eps_hi] with w fixed and theta = sup|G(w)|
/// recomputed at each eps.
EllipticityThreshold ellipticity_threshold(const GridField& w, const ApproxSolution& approx,
                                           const GridSpec& grid, double eps_lo, double eps_hi,
                                           int iterations = 20);

/// Interior unknowns and the assembled sparse matrix for the weighted unknown.
struct SparseSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  Eigen::VectorXd rhs;
  /// grid node id of each unknown
  std::vector<std::size_t> nodes;
};

SparseSystem build_system(const LinearProblem& prob);

/// Coordinate text dump: one "row col value" line per stored entry, 0-based.
void write_sparse(const SparseSystem& sys, const std::string& path);

struct SolveReport {
  GridField rho;
  GridField rho_bar;
  double relative_residual = 0.0;
  int iterations = 0;
  std::string method;
};

constexpr double kSolverTol = 1e-10;

/// SparseLU for n = 2; BiCGSTAB with an incomplete LU preconditioner otherwise,
/// falling back to SparseLU when the iteration stalls. Throws SolverError when
/// the relative residual exceeds 1e-8.
SolveReport solve_report(const LinearProblem& prob);
/// Returns rho = rho_bar e^{-mu |x''|^2}.
GridField solve(const LinearProblem& prob);

/// ||rho||_s / ||g||_s; 0 when both vanish, +inf when only g vanishes.
double apriori_ratio(const GridField& rho, const GridField& g, int s);

struct CoercivityReport {
  /// min over the battery of (-<L rho, rho> - nu ||D rho||^2) / ||rho||^2
  double constant = 0.0;
  /// 2 sigma_{k-1}(tau) for comparison; zero when not supplied.
  double reference = 0.0;
  std::size_t samples = 0;
};

/// Discrete bilinear form of the weighted operator on random fields vanishing
/// on the faces.
CoercivityReport measure_coercivity(const LinearProblem& prob, std::size_t count, std::uint64_t seed);

}  // namespace khess
