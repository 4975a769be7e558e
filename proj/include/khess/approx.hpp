#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "khess/cutoff.hpp"
#include "khess/grid.hpp"
#include "khess/jet.hpp"
#include "khess/kmodel.hpp"

namespace khess {

/// Equation instance S_k[u] = K near a degenerate point.
class ProblemSpec {
 public:
  /// Validates all invariants. alpha defaults to choose_alpha().
  static ProblemSpec create(int n, int k, std::vector<double> tau, std::vector<double> curvatures,
                            double epsilon, double delta0,
                            std::optional<double> alpha = std::nullopt);

  int n() const { return n_; }
  int k() const { return k_; }
  const std::vector<double>& tau() const { return tau_; }
  /// c_k..c_n, indexed from 0.
  const std::vector<double>& curvatures() const { return c_; }
  double c(int j) const { return c_[static_cast<std::size_t>(j - k_)]; }
  double epsilon() const { return epsilon_; }
  double alpha() const { return alpha_; }
  double delta0() const { return delta0_; }
  /// sigma_{k-1}(tau).
  double sigma_tau() const { return sigma_tau_; }
  double alpha_bound() const;

  ProblemSpec with_epsilon(double eps) const;
  /// Bypasses the alpha bound; for negative controls only.
  ProblemSpec with_alpha_unchecked(double alpha) const;

  /// Half widths of Omega_eps in y coordinates.
  Eigen::VectorXd half_widths() const;

 private:
  int n_ = 0;
  int k_ = 0;
  std::vector<double> tau_;
  std::vector<double> c_;
  double epsilon_ = 0.0;
  double alpha_ = 0.0;
  double delta0_ = 0.0;
  double sigma_tau_ = 0.0;
};

/// Upper bound min_j{c_j / (2 sigma_{k-1}(tau))} / (16(n-k)^2 + 4(n-k+1)).
double alpha_upper_bound(int n, int k, const std::vector<double>& tau,
                         const std::vector<double>& curvatures);
/// Half of alpha_upper_bound. Throws ConfigError if the bound is not positive.
double choose_alpha(int n, int k, const std::vector<double>& tau,
                    const std::vector<double>& curvatures);

/// K~(y) = (1 - chi(eps^-2 y')) sum c_i y_i^2 + chi(eps^-2 y') K(y).
class KTilde {
 public:
  KTilde(ProblemSpec spec, KModel kmodel, Cutoff cutoff);
  double operator()(const Eigen::VectorXd& y) const;

 private:
  ProblemSpec spec_;
  KModel kmodel_;
  Cutoff cutoff_;
};

/// Throws ModelError if K~ is negative on a sample of Omega_eps.
KTilde build_ktilde(const KModel& kmodel, const Cutoff& cutoff, const ProblemSpec& spec);

/// psi(y) = 1/2 sum_{j<k} tau_j y_j^2 + P(y) with P the quartic corrector.
class ApproxSolution {
 public:
  ApproxSolution(ProblemSpec spec, KModel kmodel, Cutoff cutoff);

  const ProblemSpec& spec() const { return spec_; }
  const KModel& kmodel() const { return kmodel_; }
  const Cutoff& cutoff() const { return cutoff_; }
  ApproxSolution with_epsilon(double eps) const;

  Hd P_jet(const Eigen::VectorXd& y) const;
  double P(const Eigen::VectorXd& y) const { return P_jet(y).v; }
  Eigen::VectorXd grad_P(const Eigen::VectorXd& y) const { return P_jet(y).g; }
  Eigen::MatrixXd hess_P(const Eigen::VectorXd& y) const { return P_jet(y).h; }

  double psi(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd hess_psi(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd hess_phi() const;

  double chi(const Eigen::VectorXd& y) const;
  double ktilde(const Eigen::VectorXd& y) const;
  /// R(y) = K(y) - K(y',0) - 1/2 sum_{i>=k} K_ii(y',0) y_i^2.
  double remainder(const Eigen::VectorXd& y) const;

 private:
  ProblemSpec spec_;
  KModel kmodel_;
  Cutoff cutoff_;
};

ApproxSolution build_P(const KModel& kmodel, const Cutoff& cutoff, const ProblemSpec& spec);

/// Tensor sample of Omega_eps (y coordinates) with m points per axis.
std::vector<Eigen::VectorXd> sample_omega(const ProblemSpec& spec, int m);

struct IdentityReport {
  double max_error = 0.0;
  double scale = 0.0;
  double relative = 0.0;
  Eigen::VectorXd worst_point;
  std::size_t samples = 0;
};

/// sigma_{k-1}(tau) sum_{j>=k} P_jj = K~ - chi R.
IdentityReport verify_trace_identity(const ApproxSolution& approx,
                                     const std::vector<Eigen::VectorXd>& samples);

struct DominanceReport {
  double min_margin = 0.0;
  /// min over samples of P_jj - 4 alpha |y''|^2.
  double min_lower_bound_margin = 0.0;
  Eigen::VectorXd worst_point;
  int worst_j = 0;
  /// Largest shell radius below which every sampled shell satisfies the
  /// dominance inequality.
  double validity_radius = 0.0;
  double search_radius = 0.0;
  bool ok = false;
};

/// P_{j0j0} - 2 alpha |y''|^2 - sum_{i>=k, i != j0} |P_{i j0}| at y, min over j0.
double dominance_margin_at(const ApproxSolution& approx, const Eigen::VectorXd& y, int* worst_j = nullptr);

DominanceReport verify_diag_dominance(const ApproxSolution& approx,
                                      const std::vector<Eigen::VectorXd>& samples);

struct ResidualTable {
  std::vector<double> eps;
  std::vector<double> residual;
  double slope = 0.0;
};

/// sup over grid of |S_k(D^2 psi(eps^2 x)) - K~(eps^2 x)| for each eps.
ResidualTable residual_psi(const ApproxSolution& approx, const GridSpec& grid,
                           const std::vector<double>& eps_list);

/// Least-squares slope of log(v) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& v);

}  // namespace khess
