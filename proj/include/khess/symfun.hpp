#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <vector>

namespace khess {

/// Ordered tuple of real eigenvalues, length >= 2.
class EigenTuple {
 public:
  EigenTuple() = default;
  explicit EigenTuple(std::vector<double> values);
  EigenTuple(std::initializer_list<double> values);
  explicit EigenTuple(const Eigen::VectorXd& values);

  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }

  /// Copy with the zero-based entry i removed; no length check.
  EigenTuple without(int i) const;

 private:
  std::vector<double> values_;
};

/// Real symmetric matrix; the upper triangle of the input is authoritative.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int n);
  static SymMatrix diagonal(const Eigen::VectorXd& d);

  int size() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Elementary symmetric polynomial sigma_j of lam.
double sigma(int j, const EigenTuple& lam);

/// sigma_j of lam with entry i removed. i is 1-based.
double sigma_partial(int j, const EigenTuple& lam, int i);

/// All sigma_0..sigma_n in one pass.
std::vector<double> sigma_all(const EigenTuple& lam);

/// Sum of k x k principal minors, each by LU with partial pivoting.
double s_k_minors(const SymMatrix& m, int k);

/// sigma_k of the eigenvalues of m.
double s_k_eigen(const SymMatrix& m, int k);

/// Eigenvalues sorted descending.
Eigen::VectorXd eigenvalues_desc(const SymMatrix& m);

/// dS_k/dr_ij with the contraction convention
///   sum_ij G_ij E_ij = d/dt S_k(M + tE)|_{t=0}   for symmetric E.
/// An off-diagonal symmetric perturbation e_ij + e_ji therefore changes S_k
/// at rate 2 G_ij.
SymMatrix s_k_grad(const SymMatrix& m, int k);

bool in_garding_cone(const EigenTuple& lam, int k, bool strict);

/// ((k-1)(N-k+1)) / (k(N-k+2)) sigma_{k-1}^2 - sigma_k sigma_{k-2} for a
/// tuple of length N = n-1; nonnegative for every real tuple.
double newton_gap(const EigenTuple& lam_minus_one, int k);

/// Determinant by LU with partial pivoting.
double det_lu(const Eigen::MatrixXd& a);

}  // namespace khess
