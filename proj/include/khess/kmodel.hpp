#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace khess {

struct Monomial {
  double coef = 0.0;
  std::vector<int> exps;
};

/// Sparse multivariate polynomial with exact partial derivatives.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int dim, std::vector<Monomial> terms);

  /// Text form: one term per line, "coef e_1 ... e_n"; '#' starts a comment.
  static Polynomial parse(std::istream& in);
  static Polynomial load(const std::string& path);
  std::string to_text() const;

  int dim() const { return dim_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  int degree() const;

  double eval(const Eigen::VectorXd& y) const;
  /// Mixed partial derivative with multi-index alpha (counts per axis).
  double partial(std::span<const int> alpha, const Eigen::VectorXd& y) const;
  Polynomial derivative(std::span<const int> alpha) const;

 private:
  int dim_ = 0;
  std::vector<Monomial> terms_;
};

/// The degenerate right-hand side K(y). Either polynomial-backed with exact
/// derivatives, or a value callback differentiated by central differences.
class KModel {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;

  static KModel from_polynomial(Polynomial p);
  /// h is the base central-difference step for first and second derivatives.
  static KModel from_function(int dim, ValueFn f, double h = 1e-5);

  int dim() const { return dim_; }
  bool exact_derivatives() const { return fn_ == nullptr; }
  const Polynomial& polynomial() const { return poly_; }

  double value(const Eigen::VectorXd& y) const;
  double partial(std::span<const int> alpha, const Eigen::VectorXd& y) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const;

  /// c_k..c_n = half the diagonal of D^2K(0) in the degenerate block. Throws
  /// ModelError if K(0), grad K(0) or the off-block Hessian are not zero.
  std::vector<double> curvatures(int k, double tol = 1e-9) const;

  /// Sampled structural checks on the box |y_i| <= half_widths_i:
  /// K >= 0 and K(y',0) = o(|y'|^4). Throws ModelError.
  void validate(int k, const Eigen::VectorXd& half_widths) const;

 private:
  int dim_ = 0;
  Polynomial poly_;
  std::shared_ptr<const ValueFn> fn_;
  double h_ = 1e-5;
};

}  // namespace khess
