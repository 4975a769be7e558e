#pragma once

#include <Eigen/Dense>
#include <array>

#include "khess/jet.hpp"

namespace khess {

/// Radial cutoff chi(x') in [0,1]: 1 for |x'| <= inner, 0 for |x'| >= outer,
/// smooth transition built from exp(-1/s).
class Cutoff {
 public:
  Cutoff() = default;
  Cutoff(double inner, double outer);

  double inner() const { return inner_; }
  double outer() const { return outer_; }

  /// Radial profile and its derivatives of order 0..4 at r >= 0.
  std::array<double, 5> radial(double r) const;

  /// chi at x' (first xp.size() coordinates are used).
  double value(const Eigen::VectorXd& xp) const;

  /// chi(eps^-2 y') as a second-order jet in the n variables y; y' = y.head(kp).
  Hd jet(const Eigen::VectorXd& y, int kp, double eps) const;

 private:
  double inner_ = M_PI / 2.0;
  double outer_ = M_PI;
};

}  // namespace khess
