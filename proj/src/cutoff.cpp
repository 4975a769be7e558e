#include "khess/cutoff.hpp"

#include <cmath>

#include "khess/errors.hpp"

namespace khess {

namespace {

// exp(-1/s) as a Taylor jet, zero for s <= 0.
Taylor<4> flat(const Taylor<4>& s) {
  if (s.c[0] <= 0.0) return Taylor<4>{};
  return exp(Taylor<4>::constant(0.0) - Taylor<4>::constant(1.0) / s);
}

}  // namespace

Cutoff::Cutoff(double inner, double outer) : inner_(inner), outer_(outer) {
  if (!(inner > 0.0 && outer > inner)) throw ConfigError("cutoff requires 0 < inner < outer");
}

std::array<double, 5> Cutoff::radial(double r) const {
  std::array<double, 5> d{};
  if (r <= inner_) {
    d[0] = 1.0;
    return d;
  }
  if (r >= outer_) return d;
  const auto x = Taylor<4>::variable(r);
  const auto a = flat(Taylor<4>::constant(outer_) - x);
  const auto b = flat(x - Taylor<4>::constant(inner_));
  const auto chi = a / (a + b);
  for (int m = 0; m <= 4; ++m) d[static_cast<std::size_t>(m)] = chi.derivative(m);
  return d;
}

double Cutoff::value(const Eigen::VectorXd& xp) const { return radial(xp.norm())[0]; }

Hd Cutoff::jet(const Eigen::VectorXd& y, int kp, double eps) const {
  const int n = static_cast<int>(y.size());
  const double s = 1.0 / (eps * eps);
  const Eigen::VectorXd x = s * y.head(kp);
  const double r = x.norm();
  if (r <= inner_) return Hd::constant(n, 1.0);
  if (r >= outer_) return Hd::constant(n, 0.0);
  const auto d = radial(r);
  Hd out = Hd::constant(n, d[0]);
  const Eigen::VectorXd e = x / r;
  out.g.head(kp) = s * d[1] * e;
  out.h.topLeftCorner(kp, kp) =
      s * s * (d[2] * e * e.transpose() +
               (d[1] / r) * (Eigen::MatrixXd::Identity(kp, kp) - e * e.transpose()));
  return out;
}

}  // namespace khess
