#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace khess {

/// Second-order forward-mode jet: value, gradient and Hessian with respect
/// to n independent variables.
struct Hd {
  double v = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;

  static Hd constant(int n, double value) {
    return {value, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  }
  static Hd variable(int n, int i, double value) {
    Hd r = constant(n, value);
    r.g(i) = 1.0;
    return r;
  }

  /// f(a) given f, f', f'' evaluated at a.v.
  Hd compose(double f0, double f1, double f2) const {
    return {f0, f1 * g, f1 * h + f2 * g * g.transpose()};
  }
};

inline Hd operator+(const Hd& a, const Hd& b) { return {a.v + b.v, a.g + b.g, a.h + b.h}; }
inline Hd operator-(const Hd& a, const Hd& b) { return {a.v - b.v, a.g - b.g, a.h - b.h}; }
inline Hd operator*(double s, const Hd& a) { return {s * a.v, s * a.g, s * a.h}; }
inline Hd operator*(const Hd& a, double s) { return s * a; }
inline Hd operator*(const Hd& a, const Hd& b) {
  Eigen::MatrixXd cross = a.g * b.g.transpose();
  return {a.v * b.v, a.v * b.g + b.v * a.g, a.v * b.h + b.v * a.h + cross + cross.transpose()};
}
inline Hd& operator+=(Hd& a, const Hd& b) {
  a.v += b.v;
  a.g += b.g;
  a.h += b.h;
  return a;
}

/// Truncated univariate Taylor series, c[m] = f^(m)(x0) / m!.
template <int N>
struct Taylor {
  std::array<double, N + 1> c{};

  static Taylor constant(double v) {
    Taylor t;
    t.c[0] = v;
    return t;
  }
  static Taylor variable(double x0) {
    Taylor t;
    t.c[0] = x0;
    if constexpr (N >= 1) t.c[1] = 1.0;
    return t;
  }
  /// m-th derivative.
  double derivative(int m) const {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return c[static_cast<std::size_t>(m)] * f;
  }
};

template <int N>
Taylor<N> operator+(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> r;
  for (int i = 0; i <= N; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}

template <int N>
Taylor<N> operator-(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> r;
  for (int i = 0; i <= N; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}

template <int N>
Taylor<N> operator*(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> r;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; i + j <= N; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

template <int N>
Taylor<N> operator/(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> r;
  for (int i = 0; i <= N; ++i) {
    double s = a.c[i];
    for (int j = 1; j <= i; ++j) s -= b.c[j] * r.c[i - j];
    r.c[i] = s / b.c[0];
  }
  return r;
}

template <int N>
Taylor<N> exp(const Taylor<N>& a) {
  Taylor<N> r;
  r.c[0] = std::exp(a.c[0]);
  for (int i = 1; i <= N; ++i) {
    double s = 0.0;
    for (int j = 1; j <= i; ++j) s += j * a.c[j] * r.c[i - j];
    r.c[i] = s / i;
  }
  return r;
}

}  // namespace khess
