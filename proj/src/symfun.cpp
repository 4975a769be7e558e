#include "khess/symfun.hpp"

#include <cmath>
#include <string>

#include "khess/errors.hpp"

namespace khess {

namespace {

void check_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError("EigenTuple: non-finite entry");
  }
}

// Calls fn(idx) for every increasing k-subset of {0..n-1}.
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

Eigen::MatrixXd principal(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      sub(a, b) = m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return sub;
}

void check_order(int k, int n, const char* what) {
  if (k < 1 || k > n)
    throw DomainError(std::string(what) + ": order " + std::to_string(k) +
                      " outside 1.." + std::to_string(n));
}

}  // namespace

EigenTuple::EigenTuple(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw DomainError("EigenTuple: length must be >= 2");
  check_finite(values_);
}

EigenTuple::EigenTuple(std::initializer_list<double> values)
    : EigenTuple(std::vector<double>(values)) {}

EigenTuple::EigenTuple(const Eigen::VectorXd& values)
    : EigenTuple(std::vector<double>(values.data(), values.data() + values.size())) {}

EigenTuple EigenTuple::without(int i) const {
  EigenTuple out;
  out.values_ = values_;
  out.values_.erase(out.values_.begin() + i);
  return out;
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("SymMatrix: matrix must be square");
  if (m.rows() < 2) throw DomainError("SymMatrix: dimension must be >= 2");
  m_ = m.triangularView<Eigen::Upper>();
  m_.triangularView<Eigen::StrictlyLower>() = m_.transpose().triangularView<Eigen::StrictlyLower>();
  if (!m_.allFinite()) throw DomainError("SymMatrix: non-finite entry");
}

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

std::vector<double> sigma_all(const EigenTuple& lam) {
  const int n = lam.size();
  std::vector<double> e(static_cast<std::size_t>(n + 1), 0.0);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j >= 1; --j)
      e[static_cast<std::size_t>(j)] += lam[i] * e[static_cast<std::size_t>(j - 1)];
  return e;
}

double sigma(int j, const EigenTuple& lam) {
  if (j < 0 || j > lam.size())
    throw DomainError("sigma: order " + std::to_string(j) + " outside 0.." +
                      std::to_string(lam.size()));
  return sigma_all(lam)[static_cast<std::size_t>(j)];
}

double sigma_partial(int j, const EigenTuple& lam, int i) {
  const int n = lam.size();
  if (i < 1 || i > n)
    throw DomainError("sigma_partial: index " + std::to_string(i) + " outside 1.." +
                      std::to_string(n));
  if (j < 0 || j > n - 1)
    throw DomainError("sigma_partial: order " + std::to_string(j) + " outside 0.." +
                      std::to_string(n - 1));
  // Deleting an entry may leave a single value, which EigenTuple rejects.
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  e[0] = 1.0;
  int count = 0;
  for (int p = 0; p < n; ++p) {
    if (p == i - 1) continue;
    ++count;
    for (int q = count; q >= 1; --q)
      e[static_cast<std::size_t>(q)] += lam[p] * e[static_cast<std::size_t>(q - 1)];
  }
  return e[static_cast<std::size_t>(j)];
}

double det_lu(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 1.0;
  if (a.rows() == 1) return a(0, 0);
  if (a.rows() == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return a.partialPivLu().determinant();
}

double s_k_minors(const SymMatrix& m, int k) {
  const int n = m.size();
  check_order(k, n, "s_k_minors");
  double sum = 0.0;
  for_each_subset(n, k, [&](const std::vector<int>& idx) { sum += det_lu(principal(m.matrix(), idx)); });
  return sum;
}

Eigen::VectorXd eigenvalues_desc(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return es.eigenvalues().reverse();
}

double s_k_eigen(const SymMatrix& m, int k) {
  check_order(k, m.size(), "s_k_eigen");
  return sigma(k, EigenTuple(eigenvalues_desc(m)));
}

SymMatrix s_k_grad(const SymMatrix& m, int k) {
  const int n = m.size();
  check_order(k, n, "s_k_grad");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for_each_subset(n, k, [&](const std::vector<int>& idx) {
    const Eigen::MatrixXd sub = principal(m.matrix(), idx);
    for (int a = 0; a < k; ++a) {
      for (int b = a; b < k; ++b) {
        // cofactor(a, b) of sub, (k-1) x (k-1) determinant
        Eigen::MatrixXd c(k - 1, k - 1);
        for (int r = 0, rr = 0; r < k; ++r) {
          if (r == a) continue;
          for (int s = 0, ss = 0; s < k; ++s) {
            if (s == b) continue;
            c(rr, ss) = sub(r, s);
            ++ss;
          }
          ++rr;
        }
        const double cof = (((a + b) % 2) ? -1.0 : 1.0) * det_lu(c);
        g(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) += cof;
      }
    }
  });
  return SymMatrix(g);
}

bool in_garding_cone(const EigenTuple& lam, int k, bool strict) {
  check_order(k, lam.size(), "in_garding_cone");
  const auto e = sigma_all(lam);
  for (int j = 1; j <= k; ++j) {
    const double v = e[static_cast<std::size_t>(j)];
    if (strict ? !(v > 0.0) : !(v >= 0.0)) return false;
  }
  return true;
}

double newton_gap(const EigenTuple& lam_minus_one, int k) {
  const int len = lam_minus_one.size();
  const int n = len + 1;
  if (k < 2 || k > len)
    throw DomainError("newton_gap: order " + std::to_string(k) + " outside 2.." +
                      std::to_string(len));
  const auto e = sigma_all(lam_minus_one);
  const double c = static_cast<double>((k - 1) * (n - k)) / static_cast<double>(k * (n - k + 1));
  const double s1 = e[static_cast<std::size_t>(k - 1)];
  return c * s1 * s1 - e[static_cast<std::size_t>(k)] * e[static_cast<std::size_t>(k - 2)];
}

}  // namespace khess
