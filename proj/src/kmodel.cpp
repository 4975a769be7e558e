#include "khess/kmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "khess/errors.hpp"

namespace khess {

Polynomial::Polynomial(int dim, std::vector<Monomial> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim_ < 1) throw ConfigError("polynomial dimension must be >= 1");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.exps.size()) != dim_)
      throw ConfigError("polynomial term has " + std::to_string(t.exps.size()) +
                        " exponents, expected " + std::to_string(dim_));
    for (int e : t.exps)
      if (e < 0) throw ConfigError("polynomial exponent must be nonnegative");
    if (!std::isfinite(t.coef)) throw ConfigError("polynomial coefficient is not finite");
  }
}

Polynomial Polynomial::parse(std::istream& in) {
  std::vector<Monomial> terms;
  int dim = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Monomial m;
    if (!(ls >> m.coef)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError("polynomial line " + std::to_string(lineno) + ": bad coefficient");
      continue;
    }
    int e = 0;
    while (ls >> e) m.exps.push_back(e);
    if (!ls.eof()) throw ConfigError("polynomial line " + std::to_string(lineno) + ": bad exponent");
    if (dim < 0) dim = static_cast<int>(m.exps.size());
    if (static_cast<int>(m.exps.size()) != dim)
      throw ConfigError("polynomial line " + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " exponents");
    terms.push_back(std::move(m));
  }
  if (dim < 1) throw ConfigError("polynomial file has no terms");
  return Polynomial(dim, std::move(terms));
}

Polynomial Polynomial::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open polynomial file " + path);
  return parse(in);
}

std::string Polynomial::to_text() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& t : terms_) {
    out << t.coef;
    for (int e : t.exps) out << ' ' << e;
    out << '\n';
  }
  return out.str();
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int e : t.exps) s += e;
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::eval(const Eigen::VectorXd& y) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double p = t.coef;
    for (int i = 0; i < dim_; ++i)
      for (int e = 0; e < t.exps[static_cast<std::size_t>(i)]; ++e) p *= y(i);
    sum += p;
  }
  return sum;
}

double Polynomial::partial(std::span<const int> alpha, const Eigen::VectorXd& y) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double p = t.coef;
    for (int i = 0; i < dim_ && p != 0.0; ++i) {
      const int e = t.exps[static_cast<std::size_t>(i)];
      const int a = alpha[static_cast<std::size_t>(i)];
      if (a > e) {
        p = 0.0;
        break;
      }
      for (int f = 0; f < a; ++f) p *= e - f;
      for (int r = 0; r < e - a; ++r) p *= y(i);
    }
    sum += p;
  }
  return sum;
}

Polynomial Polynomial::derivative(std::span<const int> alpha) const {
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    Monomial m{t.coef, t.exps};
    for (int i = 0; i < dim_ && m.coef != 0.0; ++i) {
      const int a = alpha[static_cast<std::size_t>(i)];
      int& e = m.exps[static_cast<std::size_t>(i)];
      if (a > e) {
        m.coef = 0.0;
        break;
      }
      for (int f = 0; f < a; ++f) m.coef *= e - f;
      e -= a;
    }
    if (m.coef != 0.0) out.push_back(std::move(m));
  }
  return Polynomial(dim_, std::move(out));
}

KModel KModel::from_polynomial(Polynomial p) {
  KModel k;
  k.dim_ = p.dim();
  k.poly_ = std::move(p);
  return k;
}

KModel KModel::from_function(int dim, ValueFn f, double h) {
  if (dim < 2) throw ConfigError("KModel dimension must be >= 2");
  KModel k;
  k.dim_ = dim;
  k.fn_ = std::make_shared<const ValueFn>(std::move(f));
  k.h_ = h;
  return k;
}

double KModel::value(const Eigen::VectorXd& y) const { return fn_ ? (*fn_)(y) : poly_.eval(y); }

namespace {

double fd_partial(const KModel::ValueFn& f, std::vector<int> alpha, Eigen::VectorXd y, double h) {
  int axis = -1;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] > 0) {
      axis = static_cast<int>(i);
      break;
    }
  if (axis < 0) return f(y);
  --alpha[static_cast<std::size_t>(axis)];
  const double y0 = y(axis);
  y(axis) = y0 + h;
  const double fp = fd_partial(f, alpha, y, h);
  y(axis) = y0 - h;
  const double fm = fd_partial(f, alpha, y, h);
  return (fp - fm) / (2.0 * h);
}

}  // namespace

double KModel::partial(std::span<const int> alpha, const Eigen::VectorXd& y) const {
  if (!fn_) return poly_.partial(alpha, y);
  int order = 0;
  for (int a : alpha) order += a;
  // Larger steps for higher orders keep rounding below truncation error.
  const double h = order <= 2 ? h_ : h_ * std::pow(10.0, 0.75 * (order - 2));
  return fd_partial(*fn_, std::vector<int>(alpha.begin(), alpha.end()), y, h);
}

Eigen::VectorXd KModel::gradient(const Eigen::VectorXd& y) const {
  Eigen::VectorXd g(dim_);
  std::vector<int> a(static_cast<std::size_t>(dim_), 0);
  for (int i = 0; i < dim_; ++i) {
    a[static_cast<std::size_t>(i)] = 1;
    g(i) = partial(a, y);
    a[static_cast<std::size_t>(i)] = 0;
  }
  return g;
}

Eigen::MatrixXd KModel::hessian(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd h(dim_, dim_);
  std::vector<int> a(static_cast<std::size_t>(dim_), 0);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      ++a[static_cast<std::size_t>(i)];
      ++a[static_cast<std::size_t>(j)];
      h(i, j) = h(j, i) = partial(a, y);
      --a[static_cast<std::size_t>(i)];
      --a[static_cast<std::size_t>(j)];
    }
  return h;
}

std::vector<double> KModel::curvatures(int k, double tol) const {
  if (k < 2 || k > dim_) throw ConfigError("Hessian order k must satisfy 2 <= k <= n");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim_);
  const double f0 = value(zero);
  const Eigen::VectorXd g0 = gradient(zero);
  const Eigen::MatrixXd h0 = hessian(zero);
  const double scale = std::max(1.0, h0.cwiseAbs().maxCoeff());
  if (std::abs(f0) > tol * scale) throw ModelError("K(0) must vanish");
  if (g0.cwiseAbs().maxCoeff() > tol * scale) throw ModelError("grad K(0) must vanish");
  std::vector<double> c;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      if (i == j && i >= k - 1) continue;
      if (std::abs(h0(i, j)) > tol * scale)
        throw ModelError("D^2K(0) must be diag(0,...,0,2c_k,...,2c_n); entry (" +
                         std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is nonzero");
    }
  }
  for (int i = k - 1; i < dim_; ++i) {
    if (!(h0(i, i) > 0.0))
      throw ModelError("D^2K(0) must have positive entry at (" + std::to_string(i + 1) + "," +
                       std::to_string(i + 1) + ")");
    c.push_back(0.5 * h0(i, i));
  }
  return c;
}

void KModel::validate(int k, const Eigen::VectorXd& half_widths) const {
  const int n = dim_;
  constexpr int m = 9;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= m;
  double kmax = 0.0;
  double kmin = 0.0;
  Eigen::VectorXd argmin = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y(n);
  for (long id = 0; id < total; ++id) {
    long r = id;
    for (int i = 0; i < n; ++i) {
      y(i) = half_widths(i) * (-1.0 + 2.0 * static_cast<double>(r % m) / (m - 1));
      r /= m;
    }
    const double v = value(y);
    kmax = std::max(kmax, std::abs(v));
    if (v < kmin) {
      kmin = v;
      argmin = y;
    }
  }
  if (kmin < -1e-14 * std::max(kmax, 1e-300)) {
    std::ostringstream msg;
    msg << "K is negative (" << kmin << ") at sampled point y = (" << argmin.transpose() << ")";
    throw ModelError(msg.str());
  }
  // K(y',0) must vanish faster than |y'|^4: the ratio max|K(y',0)|/|y'|^4 on
  // shrinking shells has to decay.
  const int kp = k - 1;
  const double r0 = half_widths.head(kp).norm();
  std::vector<double> q;
  for (int level = 0; level < 5; ++level) {
    const double r = r0 * std::ldexp(1.0, -level);
    double best = 0.0;
    const int dirs = kp == 1 ? 2 : 32;
    for (int d = 0; d < dirs; ++d) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
      if (kp == 1) {
        z(0) = d == 0 ? r : -r;
      } else {
        // Deterministic spread of directions in the first two coordinates,
        // remaining y' coordinates tilted by a fixed pattern.
        Eigen::VectorXd dir(kp);
        for (int i = 0; i < kp; ++i) dir(i) = std::cos(2.0 * M_PI * d / dirs + 1.3 * i * i);
        if (dir.norm() == 0.0) continue;
        z.head(kp) = r * dir.normalized();
      }
      best = std::max(best, std::abs(value(z)) / std::pow(r, 4));
    }
    q.push_back(best);
  }
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    if (q[i + 1] > 0.75 * q[i] && q[i + 1] > 1e-12 * std::max(1.0, kmax)) {
      std::ostringstream msg;
      msg << "K(y',0) does not vanish to order greater than four: max|K(y',0)|/|y'|^4 = " << q[i]
          << " then " << q[i + 1] << " on halved shells";
      throw ModelError(msg.str());
    }
  }
}

}  // namespace khess
