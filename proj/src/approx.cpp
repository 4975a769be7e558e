#include "khess/approx.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "khess/errors.hpp"
#include "khess/symfun.hpp"

namespace khess {

namespace {

double product(const std::vector<double>& v) {
  double p = 1.0;
  for (double x : v) p *= x;
  return p;
}

std::vector<int> multi_index(int n, std::initializer_list<int> axes) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  for (int i : axes) ++a[static_cast<std::size_t>(i)];
  return a;
}

// f(y',0) as a jet in y; extra holds the fixed part of the multi-index.
Hd slice_jet(const KModel& km, const Eigen::VectorXd& yp0, int kp, std::initializer_list<int> extra) {
  const int n = km.dim();
  std::vector<int> base = multi_index(n, extra);
  Hd out = Hd::constant(n, km.partial(base, yp0));
  for (int p = 0; p < kp; ++p) {
    ++base[static_cast<std::size_t>(p)];
    out.g(p) = km.partial(base, yp0);
    for (int q = p; q < kp; ++q) {
      ++base[static_cast<std::size_t>(q)];
      out.h(p, q) = out.h(q, p) = km.partial(base, yp0);
      --base[static_cast<std::size_t>(q)];
    }
    --base[static_cast<std::size_t>(p)];
  }
  return out;
}

}  // namespace

double alpha_upper_bound(int n, int k, const std::vector<double>& tau,
                         const std::vector<double>& curvatures) {
  const double sig = product(tau);
  double cmin = *std::min_element(curvatures.begin(), curvatures.end());
  const double d = n - k;
  return (cmin / (2.0 * sig)) / (16.0 * d * d + 4.0 * (d + 1.0));
}

double choose_alpha(int n, int k, const std::vector<double>& tau,
                    const std::vector<double>& curvatures) {
  if (tau.empty() || curvatures.empty()) throw ConfigError("choose_alpha: tau and c must be set");
  const double b = alpha_upper_bound(n, k, tau, curvatures);
  if (!(b > 0.0) || !std::isfinite(b))
    throw ConfigError("choose_alpha: admissible alpha bound is not positive");
  return 0.5 * b;
}

ProblemSpec ProblemSpec::create(int n, int k, std::vector<double> tau, std::vector<double> curvatures,
                                double epsilon, double delta0, std::optional<double> alpha) {
  if (n < 2 || k < 2 || k > n) throw ConfigError("require 2 <= k <= n");
  if (static_cast<int>(tau.size()) != k - 1)
    throw ConfigError("tau must have k-1 = " + std::to_string(k - 1) + " entries");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0)) throw ConfigError("tau entries must be positive");
    if (i > 0 && !(tau[i] < tau[i - 1])) throw ConfigError("tau must be strictly decreasing");
  }
  if (static_cast<int>(curvatures.size()) != n - k + 1)
    throw ConfigError("need n-k+1 = " + std::to_string(n - k + 1) + " curvatures");
  for (double c : curvatures)
    if (!(c > 0.0)) throw ConfigError("curvatures c_j must be positive");
  if (!(delta0 > 0.0)) throw ConfigError("delta0 must be positive");
  if (!(epsilon > 0.0) || epsilon > delta0) throw ConfigError("require 0 < epsilon <= delta0");
  ProblemSpec s;
  s.n_ = n;
  s.k_ = k;
  s.tau_ = std::move(tau);
  s.c_ = std::move(curvatures);
  s.epsilon_ = epsilon;
  s.delta0_ = delta0;
  s.sigma_tau_ = product(s.tau_);
  const double bound = s.alpha_bound();
  if (alpha) {
    if (!(*alpha > 0.0) || !(*alpha < bound)) {
      std::ostringstream msg;
      msg << "alpha = " << *alpha << " violates 0 < alpha < min_j{c_j/(2 sigma_{k-1}(tau))}"
          << "/(16(n-k)^2+4(n-k+1)) = " << bound;
      throw ConfigError(msg.str());
    }
    s.alpha_ = *alpha;
  } else {
    s.alpha_ = choose_alpha(n, k, s.tau_, s.c_);
  }
  return s;
}

double ProblemSpec::alpha_bound() const { return alpha_upper_bound(n_, k_, tau_, c_); }

ProblemSpec ProblemSpec::with_epsilon(double eps) const {
  if (!(eps > 0.0) || eps > delta0_) throw ConfigError("require 0 < epsilon <= delta0");
  ProblemSpec s = *this;
  s.epsilon_ = eps;
  return s;
}

ProblemSpec ProblemSpec::with_alpha_unchecked(double alpha) const {
  ProblemSpec s = *this;
  s.alpha_ = alpha;
  return s;
}

Eigen::VectorXd ProblemSpec::half_widths() const {
  Eigen::VectorXd h(n_);
  const double e2 = epsilon_ * epsilon_;
  for (int i = 0; i < n_; ++i) h(i) = e2 * (i < k_ - 1 ? M_PI : delta0_);
  return h;
}

KTilde::KTilde(ProblemSpec spec, KModel kmodel, Cutoff cutoff)
    : spec_(std::move(spec)), kmodel_(std::move(kmodel)), cutoff_(cutoff) {}

double KTilde::operator()(const Eigen::VectorXd& y) const {
  const int kp = spec_.k() - 1;
  const double e2 = spec_.epsilon() * spec_.epsilon();
  const double chi = cutoff_.value(y.head(kp) / e2);
  double quad = 0.0;
  for (int j = kp; j < spec_.n(); ++j) quad += spec_.c(j + 1) * y(j) * y(j);
  if (chi == 0.0) return quad;
  if (chi == 1.0) return kmodel_.value(y);
  return (1.0 - chi) * quad + chi * kmodel_.value(y);
}

KTilde build_ktilde(const KModel& kmodel, const Cutoff& cutoff, const ProblemSpec& spec) {
  KTilde kt(spec, kmodel, cutoff);
  double vmax = 0.0;
  double vmin = 0.0;
  Eigen::VectorXd at;
  for (const auto& y : sample_omega(spec, 9)) {
    const double v = kt(y);
    vmax = std::max(vmax, std::abs(v));
    if (v < vmin) {
      vmin = v;
      at = y;
    }
  }
  if (vmin < -1e-14 * std::max(vmax, 1e-300)) {
    std::ostringstream msg;
    msg << "K~ is negative (" << vmin << ") at y = (" << at.transpose() << "); K >= 0 fails near 0";
    throw ModelError(msg.str());
  }
  return kt;
}

ApproxSolution::ApproxSolution(ProblemSpec spec, KModel kmodel, Cutoff cutoff)
    : spec_(std::move(spec)), kmodel_(std::move(kmodel)), cutoff_(cutoff) {
  if (kmodel_.dim() != spec_.n()) throw ConfigError("KModel dimension does not match n");
}

ApproxSolution ApproxSolution::with_epsilon(double eps) const {
  return ApproxSolution(spec_.with_epsilon(eps), kmodel_, cutoff_);
}

Hd ApproxSolution::P_jet(const Eigen::VectorXd& y) const {
  const int n = spec_.n();
  const int k = spec_.k();
  const int kp = k - 1;
  const double sig = spec_.sigma_tau();
  const double alpha = spec_.alpha();
  const double nd = n - k + 1;

  Eigen::VectorXd yp0 = y;
  yp0.tail(n - kp).setZero();

  std::vector<Hd> yi2;
  Hd Y2 = Hd::constant(n, 0.0);
  for (int i = kp; i < n; ++i) {
    const Hd yi = Hd::variable(n, i, y(i));
    yi2.push_back(yi * yi);
    Y2 += yi2.back();
  }

  Hd out = Hd::constant(n, 0.0);
  for (int i = kp; i < n; ++i) {
    const Hd& s = yi2[static_cast<std::size_t>(i - kp)];
    out += ((spec_.c(i + 1) / sig - 4.0 * alpha * (n - k)) / 12.0) * (s * s);
  }
  for (int j = kp; j < n; ++j)
    for (int i = kp; i < n; ++i)
      if (i != j) out += alpha * (yi2[static_cast<std::size_t>(i - kp)] * yi2[static_cast<std::size_t>(j - kp)]);

  const Hd chi = cutoff_.jet(y, kp, spec_.epsilon());
  if (chi.v == 0.0 && chi.g.isZero() && chi.h.isZero()) return out;

  Hd inner = (1.0 / (2.0 * nd * sig)) * (slice_jet(kmodel_, yp0, kp, {}) * Y2);
  for (int i = kp; i < n; ++i) {
    Hd b = slice_jet(kmodel_, yp0, kp, {i, i});
    b.v -= 2.0 * spec_.c(i + 1);
    const Hd& s = yi2[static_cast<std::size_t>(i - kp)];
    inner += (1.0 / (24.0 * sig)) * (b * (s * s));
  }
  out += chi * inner;
  return out;
}

Eigen::MatrixXd ApproxSolution::hess_phi() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(spec_.n(), spec_.n());
  for (int i = 0; i < spec_.k() - 1; ++i) h(i, i) = spec_.tau()[static_cast<std::size_t>(i)];
  return h;
}

double ApproxSolution::psi(const Eigen::VectorXd& y) const {
  double phi = 0.0;
  for (int i = 0; i < spec_.k() - 1; ++i) phi += 0.5 * spec_.tau()[static_cast<std::size_t>(i)] * y(i) * y(i);
  return phi + P(y);
}

Eigen::MatrixXd ApproxSolution::hess_psi(const Eigen::VectorXd& y) const { return hess_phi() + hess_P(y); }

double ApproxSolution::chi(const Eigen::VectorXd& y) const {
  const double e2 = spec_.epsilon() * spec_.epsilon();
  return cutoff_.value(y.head(spec_.k() - 1) / e2);
}

double ApproxSolution::ktilde(const Eigen::VectorXd& y) const {
  return KTilde(spec_, kmodel_, cutoff_)(y);
}

double ApproxSolution::remainder(const Eigen::VectorXd& y) const {
  const int n = spec_.n();
  const int kp = spec_.k() - 1;
  Eigen::VectorXd yp0 = y;
  yp0.tail(n - kp).setZero();
  double r = kmodel_.value(y) - kmodel_.value(yp0);
  for (int i = kp; i < n; ++i) r -= 0.5 * kmodel_.partial(multi_index(n, {i, i}), yp0) * y(i) * y(i);
  return r;
}

ApproxSolution build_P(const KModel& kmodel, const Cutoff& cutoff, const ProblemSpec& spec) {
  return ApproxSolution(spec, kmodel, cutoff);
}

std::vector<Eigen::VectorXd> sample_omega(const ProblemSpec& spec, int m) {
  const int n = spec.n();
  const Eigen::VectorXd hw = spec.half_widths();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= m;
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(total));
  for (long id = 0; id < total; ++id) {
    long r = id;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = hw(i) * (-1.0 + 2.0 * static_cast<double>(r % m) / (m - 1));
      r /= m;
    }
    out.push_back(y);
  }
  return out;
}

IdentityReport verify_trace_identity(const ApproxSolution& approx,
                                     const std::vector<Eigen::VectorXd>& samples) {
  const auto& spec = approx.spec();
  IdentityReport rep;
  rep.samples = samples.size();
  for (const auto& y : samples) {
    const Eigen::MatrixXd h = approx.hess_P(y);
    double lhs = 0.0;
    for (int j = spec.k() - 1; j < spec.n(); ++j) lhs += h(j, j);
    lhs *= spec.sigma_tau();
    const double rhs = approx.ktilde(y) - approx.chi(y) * approx.remainder(y);
    const double err = std::abs(lhs - rhs);
    rep.scale = std::max({rep.scale, std::abs(lhs), std::abs(rhs)});
    if (err > rep.max_error || rep.worst_point.size() == 0) {
      rep.max_error = std::max(rep.max_error, err);
      rep.worst_point = y;
    }
  }
  rep.relative = rep.scale > 0.0 ? rep.max_error / rep.scale : rep.max_error;
  return rep;
}

double dominance_margin_at(const ApproxSolution& approx, const Eigen::VectorXd& y, int* worst_j) {
  const auto& spec = approx.spec();
  const int kp = spec.k() - 1;
  const int n = spec.n();
  const Eigen::MatrixXd h = approx.hess_P(y);
  const double ypp2 = y.tail(n - kp).squaredNorm();
  double best = INFINITY;
  for (int j = kp; j < n; ++j) {
    double m = h(j, j) - 2.0 * spec.alpha() * ypp2;
    for (int i = kp; i < n; ++i)
      if (i != j) m -= std::abs(h(i, j));
    if (m < best) {
      best = m;
      if (worst_j) *worst_j = j + 1;
    }
  }
  return best;
}

namespace {

// Tolerance for exact-zero margins on the slice y'' = 0.
double margin_tol(const ApproxSolution& approx, const Eigen::VectorXd& y) {
  return 1e-12 * approx.hess_P(y).cwiseAbs().maxCoeff() + 1e-300;
}

double shell_margin(const ApproxSolution& approx, double r, const std::vector<Eigen::VectorXd>& dirs) {
  double best = INFINITY;
  for (const auto& d : dirs) {
    const Eigen::VectorXd y = r * d;
    best = std::min(best, dominance_margin_at(approx, y) + margin_tol(approx, y));
  }
  return best;
}

}  // namespace

DominanceReport verify_diag_dominance(const ApproxSolution& approx,
                                      const std::vector<Eigen::VectorXd>& samples) {
  const auto& spec = approx.spec();
  const int n = spec.n();
  const int kp = spec.k() - 1;
  DominanceReport rep;
  rep.min_margin = INFINITY;
  rep.min_lower_bound_margin = INFINITY;
  bool ok = true;
  for (const auto& y : samples) {
    int j = 0;
    const double m = dominance_margin_at(approx, y, &j);
    if (m + margin_tol(approx, y) < 0.0) ok = false;
    if (m < rep.min_margin) {
      rep.min_margin = m;
      rep.worst_point = y;
      rep.worst_j = j;
    }
    const Eigen::MatrixXd h = approx.hess_P(y);
    const double ypp2 = y.tail(n - kp).squaredNorm();
    for (int i = kp; i < n; ++i)
      rep.min_lower_bound_margin = std::min(rep.min_lower_bound_margin, h(i, i) - 4.0 * spec.alpha() * ypp2);
  }
  rep.ok = ok;

  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < n; ++i) {
    dirs.push_back(Eigen::VectorXd::Unit(n, i));
    dirs.push_back(-Eigen::VectorXd::Unit(n, i));
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g;
  for (int t = 0; t < 64; ++t) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = g(rng);
    dirs.push_back(d.normalized());
  }
  rep.search_radius = spec.half_widths().norm();
  if (shell_margin(approx, rep.search_radius, dirs) >= 0.0) {
    rep.validity_radius = rep.search_radius;
  } else {
    double lo = 0.0;
    double hi = rep.search_radius;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (shell_margin(approx, mid, dirs) >= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    rep.validity_radius = lo;
  }
  return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& v) {
  const std::size_t m = x.size();
  if (m < 2 || v.size() != m) throw DomainError("loglog_slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(v[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dm = static_cast<double>(m);
  return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

ResidualTable residual_psi(const ApproxSolution& approx, const GridSpec& grid,
                           const std::vector<double>& eps_list) {
  ResidualTable tab;
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw DomainError("residual_psi: eps list must be descending");
  const int k = approx.spec().k();
  for (double eps : eps_list) {
    const ApproxSolution a = approx.with_epsilon(eps);
    const KTilde kt(a.spec(), a.kmodel(), a.cutoff());
    const double e2 = eps * eps;
    double worst = 0.0;
    for (std::size_t id = 0; id < grid.size(); ++id) {
      const Eigen::VectorXd y = e2 * grid.point(id);
      const double sk = s_k_minors(SymMatrix(a.hess_psi(y)), k);
      worst = std::max(worst, std::abs(sk - kt(y)));
    }
    tab.eps.push_back(eps);
    tab.residual.push_back(worst);
  }
  if (tab.eps.size() >= 2) tab.slope = loglog_slope(tab.eps, tab.residual);
  return tab;
}

}  // namespace khess
