#include "khess/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "khess/errors.hpp"
#include "khess/field.hpp"

namespace khess {

namespace {

constexpr double kQuadratureRel = 1e-8;
constexpr int kMaxQuadratureOrder = 64;

struct Interp1 {
  int idx[4];
  double w[4];
};

// Four-point Lagrange weights around x on one axis.
Interp1 interp_axis(const GridSpec& g, int axis, double x) {
  Interp1 out{};
  const double h = g.spacing(axis);
  const int N = g.intervals(axis);
  double u = 0.0;
  int base = 0;
  if (g.is_periodic(axis)) {
    const double two_pi = 2.0 * std::numbers::pi;
    double xr = std::fmod(x + std::numbers::pi, two_pi);
    if (xr < 0.0) xr += two_pi;
    u = xr / h;
    base = static_cast<int>(std::floor(u)) - 1;
  } else {
    const double d0 = g.delta0();
    if (std::abs(x) > d0 * (1.0 + 1e-12)) throw DomainError("SolutionHessian: point outside the box");
    u = (std::clamp(x, -d0, d0) + d0) / h;
    base = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, N - 3);
  }
  for (int a = 0; a < 4; ++a) {
    double wa = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) wa *= (u - (base + b)) / static_cast<double>(a - b);
    out.w[a] = wa;
    int j = base + a;
    if (g.is_periodic(axis)) j = ((j % N) + N) % N;
    out.idx[a] = j;
  }
  return out;
}

double det_shift(const Eigen::MatrixXd& r, double t) {
  return (r - t * Eigen::MatrixXd::Identity(r.rows(), r.cols())).partialPivLu().determinant();
}

// Root of det(r - tI) in [lo, hi] by bisection.
double bisect_det(const Eigen::MatrixXd& r, double lo, double hi) {
  double flo = det_shift(r, lo);
  const double fhi = det_shift(r, hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw NumericError("eig_perturb: no eigenvalue in bracket, eps too large");
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = det_shift(r, mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Eigenvector for lambda with component i fixed to 1: the remaining
// components solve the reduced system, then unit length with T_i > 0.
Eigen::VectorXd elimination_vector(const Eigen::MatrixXd& r, double lambda, int i) {
  const int n = static_cast<int>(r.rows());
  const Eigen::MatrixXd m = r - lambda * Eigen::MatrixXd::Identity(n, n);
  std::vector<int> rest;
  for (int j = 0; j < n; ++j)
    if (j != i) rest.push_back(j);
  Eigen::MatrixXd red(n - 1, n - 1);
  Eigen::VectorXd rhs(n - 1);
  for (int a = 0; a < n - 1; ++a) {
    rhs(a) = -m(rest[static_cast<std::size_t>(a)], i);
    for (int b = 0; b < n - 1; ++b) red(a, b) = m(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
  }
  const Eigen::VectorXd v = red.fullPivLu().solve(rhs);
  Eigen::VectorXd t(n);
  t(i) = 1.0;
  for (int a = 0; a < n - 1; ++a) t(rest[static_cast<std::size_t>(a)]) = v(a);
  return t / t.norm();
}

std::vector<int> gamma_of(int n, std::initializer_list<int> axes) {
  std::vector<int> g(static_cast<std::size_t>(n), 0);
  for (int a : axes) ++g[static_cast<std::size_t>(a)];
  return g;
}

bool on_center_slice(const GridSpec& g, const std::vector<int>& idx) {
  for (int a = g.k() - 1; a < g.n(); ++a)
    if (idx[static_cast<std::size_t>(a)] != g.center(a)) return false;
  return true;
}

}  // namespace

GaussRule gauss_legendre(int q) {
  if (q < 1) throw ConfigError("gauss_legendre: order must be positive");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(q, q);
  for (int i = 1; i < q; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    j(i, i - 1) = j(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussRule rule;
  for (int i = 0; i < q; ++i) {
    rule.nodes.push_back(0.5 * (es.eigenvalues()(i) + 1.0));
    const double v0 = es.eigenvectors()(0, i);
    rule.weights.push_back(v0 * v0);
  }
  return rule;
}

Eigen::VectorXd segment_point(const SegmentTest& test, double s, double mu) {
  const double cy = s * mu + (1.0 - s) * test.t;
  const double cz = s * (1.0 - mu) + (1.0 - s) * (1.0 - test.t);
  return cy * test.y + cz * test.z;
}

namespace {

struct QuadValue {
  double value = 0.0;
  double magnitude = 0.0;
};

QuadValue segment_quad(const HessianFn& hess, const SegmentTest& test, int q) {
  const GaussRule rule = gauss_legendre(q);
  const Eigen::VectorXd xi = test.y - test.z;
  QuadValue out;
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) {
      const Eigen::MatrixXd h = hess(segment_point(test, rule.nodes[a], rule.nodes[b]));
      const double w = rule.weights[a] * rule.weights[b];
      out.value += w * xi.dot(h * xi);
      out.magnitude += w * xi.squaredNorm() * h.norm();
    }
  return out;
}

}  // namespace

SegmentResult segment_convexity(const HessianFn& hess, const SegmentTest& test) {
  if (test.y.size() != test.z.size() || test.y.size() == 0) throw DomainError("segment_convexity: endpoint size");
  if ((test.y - test.z).norm() == 0.0) throw DomainError("segment_convexity: y == z");
  if (!(test.t > 0.0 && test.t < 1.0)) throw DomainError("segment_convexity: t outside (0,1)");
  if (test.order < 1) throw ConfigError("segment_convexity: order must be positive");
  int q = test.order;
  QuadValue lo = segment_quad(hess, test, q);
  while (q + 4 <= kMaxQuadratureOrder) {
    const QuadValue hi = segment_quad(hess, test, q + 4);
    const double diff = std::abs(hi.value - lo.value);
    const double scale = std::max(std::abs(hi.value), 1e-7 * hi.magnitude);
    if (diff <= kQuadratureRel * scale) return {hi.value, q, diff};
    q += 4;
    lo = hi;
  }
  throw QuadratureError("segment_convexity: orders disagree up to " + std::to_string(kMaxQuadratureOrder));
}

double segment_b(const SegmentTest& test, int k) {
  // Polynomial of degree 4 in (s, mu); a 4-point rule is exact.
  const GaussRule rule = gauss_legendre(4);
  const int n = static_cast<int>(test.y.size());
  double b = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 4; ++c)
      b += rule.weights[a] * rule.weights[c] *
           segment_point(test, rule.nodes[a], rule.nodes[c]).tail(n - k + 1).squaredNorm();
  return b;
}

SolutionHessian::SolutionHessian(const ApproxSolution& approx, const GridField& w)
    : approx_(approx), grid_(w.grid()) {
  const int n = grid_.n();
  if (n != approx.spec().n() || grid_.k() != approx.spec().k())
    throw ConfigError("SolutionHessian: grid does not match the instance");
  scale_ = std::pow(approx.spec().epsilon(), 4.5);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) hw_.emplace_back(grid_);
  for (std::size_t id = 0; id < grid_.size(); ++id) {
    const Eigen::MatrixXd h = fd_hessian(w, id);
    std::size_t c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) hw_[c++][id] = h(i, j);
  }
}

Eigen::MatrixXd SolutionHessian::w_hessian(const Eigen::VectorXd& x) const {
  const int n = grid_.n();
  std::vector<Interp1> ax;
  for (int a = 0; a < n; ++a) ax.push_back(interp_axis(grid_, a, x(a)));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> idx(static_cast<std::size_t>(n));
  const int total = 1 << (2 * n);
  for (int t = 0; t < total; ++t) {
    double wt = 1.0;
    int rem = t;
    for (int a = n - 1; a >= 0; --a) {
      const int c = rem & 3;
      rem >>= 2;
      idx[static_cast<std::size_t>(a)] = ax[static_cast<std::size_t>(a)].idx[c];
      wt *= ax[static_cast<std::size_t>(a)].w[c];
    }
    const std::size_t id = grid_.ravel(idx);
    std::size_t c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) h(i, j) += wt * hw_[c++][id];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) h(i, j) = h(j, i);
  return h;
}

Eigen::MatrixXd SolutionHessian::operator()(const Eigen::VectorXd& y) const {
  const double e2 = approx_.spec().epsilon() * approx_.spec().epsilon();
  return approx_.hess_psi(y) + scale_ * w_hessian(y / e2);
}

HessianFn SolutionHessian::fn() const {
  return [self = *this](const Eigen::VectorXd& y) { return self(y); };
}

std::vector<Eigen::MatrixXd> r_field(const GridField& w, const Background& bg) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(bg.grid.size());
  for (std::size_t id = 0; id < bg.grid.size(); ++id) out.push_back(r_of_w(w, bg, id));
  return out;
}

DominanceResult dominance_margin(const std::vector<Eigen::MatrixXd>& r, const GridSpec& grid,
                                 const ProblemSpec& spec) {
  if (r.size() != grid.size()) throw ConfigError("dominance_margin: field size mismatch");
  const int n = grid.n();
  const int kp = grid.k() - 1;
  const double eps = spec.epsilon();
  const double e4 = std::pow(eps, 4.0);
  const double e45 = std::pow(eps, 4.5);
  DominanceResult out;
  out.min_margin = std::numeric_limits<double>::infinity();
  double block_max = 0.0;
  for (std::size_t id = 0; id < grid.size(); ++id) {
    const Eigen::MatrixXd& m = r[id];
    const Eigen::VectorXd x = grid.point(id);
    const double xpp = x.tail(n - kp).norm();
    for (int j = kp; j < n; ++j) {
      double mj = m(j, j) - spec.alpha() * e4 * xpp * xpp;
      for (int i = kp; i < n; ++i) {
        block_max = std::max(block_max, std::abs(m(i, j)));
        if (i != j) mj -= std::abs(m(i, j));
      }
      if (mj < out.min_margin) {
        out.min_margin = mj;
        out.worst_point = x;
        out.worst_j = j + 1;
      }
      for (int i = 0; i < kp; ++i) {
        const double v = std::abs(m(i, j));
        if (xpp == 0.0)
          out.mixed_at_zero = std::max(out.mixed_at_zero, v);
        else
          out.mixed_constant = std::max(out.mixed_constant, v / (e4 * xpp + e45 * xpp * xpp));
      }
    }
  }
  out.tolerance = 1e-12 * block_max;
  out.ok = out.min_margin >= -out.tolerance;
  return out;
}

double FlatnessReport::second_ratio() const {
  return interior_second > 0.0 ? slice_second / interior_second : 0.0;
}

double FlatnessReport::third_ratio() const {
  return interior_third > 0.0 ? slice_third / interior_third : 0.0;
}

double flatness_tol(const GridSpec& grid, double residual_inf) {
  double h = 0.0;
  for (int a = 0; a < grid.n(); ++a) h = std::max(h, grid.spacing(a));
  return std::max(10.0 * h * h, 10.0 * residual_inf);
}

FlatnessReport boundary_flatness(const GridField& w, double residual_inf) {
  const GridSpec& g = w.grid();
  const int n = g.n();
  const int kp = g.k() - 1;
  std::vector<GridField> second;
  std::vector<GridField> third;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (j < kp) continue;
      second.push_back(partial(w, gamma_of(n, {i, j})));
      for (int p = j; p < n; ++p) third.push_back(partial(w, gamma_of(n, {i, j, p})));
    }
  FlatnessReport rep;
  std::vector<int> idx;
  for (std::size_t id = 0; id < g.size(); ++id) {
    if (g.on_boundary(id)) continue;
    g.unravel(id, idx);
    const bool slice = on_center_slice(g, idx);
    for (const auto& f : second) {
      rep.interior_second = std::max(rep.interior_second, std::abs(f[id]));
      if (slice) rep.slice_second = std::max(rep.slice_second, std::abs(f[id]));
    }
    for (const auto& f : third) {
      rep.interior_third = std::max(rep.interior_third, std::abs(f[id]));
      if (slice) rep.slice_third = std::max(rep.slice_third, std::abs(f[id]));
    }
  }
  rep.tolerance = flatness_tol(g, residual_inf);
  rep.pass = rep.slice_second <= rep.tolerance && rep.slice_third <= rep.tolerance;
  return rep;
}

double eigen_bracket_delta(const std::vector<double>& tau) {
  if (tau.size() < 2) return 0.25;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tau.size(); ++i)
    d = std::min({d, 1.0 - tau[i + 1] / tau[i], tau[i] / tau[i + 1] - 1.0});
  return 0.25 * d;
}

double eigen_gap_tol(const std::vector<double>& tau) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) d = std::min(d, tau[i] - tau[i + 1]);
  return 0.25 * d;
}

EigenPerturbation eig_perturb(const std::vector<double>& tau, const GridField& w, double eps) {
  const GridSpec& g = w.grid();
  const int n = g.n();
  const int kp = g.k() - 1;
  if (static_cast<int>(tau.size()) != kp) throw ConfigError("eig_perturb: tau must have k-1 entries");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0)) throw ConfigError("eig_perturb: tau must be positive");
    if (i > 0 && !(tau[i] < tau[i - 1])) throw ConfigError("eig_perturb: tau must be strictly decreasing");
  }
  if (!(eps > 0.0)) throw ConfigError("eig_perturb: eps must be positive");

  std::vector<GridField> d2(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      d2[static_cast<std::size_t>(i * n + j)] = partial(w, gamma_of(n, {i, j}));
      if (j != i) d2[static_cast<std::size_t>(j * n + i)] = d2[static_cast<std::size_t>(i * n + j)];
    }
  // sum over ordered (i, j, l) of |w_ijl|
  GridField d3sum(g);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int l = j; l < n; ++l) {
        const int mult = (i == j && j == l) ? 1 : (i == j || j == l) ? 3 : 6;
        const GridField f = partial(w, gamma_of(n, {i, j, l}));
        for (std::size_t id = 0; id < g.size(); ++id) d3sum[id] += mult * std::abs(f[id]);
      }

  const double delta = eigen_bracket_delta(tau);
  const double gap_tol = eigen_gap_tol(tau);
  EigenPerturbation out;
  out.tau = tau;
  out.epsilon = eps;
  for (int i = 0; i < kp * n; ++i) out.t_fields.emplace_back(g);

  std::vector<double> w2sum(g.size(), 0.0);
  double w2max = 0.0;
  for (std::size_t id = 0; id < g.size(); ++id) {
    for (const auto& f : d2) w2sum[id] += std::abs(f[id]);
    w2max = std::max(w2max, w2sum[id]);
  }

  for (std::size_t id = 0; id < g.size(); ++id) {
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = eps * d2[static_cast<std::size_t>(i * n + j)][id];
    for (int i = 0; i < kp; ++i) r(i, i) += tau[static_cast<std::size_t>(i)];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
    const Eigen::VectorXd lam = es.eigenvalues().reverse();
    const Eigen::MatrixXd vec = es.eigenvectors().rowwise().reverse();

    Eigen::MatrixXd rows(kp, n);
    Eigen::MatrixXd rows_eig(kp, n);
    std::vector<double> roots;
    for (int i = 0; i < kp; ++i) {
      const double ti = tau[static_cast<std::size_t>(i)];
      const double root = bisect_det(r, (1.0 - delta) * ti, (1.0 + delta) * ti);
      for (double prev : roots)
        if (std::abs(prev - root) < gap_tol) throw NumericError("eig_perturb: eigenvalue gap collapsed, eps too large");
      roots.push_back(root);
      const Eigen::VectorXd t = elimination_vector(r, root, i);
      Eigen::VectorXd v = vec.col(i);
      if (v.dot(t) < 0.0) v = -v;
      rows.row(i) = t.transpose();
      rows_eig.row(i) = v.transpose();
      out.max_vector_disagreement = std::max(out.max_vector_disagreement, (t - v).cwiseAbs().maxCoeff());
      for (int j = 0; j < n; ++j) out.t_fields[static_cast<std::size_t>(i * n + j)][id] = t(j);
    }
    out.lambda.push_back(lam);
    out.t_rows.push_back(rows);
    out.t_rows_eigen.push_back(rows_eig);

    if (w2sum[id] <= 1e-12 * w2max || w2sum[id] == 0.0) continue;
    double s_tau = 0.0;
    double s_zero = 0.0;
    double s_vec = 0.0;
    for (int i = 0; i < kp; ++i) {
      s_tau += std::abs(lam(i) - tau[static_cast<std::size_t>(i)]);
      for (int j = 0; j < n; ++j) s_vec += std::abs(rows(i, j) - (i == j ? 1.0 : 0.0));
    }
    for (int i = kp; i < n; ++i) s_zero += std::abs(lam(i));
    out.ratio_tau = std::max(out.ratio_tau, s_tau / (eps * w2sum[id]));
    out.ratio_zero = std::max(out.ratio_zero, s_zero / (std::sqrt(eps) * std::sqrt(w2sum[id])));
    out.ratio_vectors = std::max(out.ratio_vectors, s_vec / (eps * w2sum[id]));
  }

  GridField dtsum(g);
  for (const auto& f : out.t_fields)
    for (int l = 0; l < n; ++l) {
      const GridField d = derivative(f, l, 1);
      for (std::size_t id = 0; id < g.size(); ++id) dtsum[id] += std::abs(d[id]);
    }
  const double d3max = d3sum.max_abs();
  for (std::size_t id = 0; id < g.size(); ++id) {
    if (d3sum[id] <= 1e-12 * d3max || d3sum[id] == 0.0) continue;
    out.ratio_derivative = std::max(out.ratio_derivative, dtsum[id] / (eps * d3sum[id]));
  }
  return out;
}

GridField random_c3_field(const GridSpec& grid, std::mt19937_64& rng, int modes) {
  const int n = grid.n();
  const int kp = grid.k() - 1;
  std::uniform_int_distribution<int> freq(0, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Term {
    std::vector<int> l;
    double phase;
    std::vector<double> c;  // 1, x_a, x_a^2, x_a^3 per Dirichlet axis
  };
  std::vector<Term> terms;
  for (int t = 0; t < modes; ++t) {
    Term term;
    for (int a = 0; a < kp; ++a) term.l.push_back(freq(rng));
    term.phase = std::numbers::pi * u(rng);
    for (int a = kp; a < n; ++a)
      for (int d = 0; d < 4; ++d) term.c.push_back(u(rng));
    terms.push_back(std::move(term));
  }
  GridField w = GridField::from_function(grid, [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const Term& t : terms) {
      double arg = t.phase;
      for (int a = 0; a < kp; ++a) arg += t.l[static_cast<std::size_t>(a)] * x(a);
      double p = std::cos(arg);
      for (int a = kp; a < n; ++a) {
        const double* c = &t.c[static_cast<std::size_t>(4 * (a - kp))];
        const double xa = x(a);
        p *= c[0] + xa * (c[1] + xa * (c[2] + xa * c[3]));
      }
      v += p;
    }
    return v;
  });
  const double norm = cnorm(w, 3);
  if (norm == 0.0) throw NumericError("random_c3_field: degenerate draw");
  w *= 1.0 / norm;
  return w;
}

}  // namespace khess
