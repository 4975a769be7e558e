#include "khess/linsolve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "khess/errors.hpp"
#include "khess/field.hpp"
#include "khess/symfun.hpp"

namespace khess {

namespace {

struct Tap {
  int index;
  double weight;
};

using Stencil = std::vector<Tap>;

int wrap(int j, int np) { return ((j % np) + np) % np; }

Stencil stencil1(const GridSpec& g, int axis, int j) {
  const double h = g.spacing(axis);
  if (g.is_periodic(axis)) {
    const int np = g.points(axis);
    return {{wrap(j - 1, np), -0.5 / h}, {wrap(j + 1, np), 0.5 / h}};
  }
  const int last = g.intervals(axis);
  if (j == 0) return {{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}};
  if (j == last) return {{last, 1.5 / h}, {last - 1, -2.0 / h}, {last - 2, 0.5 / h}};
  return {{j - 1, -0.5 / h}, {j + 1, 0.5 / h}};
}

Stencil stencil2(const GridSpec& g, int axis, int j) {
  const double h2 = g.spacing(axis) * g.spacing(axis);
  if (g.is_periodic(axis)) {
    const int np = g.points(axis);
    return {{wrap(j - 1, np), 1.0 / h2}, {j, -2.0 / h2}, {wrap(j + 1, np), 1.0 / h2}};
  }
  const int last = g.intervals(axis);
  if (j == 0) return {{0, 2.0 / h2}, {1, -5.0 / h2}, {2, 4.0 / h2}, {3, -1.0 / h2}};
  if (j == last) return {{last, 2.0 / h2}, {last - 1, -5.0 / h2}, {last - 2, 4.0 / h2}, {last - 3, -1.0 / h2}};
  return {{j - 1, 1.0 / h2}, {j, -2.0 / h2}, {j + 1, 1.0 / h2}};
}

bool is_dirichlet(const GridSpec& g, int axis) { return !g.is_periodic(axis); }

double weight_exponent(const GridSpec& g, const Eigen::VectorXd& x) {
  double q = 0.0;
  for (int a = g.k() - 1; a < g.n(); ++a) q += x(a) * x(a);
  return q;
}

GridField weight_field(const GridSpec& g, double mu) {
  return GridField::from_function(g, [&](const Eigen::VectorXd& x) { return std::exp(mu * weight_exponent(g, x)); });
}

double dot_volume(const GridField& a, const GridField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_volume();
}

std::vector<Eigen::VectorXd> unit_directions(int n, std::size_t count) {
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Eigen::VectorXd::Unit(n, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (double s : {1.0, -1.0}) {
        Eigen::VectorXd d = Eigen::VectorXd::Unit(n, i) + s * Eigen::VectorXd::Unit(n, j);
        dirs.push_back(d.normalized());
      }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  while (dirs.size() < count) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = gauss(rng);
    if (d.norm() > 1e-12) dirs.push_back(d.normalized());
  }
  return dirs;
}

}  // namespace

Background Background::build(const ApproxSolution& approx, const GridSpec& grid) {
  const ProblemSpec& spec = approx.spec();
  if (grid.n() != spec.n() || grid.k() != spec.k()) throw ConfigError("grid dimensions do not match the problem");
  Background bg;
  bg.grid = grid;
  bg.k = spec.k();
  bg.epsilon = spec.epsilon();
  bg.ktilde = GridField(grid);
  bg.hess_psi.resize(grid.size());
  const double e2 = spec.epsilon() * spec.epsilon();
  for (std::size_t id = 0; id < grid.size(); ++id) {
    const Eigen::VectorXd y = e2 * grid.point(id);
    bg.hess_psi[id] = approx.hess_psi(y);
    bg.ktilde[id] = approx.ktilde(y);
  }
  return bg;
}

double Background::w_scale() const { return std::pow(epsilon, 4.5); }

Eigen::MatrixXd fd_hessian(const GridField& f, std::size_t id) {
  const GridSpec& g = f.grid();
  const int n = g.n();
  std::vector<int> idx;
  g.unravel(id, idx);
  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i) {
    const int ji = idx[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (const Tap& t : stencil2(g, i, ji)) {
      idx[static_cast<std::size_t>(i)] = t.index;
      acc += t.weight * f[g.ravel(idx)];
    }
    idx[static_cast<std::size_t>(i)] = ji;
    h(i, i) = acc;
    for (int j = i + 1; j < n; ++j) {
      const int jj = idx[static_cast<std::size_t>(j)];
      double cross = 0.0;
      for (const Tap& ti : stencil1(g, i, ji)) {
        idx[static_cast<std::size_t>(i)] = ti.index;
        for (const Tap& tj : stencil1(g, j, jj)) {
          idx[static_cast<std::size_t>(j)] = tj.index;
          cross += ti.weight * tj.weight * f[g.ravel(idx)];
        }
        idx[static_cast<std::size_t>(j)] = jj;
      }
      idx[static_cast<std::size_t>(i)] = ji;
      h(i, j) = h(j, i) = cross;
    }
  }
  return h;
}

Eigen::MatrixXd r_of_w(const GridField& w, const Background& bg, std::size_t id) {
  return bg.hess_psi[id] + bg.w_scale() * fd_hessian(w, id);
}

GridField residual_G(const GridField& w, const Background& bg) {
  if (!(w.grid() == bg.grid)) throw ConfigError("residual_G: grid mismatch");
  GridField out(bg.grid);
  const double inv = 1.0 / bg.w_scale();
  for (std::size_t id = 0; id < bg.grid.size(); ++id) {
    if (bg.grid.on_boundary(id)) continue;
    out[id] = inv * (s_k_minors(SymMatrix(r_of_w(w, bg, id)), bg.k) - bg.ktilde[id]);
  }
  return out;
}

int budget_order(int n) { return n / 2 + 3; }

void LinearProblem::set_rhs(const GridField& g) {
  if (!(g.grid() == grid)) throw ConfigError("set_rhs: grid mismatch");
  g_rhs = g;
  for (std::size_t i = 0; i < g.size(); ++i) g_rhs[i] *= weight[i];
}

LinearProblem LinearProblem::constant(const GridSpec& grid, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      double c) {
  const int n = grid.n();
  LinearProblem p;
  p.grid = grid;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      GridField f(grid);
      std::fill(f.values().begin(), f.values().end(), 0.5 * (a(i, j) + a(j, i)));
      p.a.push_back(std::move(f));
    }
  for (int i = 0; i < n; ++i) {
    GridField f(grid);
    std::fill(f.values().begin(), f.values().end(), b(i));
    p.b.push_back(std::move(f));
  }
  p.c = GridField(grid);
  std::fill(p.c.values().begin(), p.c.values().end(), c);
  p.g_rhs = GridField(grid);
  p.weight = weight_field(grid, 0.0);
  return p;
}

double default_mu(double delta0) { return 0.5 * std::min(1.0 / delta0, 4.0); }

double default_nu(double theta) { return std::max(1e-6, 0.1 * theta); }

LinearProblem assemble(const GridField& w, const Background& bg, double theta, double nu, double mu) {
  const GridSpec& g = bg.grid;
  if (!(w.grid() == g)) throw ConfigError("assemble: grid mismatch");
  if (!(nu > 0.0)) throw ConfigError("assemble: nu must be positive");
  if (!(theta >= 0.0) || !(mu >= 0.0)) throw ConfigError("assemble: theta and mu must be nonnegative");
  const int n = g.n();
  LinearProblem p;
  p.grid = g;
  p.mu = mu;
  p.nu = nu;
  p.theta = theta;
  p.a.assign(static_cast<std::size_t>(n * n), GridField(g));
  p.b.assign(static_cast<std::size_t>(n), GridField(g));
  p.c = GridField(g);
  p.g_rhs = GridField(g);
  p.weight = weight_field(g, mu);
  for (std::size_t id = 0; id < g.size(); ++id) {
    const Eigen::MatrixXd s = s_k_grad(SymMatrix(r_of_w(w, bg, id)), bg.k).matrix();
    const Eigen::VectorXd x = g.point(id);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p.a[static_cast<std::size_t>(i * n + j)][id] = s(i, j) + (i == j ? theta + nu : 0.0);
    for (int i = 0; i < n; ++i) {
      double bi = 0.0;
      for (int j = 0; j < n; ++j)
        if (is_dirichlet(g, j)) bi -= 4.0 * mu * x(j) * s(i, j);
      if (is_dirichlet(g, i)) bi -= 4.0 * mu * x(i) * theta;
      p.b[static_cast<std::size_t>(i)][id] = bi;
    }
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!is_dirichlet(g, i)) continue;
      c += -2.0 * mu * (s(i, i) + theta) + 4.0 * theta * mu * mu * x(i) * x(i);
      for (int j = 0; j < n; ++j)
        if (is_dirichlet(g, j)) c += 4.0 * mu * mu * x(i) * x(j) * s(i, j);
    }
    p.c[id] = c;
  }
  p.w_cnorm = cnorm(w, budget_order(n));
  p.budget_warning = p.w_cnorm > 1.0;
  return p;
}

LinearProblem assemble(const GridField& w, const ApproxSolution& approx, double theta, double nu, double mu) {
  return assemble(w, Background::build(approx, w.grid()), theta, nu, mu);
}

EllipticityReport check_degenerate_ellipticity(const GridField& w, const Background& bg, double theta,
                                               std::size_t directions) {
  const GridSpec& g = bg.grid;
  const int n = g.n();
  const auto dirs = unit_directions(n, std::max<std::size_t>(directions, 1000));
  EllipticityReport rep;
  rep.directions = dirs.size();
  rep.min_form = std::numeric_limits<double>::infinity();
  rep.min_eigen = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < g.size(); ++id) {
    if (g.on_boundary(id)) continue;
    const Eigen::MatrixXd s = s_k_grad(SymMatrix(r_of_w(w, bg, id)), bg.k).matrix();
    double m = std::numeric_limits<double>::infinity();
    for (const auto& d : dirs) m = std::min(m, d.dot(s * d));
    if (theta + m < rep.min_form) {
      rep.min_form = theta + m;
      rep.worst_point = g.point(id);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    rep.min_eigen = std::min(rep.min_eigen, theta + es.eigenvalues()(0));
  }
  rep.pass = rep.min_form >= -kEllipticityTol;
  return rep;
}

EllipticityThreshold ellipticity_threshold(const GridField& w, const ApproxSolution& approx, const GridSpec& grid,
                                           double eps_lo, double eps_hi, int iterations) {
  if (!(eps_lo > 0.0) || !(eps_hi > eps_lo)) throw ConfigError("ellipticity_threshold: need 0 < eps_lo < eps_hi");
  EllipticityThreshold out;
  auto passes = [&](double eps) {
    ++out.probes;
    const Background bg = Background::build(approx.with_epsilon(eps), grid);
    const double theta = residual_G(w, bg).max_abs();
    return check_degenerate_ellipticity(w, bg, theta).pass;
  };
  if (passes(eps_hi)) {
    out.eps_pass = out.eps_fail = eps_hi;
    out.all_pass = true;
    return out;
  }
  out.eps_fail = eps_hi;
  if (!passes(eps_lo)) {
    out.eps_fail = eps_lo;
    return out;
  }
  double lo = eps_lo;
  double hi = eps_hi;
  for (int it = 0; it < iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (passes(mid))
      lo = mid;
    else
      hi = mid;
  }
  out.eps_pass = lo;
  out.eps_fail = hi;
  return out;
}

SparseSystem build_system(const LinearProblem& prob) {
  const GridSpec& g = prob.grid;
  const int n = g.n();
  SparseSystem sys;
  std::vector<long> unknown(g.size(), -1);
  for (std::size_t id = 0; id < g.size(); ++id)
    if (!g.on_boundary(id)) {
      unknown[id] = static_cast<long>(sys.nodes.size());
      sys.nodes.push_back(id);
    }
  const auto m = static_cast<Eigen::Index>(sys.nodes.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sys.nodes.size() * static_cast<std::size_t>(1 + 2 * n + 2 * n * n));
  sys.rhs.resize(m);
  std::vector<int> idx;
  for (Eigen::Index row = 0; row < m; ++row) {
    const std::size_t id = sys.nodes[static_cast<std::size_t>(row)];
    sys.rhs(row) = prob.g_rhs[id];
    g.unravel(id, idx);
    auto add = [&](double wgt) {
      const long col = unknown[g.ravel(idx)];
      if (col >= 0) trip.emplace_back(row, col, wgt);
    };
    add(prob.c[id]);
    for (int i = 0; i < n; ++i) {
      const int ji = idx[static_cast<std::size_t>(i)];
      const double aii = prob.a_ij(i, i)[id];
      for (const Tap& t : stencil2(g, i, ji)) {
        idx[static_cast<std::size_t>(i)] = t.index;
        add(aii * t.weight);
      }
      const double bi = prob.b[static_cast<std::size_t>(i)][id];
      for (const Tap& t : stencil1(g, i, ji)) {
        idx[static_cast<std::size_t>(i)] = t.index;
        add(bi * t.weight);
      }
      idx[static_cast<std::size_t>(i)] = ji;
      for (int j = i + 1; j < n; ++j) {
        const double aij = prob.a_ij(i, j)[id];
        if (aij == 0.0) continue;
        const int jj = idx[static_cast<std::size_t>(j)];
        for (const Tap& ti : stencil1(g, i, ji)) {
          idx[static_cast<std::size_t>(i)] = ti.index;
          for (const Tap& tj : stencil1(g, j, jj)) {
            idx[static_cast<std::size_t>(j)] = tj.index;
            add(2.0 * aij * ti.weight * tj.weight);
          }
          idx[static_cast<std::size_t>(j)] = jj;
        }
        idx[static_cast<std::size_t>(i)] = ji;
      }
    }
  }
  sys.matrix.resize(m, m);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();
  return sys;
}

void write_sparse(const SparseSystem& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out.precision(17);
  for (Eigen::Index r = 0; r < sys.matrix.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.matrix, r); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

namespace {

Eigen::VectorXd solve_lu(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a, const Eigen::VectorXd& rhs) {
  const Eigen::SparseMatrix<double> col = a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(col);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU solve failed");
  return x;
}

}  // namespace

SolveReport solve_report(const LinearProblem& prob) {
  const GridSpec& g = prob.grid;
  const SparseSystem sys = build_system(prob);
  SolveReport rep;
  rep.rho_bar = GridField(g);
  const double bnorm = sys.rhs.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.rhs.size());
  if (bnorm > 0.0) {
    if (g.n() == 2) {
      x = solve_lu(sys.matrix, sys.rhs);
      rep.method = "sparse-lu";
    } else {
      Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::IncompleteLUT<double>> it;
      it.preconditioner().setDroptol(1e-4);
      it.preconditioner().setFillfactor(20);
      it.setTolerance(kSolverTol);
      it.setMaxIterations(2000);
      it.compute(sys.matrix);
      if (it.info() == Eigen::Success) {
        x = it.solve(sys.rhs);
        rep.iterations = static_cast<int>(it.iterations());
      }
      rep.method = "bicgstab-ilut";
      if (it.info() != Eigen::Success || (sys.matrix * x - sys.rhs).norm() > kSolverTol * bnorm * 10) {
        x = solve_lu(sys.matrix, sys.rhs);
        rep.method = "sparse-lu";
      }
    }
    rep.relative_residual = (sys.matrix * x - sys.rhs).norm() / bnorm;
    if (!(rep.relative_residual <= 1e-8))
      throw SolverError("linear solve did not converge, relative residual " + std::to_string(rep.relative_residual));
  } else {
    rep.method = "zero";
  }
  for (std::size_t r = 0; r < sys.nodes.size(); ++r) rep.rho_bar[sys.nodes[r]] = x(static_cast<Eigen::Index>(r));
  rep.rho = rep.rho_bar;
  for (std::size_t i = 0; i < g.size(); ++i) rep.rho[i] /= prob.weight[i];
  return rep;
}

GridField solve(const LinearProblem& prob) { return solve_report(prob).rho; }

double apriori_ratio(const GridField& rho, const GridField& g, int s) {
  const double nr = sobolev_norm(rho, s);
  const double ng = sobolev_norm(g, s);
  if (ng == 0.0) return nr == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return nr / ng;
}

CoercivityReport measure_coercivity(const LinearProblem& prob, std::size_t count, std::uint64_t seed) {
  const GridSpec& g = prob.grid;
  const int n = g.n();
  const SparseSystem sys = build_system(prob);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> freq(1, 4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  CoercivityReport rep;
  rep.constant = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < count; ++s) {
    struct Mode {
      std::vector<int> f;
      std::vector<double> ph;
      double amp;
    };
    std::vector<Mode> modes(4);
    for (auto& m : modes) {
      for (int a = 0; a < n; ++a) {
        m.f.push_back(freq(rng) - (g.is_periodic(a) ? 1 : 0));
        m.ph.push_back(phase(rng));
      }
      m.amp = gauss(rng);
    }
    const GridField rho = GridField::from_function(g, [&](const Eigen::VectorXd& x) {
      double v = 0.0;
      for (const auto& m : modes) {
        double p = m.amp;
        for (int a = 0; a < n; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          if (g.is_periodic(a))
            p *= std::cos(m.f[ua] * x(a) + m.ph[ua]);
          else
            p *= std::sin(m.f[ua] * M_PI * (x(a) + g.delta0()) / (2.0 * g.delta0()));
        }
        v += p;
      }
      return v;
    });
    Eigen::VectorXd r(static_cast<Eigen::Index>(sys.nodes.size()));
    for (std::size_t i = 0; i < sys.nodes.size(); ++i) r(static_cast<Eigen::Index>(i)) = rho[sys.nodes[i]];
    const double form = -r.dot(sys.matrix * r) * g.cell_volume();
    double grad2 = 0.0;
    std::vector<int> idx;
    for (std::size_t id = 0; id < g.size(); ++id) {
      g.unravel(id, idx);
      for (int a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const int j = idx[ua];
        int next = j + 1;
        if (g.is_periodic(a))
          next = wrap(next, g.points(a));
        else if (next > g.intervals(a))
          continue;
        idx[ua] = next;
        const double d = (rho[g.ravel(idx)] - rho[id]) / g.spacing(a);
        idx[ua] = j;
        grad2 += d * d;
      }
    }
    grad2 *= g.cell_volume();
    const double l2 = dot_volume(rho, rho);
    if (l2 == 0.0) continue;
    rep.constant = std::min(rep.constant, (form - prob.nu * grad2) / l2);
    ++rep.samples;
  }
  return rep;
}

}  // namespace khess
