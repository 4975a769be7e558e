#include "khess/field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/FFT>

#include "khess/errors.hpp"

namespace khess {

namespace {

using cplx = std::complex<double>;

template <class T, class Fn>
void for_each_line(std::vector<T>& data, const GridSpec& g, int axis, Fn&& fn) {
  const std::size_t stride = g.stride(axis);
  const auto np = static_cast<std::size_t>(g.points(axis));
  const std::size_t block = stride * np;
  std::vector<T> line(np);
  for (std::size_t outer = 0; outer < g.size(); outer += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t base = outer + inner;
      for (std::size_t j = 0; j < np; ++j) line[j] = data[base + j * stride];
      fn(line);
      for (std::size_t j = 0; j < np; ++j) data[base + j * stride] = line[j];
    }
  }
}

// Finite-difference weights for derivatives 0..nd at z on nodes x.
std::vector<std::vector<double>> fornberg(double z, const std::vector<double>& x, int nd) {
  const int m = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(nd + 1), 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < m; ++i) {
    const int mn = std::min(i, nd);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[static_cast<std::size_t>(i)] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      c2 *= c3;
      auto& ci = c[static_cast<std::size_t>(i)];
      const auto& cim = c[static_cast<std::size_t>(i - 1)];
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          ci[static_cast<std::size_t>(k)] = c1 * (k * cim[static_cast<std::size_t>(k - 1)] - c5 * cim[static_cast<std::size_t>(k)]) / c2;
        ci[0] = -c1 * c5 * cim[0] / c2;
      }
      auto& cj = c[static_cast<std::size_t>(j)];
      for (int k = mn; k >= 1; --k)
        cj[static_cast<std::size_t>(k)] = (c4 * cj[static_cast<std::size_t>(k)] - k * cj[static_cast<std::size_t>(k - 1)]) / c3;
      cj[0] = c4 * cj[0] / c3;
    }
    c1 = c2;
  }
  return c;
}

struct Stencil {
  std::vector<int> start;
  std::vector<std::vector<double>> weights;
};

// Fourth-order stencils for derivative d on nodes 0..nint with spacing h.
Stencil dirichlet_stencil(int nint, double h, int d) {
  Stencil st;
  const int np = nint + 1;
  for (int j = 0; j < np; ++j) {
    int w = 5;
    int s = j - 2;
    if (s < 0 || j + 2 > nint) {
      w = d == 1 ? 5 : 6;
      s = std::clamp(j - w / 2, 0, np - w);
    }
    std::vector<double> x(static_cast<std::size_t>(w));
    for (int i = 0; i < w; ++i) x[static_cast<std::size_t>(i)] = s + i;
    const auto c = fornberg(j, x, d);
    std::vector<double> wt(static_cast<std::size_t>(w));
    const double scale = std::pow(h, -d);
    for (int i = 0; i < w; ++i) wt[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] * scale;
    st.start.push_back(s);
    st.weights.push_back(std::move(wt));
  }
  return st;
}

int wavenumber(int j, int n) { return j <= n / 2 ? j : j - n; }

void check_axis(const GridSpec& g, int axis) {
  if (axis < 0 || axis >= g.n()) throw DomainError("derivative: axis out of range");
}

// Energies E[b][node] = |DFT_x'(D^beta f)|^2 * trapezoid weight summed over
// |beta| = b, indexed by periodic mode (flattened) after summing x''.
struct ModeEnergy {
  std::vector<double> l2;                  // |l|^2 per periodic mode
  std::vector<std::vector<double>> by_b;  // by_b[b][mode]
};

void enumerate(int axes, int budget, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == axes) {
    out.push_back(cur);
    return;
  }
  for (int c = 0; c <= budget; ++c) {
    cur.push_back(c);
    enumerate(axes, budget - c, cur, out);
    cur.pop_back();
  }
}

ModeEnergy mode_energy(const GridField& f, int s) {
  const GridSpec& g = f.grid();
  const int n = g.n();
  const int kp = g.k() - 1;
  const int nd = n - kp;
  std::size_t modes = 1;
  for (int a = 0; a < kp; ++a) modes *= static_cast<std::size_t>(g.points(a));
  std::size_t slab = g.size() / modes;  // nodes per periodic mode
  ModeEnergy me;
  me.l2.resize(modes);
  {
    std::vector<int> idx;
    for (std::size_t m = 0; m < modes; ++m) {
      std::size_t r = m;
      double l2 = 0.0;
      for (int a = kp - 1; a >= 0; --a) {
        const int p = g.points(a);
        const int l = wavenumber(static_cast<int>(r % static_cast<std::size_t>(p)), p);
        r /= static_cast<std::size_t>(p);
        l2 += static_cast<double>(l) * l;
      }
      me.l2[m] = l2;
    }
  }
  me.by_b.assign(static_cast<std::size_t>(s + 1), std::vector<double>(modes, 0.0));
  // Trapezoid weights over the Dirichlet block, in storage order of the slab.
  std::vector<double> tw(slab, 1.0);
  for (std::size_t q = 0; q < slab; ++q) {
    std::size_t r = q;
    for (int a = n - 1; a >= kp; --a) {
      const int p = g.points(a);
      const int j = static_cast<int>(r % static_cast<std::size_t>(p));
      r /= static_cast<std::size_t>(p);
      tw[q] *= g.spacing(a) * ((j == 0 || j == p - 1) ? 0.5 : 1.0);
    }
  }
  double norm = 1.0;
  for (int a = 0; a < kp; ++a) norm *= g.points(a);
  std::vector<std::vector<int>> betas;
  std::vector<int> cur;
  enumerate(nd, s, cur, betas);
  Eigen::FFT<double> fft;
  for (const auto& beta : betas) {
    std::vector<int> gamma(static_cast<std::size_t>(kp), 0);
    gamma.insert(gamma.end(), beta.begin(), beta.end());
    int b = 0;
    for (int c : beta) b += c;
    const GridField d = partial(f, gamma);
    std::vector<cplx> data(d.values().begin(), d.values().end());
    for (int a = 0; a < kp; ++a) {
      for_each_line(data, g, a, [&](std::vector<cplx>& line) {
        std::vector<cplx> out;
        fft.fwd(out, line);
        line = out;
      });
    }
    for (std::size_t id = 0; id < g.size(); ++id) {
      const std::size_t m = id / slab;
      const std::size_t q = id % slab;
      me.by_b[static_cast<std::size_t>(b)][m] += std::norm(data[id] / norm) * tw[q];
    }
  }
  return me;
}

std::vector<double> sobolev_norms(const GridField& f, int s_max) {
  const ModeEnergy me = mode_energy(f, s_max);
  std::vector<double> out;
  for (int s = 0; s <= s_max; ++s) {
    double total = 0.0;
    for (std::size_t m = 0; m < me.l2.size(); ++m) {
      const double base = 1.0 + me.l2[m];
      for (int b = 0; b <= s; ++b) {
        double w = 0.0;
        for (int j = b; j <= s; ++j) {
          double p = 1.0;
          for (int t = 0; t <= s - j; ++t) {
            w += p;
            p *= base;
          }
        }
        total += w * me.by_b[static_cast<std::size_t>(b)][m];
      }
    }
    out.push_back(std::sqrt(total));
  }
  return out;
}

}  // namespace

GridField derivative(const GridField& f, int axis, int order) {
  const GridSpec& g = f.grid();
  check_axis(g, axis);
  if (order != 1 && order != 2) throw DomainError("derivative: order must be 1 or 2");
  std::vector<double> data = f.values();
  if (g.is_periodic(axis)) {
    const int np = g.points(axis);
    if (np < 4) throw DomainError("derivative: periodic resolution too low");
    Eigen::FFT<double> fft;
    std::vector<cplx> in(static_cast<std::size_t>(np)), spec, back;
    for_each_line(data, g, axis, [&](std::vector<double>& line) {
      for (int j = 0; j < np; ++j) in[static_cast<std::size_t>(j)] = line[static_cast<std::size_t>(j)];
      fft.fwd(spec, in);
      for (int j = 0; j < np; ++j) {
        const double l = wavenumber(j, np);
        cplx& c = spec[static_cast<std::size_t>(j)];
        if (order == 1)
          c = (j == np / 2) ? cplx(0.0) : c * cplx(0.0, l);
        else
          c *= -l * l;
      }
      fft.inv(back, spec);
      for (int j = 0; j < np; ++j) line[static_cast<std::size_t>(j)] = back[static_cast<std::size_t>(j)].real();
    });
  } else {
    const int nint = g.intervals(axis);
    if (nint + 1 < 6) throw DomainError("derivative: Dirichlet resolution too low");
    const Stencil st = dirichlet_stencil(nint, g.spacing(axis), order);
    std::vector<double> out(static_cast<std::size_t>(nint + 1));
    for_each_line(data, g, axis, [&](std::vector<double>& line) {
      for (int j = 0; j <= nint; ++j) {
        const auto& w = st.weights[static_cast<std::size_t>(j)];
        const int s = st.start[static_cast<std::size_t>(j)];
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * line[static_cast<std::size_t>(s) + i];
        out[static_cast<std::size_t>(j)] = acc;
      }
      line = out;
    });
  }
  return GridField(g, std::move(data));
}

GridField partial(const GridField& f, const std::vector<int>& gamma) {
  GridField out = f;
  for (int a = 0; a < static_cast<int>(gamma.size()); ++a) {
    const int c = gamma[static_cast<std::size_t>(a)];
    for (int i = 0; i < c / 2; ++i) out = derivative(out, a, 2);
    if (c % 2) out = derivative(out, a, 1);
  }
  return out;
}

int sobolev_cap(const GridSpec& grid) {
  int nmin = 1 << 30;
  for (int a = grid.k() - 1; a < grid.n(); ++a) nmin = std::min(nmin, grid.intervals(a));
  return std::min(8, nmin / 2 - 2);
}

double sobolev_norm(const GridField& f, int s) {
  if (s < 0) throw DomainError("sobolev_norm: s must be nonnegative");
  if (s > sobolev_cap(f.grid()))
    throw DomainError("sobolev_norm: s = " + std::to_string(s) + " exceeds the grid cap " +
                      std::to_string(sobolev_cap(f.grid())));
  return sobolev_norms(f, s).back();
}

double cnorm(const GridField& f, int r) {
  if (r < 0 || r > kCnormCap) throw DomainError("cnorm: order outside 0.." + std::to_string(kCnormCap));
  std::vector<std::vector<int>> gammas;
  std::vector<int> cur;
  enumerate(f.grid().n(), r, cur, gammas);
  double m = 0.0;
  for (const auto& gm : gammas) m = std::max(m, partial(f, gm).max_abs());
  return m;
}

double smoothing_symbol(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double a = std::exp(-1.0 / (2.0 - x));
  const double b = std::exp(-1.0 / (x - 1.0));
  return a / (a + b);
}

double max_frequency(const GridSpec& g) {
  double lp = 0.0;
  double md = 0.0;
  for (int a = 0; a < g.n(); ++a) {
    if (g.is_periodic(a))
      lp += std::pow(g.intervals(a) / 2.0, 2);
    else
      md += std::pow(g.intervals(a) - 1.0, 2);
  }
  return std::max(std::sqrt(lp), std::sqrt(md));
}

GridField smooth(const GridField& f, SmoothingParams params) {
  const double t = params.t;
  if (!(t >= 1.0)) throw DomainError("smooth: t must be >= 1");
  const GridSpec& g = f.grid();
  const int n = g.n();
  std::vector<cplx> data(f.values().begin(), f.values().end());
  Eigen::FFT<double> fft;
  std::vector<Eigen::MatrixXd> sine(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    if (g.is_periodic(a)) {
      for_each_line(data, g, a, [&](std::vector<cplx>& line) {
        std::vector<cplx> out;
        fft.fwd(out, line);
        line = out;
      });
    } else {
      const int nint = g.intervals(a);
      Eigen::MatrixXd& m = sine[static_cast<std::size_t>(a)];
      m.resize(nint + 1, nint + 1);
      m.setZero();
      for (int i = 1; i < nint; ++i)
        for (int j = 1; j < nint; ++j) m(i, j) = std::sin(M_PI * i * j / nint);
      for_each_line(data, g, a, [&](std::vector<cplx>& line) {
        Eigen::Map<Eigen::VectorXcd> v(line.data(), nint + 1);
        Eigen::VectorXcd out = m.cast<cplx>() * v;
        v = out;
      });
    }
  }
  std::vector<int> idx;
  for (std::size_t id = 0; id < g.size(); ++id) {
    g.unravel(id, idx);
    double l2 = 0.0;
    double m2 = 0.0;
    for (int a = 0; a < n; ++a) {
      const int j = idx[static_cast<std::size_t>(a)];
      if (g.is_periodic(a)) {
        const double l = wavenumber(j, g.points(a));
        l2 += l * l;
      } else {
        m2 += static_cast<double>(j) * j;
      }
    }
    data[id] *= smoothing_symbol(std::sqrt(l2) / t) * smoothing_symbol(std::sqrt(m2) / t);
  }
  for (int a = 0; a < n; ++a) {
    if (g.is_periodic(a)) {
      for_each_line(data, g, a, [&](std::vector<cplx>& line) {
        std::vector<cplx> out;
        fft.inv(out, line);
        line = out;
      });
    } else {
      const int nint = g.intervals(a);
      const Eigen::MatrixXd& m = sine[static_cast<std::size_t>(a)];
      for_each_line(data, g, a, [&](std::vector<cplx>& line) {
        Eigen::Map<Eigen::VectorXcd> v(line.data(), nint + 1);
        Eigen::VectorXcd out = (2.0 / nint) * (m.cast<cplx>() * v);
        v = out;
      });
    }
  }
  GridField out(g);
  for (std::size_t id = 0; id < g.size(); ++id) out[id] = data[id].real();
  out.zero_boundary();
  return out;
}

double SmoothingConstants::worst_spread() const {
  double worst = 1.0;
  for (const auto* fam : {&bounded, &growth, &approximate}) {
    for (const auto& [key, cs] : *fam) {
      const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
      if (*lo > 0.0) worst = std::max(worst, *hi / *lo);
    }
  }
  return worst;
}

SmoothingConstants measure_smoothing_constants(const std::vector<GridField>& battery,
                                               const std::vector<double>& ts, int s_max) {
  SmoothingConstants out;
  out.ts = ts;
  std::vector<std::vector<double>> base;
  for (const auto& u : battery) base.push_back(sobolev_norms(u, s_max));
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    std::vector<std::vector<double>> sm, diff;
    for (const auto& u : battery) {
      const GridField su = smooth(u, t);
      sm.push_back(sobolev_norms(su, s_max));
      diff.push_back(sobolev_norms(su - u, s_max));
    }
    for (int s1 = 0; s1 <= s_max; ++s1) {
      for (int s2 = 0; s2 <= s_max; ++s2) {
        double cb = 0.0, cg = 0.0, ca = 0.0;
        for (std::size_t i = 0; i < battery.size(); ++i) {
          const double un = base[i][static_cast<std::size_t>(s2)];
          if (un == 0.0) continue;
          const double scale = std::pow(t, s1 - s2);
          cb = std::max(cb, sm[i][static_cast<std::size_t>(s1)] / un);
          cg = std::max(cg, sm[i][static_cast<std::size_t>(s1)] / (scale * un));
          ca = std::max(ca, diff[i][static_cast<std::size_t>(s1)] / (scale * un));
        }
        const auto key = std::make_pair(s1, s2);
        if (s1 <= s2) out.bounded[key].push_back(cb);
        if (s1 >= s2) out.growth[key].push_back(cg);
        if (s1 <= s2) out.approximate[key].push_back(ca);
      }
    }
  }
  return out;
}

}  // namespace khess
