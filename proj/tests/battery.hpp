#pragma once

// Fixed battery of H^1_0 fields for the smoothing and solver measurements.

#include <cmath>
#include <random>
#include <vector>

#include "khess/grid.hpp"

namespace battery {

// sine mode m on [-d, d] vanishing at both faces
inline double sine_mode(double x, int m, double d) { return std::sin(m * M_PI * (x + d) / (2.0 * d)); }

struct Mode {
  std::vector<int> l;  // per periodic axis
  std::vector<int> m;  // per Dirichlet axis, >= 1
  double amp = 1.0;
  double phase = 0.0;
};

inline khess::GridField from_modes(const khess::GridSpec& g, const std::vector<Mode>& modes) {
  const int kp = g.k() - 1;
  const int nd = g.n() - kp;
  khess::GridField f = khess::GridField::from_function(g, [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& md : modes) {
      double arg = md.phase;
      for (int a = 0; a < kp; ++a) arg += md.l[static_cast<std::size_t>(a)] * x(a);
      double t = md.amp * std::cos(arg);
      for (int a = 0; a < nd; ++a) t *= sine_mode(x(kp + a), md.m[static_cast<std::size_t>(a)], g.delta0());
      v += t;
    }
    return v;
  });
  f.zero_boundary();
  return f;
}

// Narrow-band fields: a dominant mode at frequency f along one of three
// directions (periodic, Dirichlet, diagonal), frequencies geometric in
// [1, max_freq], plus a weak random companion mode.
inline std::vector<khess::GridField> smoothing_battery(const khess::GridSpec& g, int count,
                                                       unsigned seed, int max_freq) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  const int kp = g.k() - 1;
  const int nd = g.n() - kp;
  const int levels = (count + 2) / 3;
  std::vector<khess::GridField> out;
  for (int i = 0; i < count; ++i) {
    const int dir = i % 3;
    const int level = i / 3;
    const double f = std::pow(static_cast<double>(max_freq), static_cast<double>(level) / std::max(1, levels - 1));
    Mode main;
    main.l.assign(static_cast<std::size_t>(kp), 0);
    main.m.assign(static_cast<std::size_t>(nd), 1);
    const int fi = std::max(1, static_cast<int>(std::lround(f)));
    const int fd = std::max(1, static_cast<int>(std::lround(f / std::sqrt(2.0))));
    if (dir == 0) main.l[0] = fi;
    if (dir == 1) main.m[0] = fi;
    if (dir == 2) {
      main.l[0] = fd;
      main.m[0] = fd;
    }
    main.phase = M_PI * u(rng);
    Mode side;
    side.l.assign(static_cast<std::size_t>(kp), 0);
    side.m.assign(static_cast<std::size_t>(nd), 1);
    for (auto& v : side.l) v = static_cast<int>(std::lround(std::abs(u(rng)) * fi));
    for (auto& v : side.m) v = 1 + static_cast<int>(std::lround(std::abs(u(rng)) * fi));
    side.amp = 0.1 * u(rng);
    side.phase = M_PI * u(rng);
    out.push_back(from_modes(g, {main, side}));
  }
  return out;
}

}  // namespace battery
