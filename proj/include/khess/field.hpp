#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "khess/grid.hpp"

namespace khess {

/// Derivative of the given order (1 or 2) along one axis: spectral on
/// periodic axes, fourth-order finite differences on Dirichlet axes with
/// one-sided stencils at the faces.
GridField derivative(const GridField& f, int axis, int order);

/// Mixed partial derivative, multi-index gamma (counts per axis).
GridField partial(const GridField& f, const std::vector<int>& gamma);

/// Largest admissible s for sobolev_norm on this grid.
int sobolev_cap(const GridSpec& grid);

/// Mixed Fourier-Sobolev norm
///   ||f||_s^2 = sum_{t+j<=s} sum_l (1+|l|^2)^t ||a_l||^2_{H^j(Q_delta0)}
/// where f = sum_l a_l(x'') exp(i l.x').
double sobolev_norm(const GridField& f, int s);

/// Max over the grid of |D^gamma f| for |gamma| <= r.
double cnorm(const GridField& f, int r);
constexpr int kCnormCap = 6;

/// phi = 1 on [0,1], 0 on [2,inf), smooth monotone transition.
double smoothing_symbol(double x);

struct SmoothingParams {
  double t = 1.0;
};

/// S(t): multiplier phi(|l|/t) phi(|m|/t) on Fourier modes l (periodic axes)
/// and sine modes m (Dirichlet axes). Face values of the result are zero.
GridField smooth(const GridField& f, SmoothingParams params);
inline GridField smooth(const GridField& f, double t) { return smooth(f, SmoothingParams{t}); }

/// Largest frequency magnitude representable on the grid; smooth() with
/// t >= this value acts as the identity on fields vanishing on the faces.
double max_frequency(const GridSpec& grid);

/// Measured constants of the three smoothing inequalities on a battery:
///   bounded:     ||S u||_{s1} <= C ||u||_{s2},                      s1 <= s2
///   growth:      ||S u||_{s1} <= C t^{s1-s2} ||u||_{s2},            s1 >= s2
///   approximate: ||S u - u||_{s1} <= C t^{s1-s2} ||u||_{s2},        s1 <= s2
struct SmoothingConstants {
  std::vector<double> ts;
  /// key (s1, s2) -> constant per t
  std::map<std::pair<int, int>, std::vector<double>> bounded;
  std::map<std::pair<int, int>, std::vector<double>> growth;
  std::map<std::pair<int, int>, std::vector<double>> approximate;

  /// max over all (s1, s2) and families of max_t C / min_t C.
  double worst_spread() const;
};

SmoothingConstants measure_smoothing_constants(const std::vector<GridField>& battery,
                                               const std::vector<double>& ts, int s_max);

// Snapshot I/O: structured text header followed by little-endian float64 data.
void write_snapshot(const GridField& f, const std::string& path, const std::string& name = "field");
GridField read_snapshot(const std::string& path, std::string* name = nullptr);

/// CSV of a 1D or 2D slice. free_axes lists the axes that vary (1 or 2);
/// fixed gives the node index for every other axis.
void write_slice_csv(const GridField& f, const std::string& path, const std::vector<int>& free_axes,
                     const std::vector<int>& fixed);

}  // namespace khess
