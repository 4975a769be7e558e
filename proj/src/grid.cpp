#include "khess/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "khess/errors.hpp"

namespace khess {

GridSpec::GridSpec(int n, int k, std::vector<int> periodic, std::vector<int> dirichlet,
                   double delta0, std::size_t budget)
    : n_(n), k_(k), delta0_(delta0) {
  if (n < 2 || k < 2 || k > n) throw ConfigError("grid requires 2 <= k <= n");
  if (static_cast<int>(periodic.size()) != k - 1)
    throw ConfigError("grid needs " + std::to_string(k - 1) + " periodic resolutions");
  if (static_cast<int>(dirichlet.size()) != n - k + 1)
    throw ConfigError("grid needs " + std::to_string(n - k + 1) + " Dirichlet resolutions");
  if (!(delta0 > 0.0)) throw ConfigError("delta0 must be positive");
  for (int p : periodic)
    if (p < 4 || p % 2 != 0) throw ConfigError("periodic resolution must be even and >= 4");
  for (int d : dirichlet)
    if (d < 8 || d % 2 != 0) throw ConfigError("Dirichlet resolution must be even and >= 8");
  intervals_ = periodic;
  intervals_.insert(intervals_.end(), dirichlet.begin(), dirichlet.end());
  points_.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    points_[static_cast<std::size_t>(a)] = is_periodic(a) ? intervals(a) : intervals(a) + 1;
  strides_.assign(static_cast<std::size_t>(n), 1);
  double total = 1.0;
  for (int a = n - 1; a >= 0; --a) {
    if (a < n - 1)
      strides_[static_cast<std::size_t>(a)] =
          strides_[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(points(a + 1));
    total *= points(a);
  }
  if (total > static_cast<double>(budget))
    throw ConfigError("grid has " + std::to_string(static_cast<long long>(total)) +
                      " points, budget is " + std::to_string(budget));
  size_ = static_cast<std::size_t>(total);
}

GridSpec GridSpec::uniform(int n, int k, int periodic, int dirichlet, double delta0) {
  return GridSpec(n, k, std::vector<int>(static_cast<std::size_t>(k - 1), periodic),
                  std::vector<int>(static_cast<std::size_t>(n - k + 1), dirichlet), delta0);
}

double GridSpec::spacing(int axis) const {
  return is_periodic(axis) ? 2.0 * M_PI / intervals(axis) : 2.0 * delta0_ / intervals(axis);
}

double GridSpec::coord(int axis, int j) const {
  if (is_periodic(axis)) return -M_PI + spacing(axis) * j;
  if (j == center(axis)) return 0.0;
  return -delta0_ + spacing(axis) * j;
}

void GridSpec::unravel(std::size_t id, std::vector<int>& idx) const {
  idx.resize(static_cast<std::size_t>(n_));
  for (int a = n_ - 1; a >= 0; --a) {
    const auto p = static_cast<std::size_t>(points(a));
    idx[static_cast<std::size_t>(a)] = static_cast<int>(id % p);
    id /= p;
  }
}

std::size_t GridSpec::ravel(const std::vector<int>& idx) const {
  std::size_t id = 0;
  for (int a = 0; a < n_; ++a) id += strides_[static_cast<std::size_t>(a)] * static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
  return id;
}

Eigen::VectorXd GridSpec::point(std::size_t id) const {
  Eigen::VectorXd x(n_);
  for (int a = n_ - 1; a >= 0; --a) {
    const auto p = static_cast<std::size_t>(points(a));
    x(a) = coord(a, static_cast<int>(id % p));
    id /= p;
  }
  return x;
}

bool GridSpec::on_boundary(std::size_t id) const {
  for (int a = n_ - 1; a >= 0; --a) {
    const auto p = static_cast<std::size_t>(points(a));
    const auto j = static_cast<int>(id % p);
    id /= p;
    if (!is_periodic(a) && (j == 0 || j == intervals(a))) return true;
  }
  return false;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < n_; ++a) v *= spacing(a);
  return v;
}

bool GridSpec::operator==(const GridSpec& o) const {
  return n_ == o.n_ && k_ == o.k_ && delta0_ == o.delta0_ && intervals_ == o.intervals_;
}

GridField::GridField(GridSpec grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}

GridField::GridField(GridSpec grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw DomainError("GridField: value count " + std::to_string(values_.size()) +
                      " does not match grid size " + std::to_string(grid_.size()));
}

GridField GridField::from_function(const GridSpec& grid,
                                   const std::function<double(const Eigen::VectorXd&)>& f) {
  GridField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out.values_[i] = f(grid.point(i));
  return out;
}

double GridField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridField::max_abs_interior() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!grid_.on_boundary(i)) m = std::max(m, std::abs(values_[i]));
  return m;
}

bool GridField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double GridField::boundary_max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (grid_.on_boundary(i)) m = std::max(m, std::abs(values_[i]));
  return m;
}

void GridField::zero_boundary() {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (grid_.on_boundary(i)) values_[i] = 0.0;
}

GridField& GridField::operator+=(const GridField& o) {
  if (!(grid_ == o.grid_)) throw DomainError("GridField: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

GridField& GridField::operator-=(const GridField& o) {
  if (!(grid_ == o.grid_)) throw DomainError("GridField: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

GridField& GridField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double s, GridField a) { return a *= s; }

}  // namespace khess
