#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

namespace khess {

/// Tensor grid on [-pi,pi)^(k-1) x [-delta0,delta0]^(n-k+1).
/// Axes 0..k-2 are periodic with N' nodes; axes k-1..n-1 are Dirichlet with
/// N'' intervals (N''+1 nodes including both faces). Storage is row-major,
/// last axis fastest.
class GridSpec {
 public:
  static constexpr std::size_t kDefaultBudget = 4'000'000;

  GridSpec() = default;
  GridSpec(int n, int k, std::vector<int> periodic, std::vector<int> dirichlet, double delta0,
           std::size_t budget = kDefaultBudget);
  static GridSpec uniform(int n, int k, int periodic, int dirichlet, double delta0);

  int n() const { return n_; }
  int k() const { return k_; }
  double delta0() const { return delta0_; }
  bool is_periodic(int axis) const { return axis < k_ - 1; }
  /// N' for periodic axes, N'' for Dirichlet axes.
  int intervals(int axis) const { return intervals_[static_cast<std::size_t>(axis)]; }
  int points(int axis) const { return points_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const;
  double coord(int axis, int j) const;
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  void unravel(std::size_t id, std::vector<int>& idx) const;
  std::size_t ravel(const std::vector<int>& idx) const;
  Eigen::VectorXd point(std::size_t id) const;
  bool on_boundary(std::size_t id) const;
  /// Index of x''_a = 0 on a Dirichlet axis.
  int center(int axis) const { return intervals(axis) / 2; }
  double cell_volume() const;

  bool operator==(const GridSpec& o) const;

 private:
  int n_ = 0;
  int k_ = 0;
  double delta0_ = 0.0;
  std::vector<int> intervals_;
  std::vector<int> points_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Real field on a GridSpec.
class GridField {
 public:
  GridField() = default;
  explicit GridField(GridSpec grid);
  GridField(GridSpec grid, std::vector<double> values);
  static GridField from_function(const GridSpec& grid,
                                 const std::function<double(const Eigen::VectorXd&)>& f);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double max_abs() const;
  double max_abs_interior() const;
  bool all_finite() const;
  /// Max |value| over nodes on Dirichlet faces.
  double boundary_max_abs() const;
  void zero_boundary();

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double s);

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double s, GridField a);

}  // namespace khess
