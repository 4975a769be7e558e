#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "battery.hpp"
#include "khess/errors.hpp"
#include "khess/field.hpp"

using namespace khess;

namespace {

double max_err(const GridField& a, const std::function<double(const Eigen::VectorXd&)>& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - f(a.grid().point(i))));
  return m;
}

// roll by one node along periodic axis 0
GridField roll(const GridField& f) {
  const GridSpec& g = f.grid();
  GridField out(g);
  std::vector<int> idx;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.unravel(i, idx);
    idx[0] = (idx[0] + 1) % g.points(0);
    out[g.ravel(idx)] = f[i];
  }
  return out;
}

}  // namespace

TEST_CASE("GridSpec layout") {
  const GridSpec g = GridSpec::uniform(3, 2, 16, 8, 0.5);
  CHECK(g.size() == 16u * 9u * 9u);
  CHECK(g.coord(0, 0) == doctest::Approx(-M_PI));
  CHECK(g.coord(1, 0) == doctest::Approx(-0.5));
  CHECK(g.coord(1, 8) == doctest::Approx(0.5));
  CHECK(g.coord(2, g.center(2)) == 0.0);
  std::vector<int> idx;
  g.unravel(777, idx);
  CHECK(g.ravel(idx) == 777u);
  CHECK_THROWS_AS(GridSpec::uniform(2, 2, 15, 8, 0.5), ConfigError);
  CHECK_THROWS_AS(GridSpec::uniform(2, 2, 16, 6, 0.5), ConfigError);
  CHECK_THROWS_AS(GridSpec(2, 2, {4096}, {4096}, 0.5, 1000), ConfigError);
}

TEST_CASE("derivative examples") {
  const GridSpec g = GridSpec::uniform(2, 2, 16, 32, 0.5);
  const auto f = GridField::from_function(g, [](const Eigen::VectorXd& x) { return std::sin(x(0)); });
  CHECK(max_err(derivative(f, 0, 1), [](const Eigen::VectorXd& x) { return std::cos(x(0)); }) <= 1e-10);
  CHECK(max_err(derivative(f, 0, 2), [](const Eigen::VectorXd& x) { return -std::sin(x(0)); }) <= 1e-10);
  const auto q = GridField::from_function(g, [](const Eigen::VectorXd& x) { return x(1) * x(1); });
  CHECK(max_err(derivative(q, 1, 2), [](const Eigen::VectorXd&) { return 2.0; }) <= 1e-8);
  const auto p = GridField::from_function(g, [](const Eigen::VectorXd& x) { return std::sin(x(0)) * x(1) * x(1); });
  const auto mixed = derivative(derivative(p, 0, 1), 1, 1);
  CHECK(max_err(mixed, [](const Eigen::VectorXd& x) { return 2.0 * std::cos(x(0)) * x(1); }) <= 1e-6);
  CHECK_THROWS_AS(derivative(f, 0, 3), DomainError);
  CHECK_THROWS_AS(derivative(f, 2, 1), DomainError);
}

TEST_CASE("fourth-order convergence on Dirichlet axes") {
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    const GridSpec g = GridSpec::uniform(2, 2, 8, n, 0.5);
    const auto f = GridField::from_function(g, [](const Eigen::VectorXd& x) { return std::exp(2 * x(1)); });
    const double e = max_err(derivative(f, 1, 2), [](const Eigen::VectorXd& x) { return 4 * std::exp(2 * x(1)); });
    if (prev > 0.0) CHECK(std::log2(prev / e) > 3.5);
    prev = e;
  }
}

TEST_CASE("sobolev_norm examples") {
  const GridSpec g = GridSpec::uniform(2, 2, 16, 32, 0.5);
  CHECK(sobolev_norm(GridField(g), 3) == 0.0);
  const auto c = GridField::from_function(g, [](const Eigen::VectorXd& x) { return std::cos(x(0)); });
  const double vol = 1.0;  // |Q_delta0| = 2 delta0
  for (int s = 0; s <= 4; ++s) {
    double ref = 0.0;
    for (int t = 0; t <= s; ++t) ref += (s - t + 1) * std::pow(2.0, t);
    ref *= vol / 2.0;
    CHECK(sobolev_norm(c, s) == doctest::Approx(std::sqrt(ref)).epsilon(1e-12));
  }
  const auto b = battery::smoothing_battery(g, 6, 3, 8);
  for (const auto& f : b) {
    double prev = 0.0;
    for (int s = 0; s <= 4; ++s) {
      const double v = sobolev_norm(f, s);
      CHECK(v >= prev);
      CHECK(v > 0.0);
      prev = v;
    }
  }
  CHECK_THROWS_AS(sobolev_norm(c, sobolev_cap(g) + 1), DomainError);
  CHECK_THROWS_AS(sobolev_norm(c, -1), DomainError);
}

TEST_CASE("sobolev_norm Dirichlet part by hand") {
    const double d = 0.5;
  const GridSpec g = GridSpec::uniform(2, 2, 8, 256, d);
  const auto f = GridField::from_function(g, [&](const Eigen::VectorXd& x) { return battery::sine_mode(x(1), 1, d); });
  const double k = M_PI / (2 * d);
  // only the l = 0 mode: weight 3 on the L2 energy, 1 on the derivative energy
  const double l2 = d, d2 = k * k * d;
  CHECK(sobolev_norm(f, 1) == doctest::Approx(std::sqrt(3 * l2 + d2)).epsilon(1e-6));
}

TEST_CASE("cnorm examples") {
  const GridSpec g = GridSpec::uniform(2, 2, 32, 32, 0.5);
  CHECK(cnorm(GridField::from_function(g, [](const Eigen::VectorXd&) { return 1.0; }), 3) == doctest::Approx(1.0));
  CHECK(cnorm(GridField(g), 4) == 0.0);
  const auto s = GridField::from_function(g, [](const Eigen::VectorXd& x) { return -2.5 * std::sin(x(0)); });
  for (int r = 0; r <= 4; ++r) CHECK(cnorm(s, r) == doctest::Approx(2.5).epsilon(1e-10));
  CHECK_THROWS_AS(cnorm(s, kCnormCap + 1), DomainError);
}

TEST_CASE("smoothing symbol") {
  CHECK(smoothing_symbol(0.0) == 1.0);
  CHECK(smoothing_symbol(1.0) == 1.0);
  CHECK(smoothing_symbol(2.0) == 0.0);
  double prev = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = smoothing_symbol(1.0 + i / 100.0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("smooth examples") {
  const GridSpec g = GridSpec::uniform(2, 2, 32, 32, 0.5);
  const auto low = battery::from_modes(g, {{{2}, {3}, 1.0, 0.3}, {{1}, {1}, -0.5, 1.1}});
  const auto s = smooth(low, 4.0);
  CHECK((s - low).max_abs() <= 1e-12);
  const auto high = battery::from_modes(g, {{{16}, {1}, 1.0, 0.0}});
  CHECK(smooth(high, 4.0).max_abs() <= 1e-12);
  const auto highm = battery::from_modes(g, {{{0}, {20}, 1.0, 0.0}});
  CHECK(smooth(highm, 4.0).max_abs() <= 1e-12);
  const auto mixed = battery::smoothing_battery(g, 3, 5, 16)[2];
  CHECK((smooth(mixed, max_frequency(g)) - mixed).max_abs() <= 1e-12);
  CHECK(smooth(mixed, 3.0).boundary_max_abs() == 0.0);
  CHECK_THROWS_AS(smooth(mixed, 0.5), DomainError);
}

TEST_CASE("periodic wrap consistency") {
  const GridSpec g = GridSpec::uniform(3, 2, 16, 8, 0.5);
  const auto f = battery::smoothing_battery(g, 2, 9, 4)[1];
  CHECK((smooth(roll(f), 3.0) - roll(smooth(f, 3.0))).max_abs() <= 1e-13);
  CHECK((derivative(roll(f), 0, 1) - roll(derivative(f, 0, 1))).max_abs() <= 1e-12);
  CHECK((derivative(roll(f), 2, 2) - roll(derivative(f, 2, 2))).max_abs() == 0.0);
}

TEST_CASE("smoothing constants on a small battery") {
  const GridSpec g = GridSpec::uniform(2, 2, 64, 64, M_PI / 2);
  const auto b = battery::smoothing_battery(g, 18, 7, 16);
  const auto c = measure_smoothing_constants(b, {2, 4, 8}, 2);
  CHECK(c.bounded.at({0, 2}).size() == 3);
  CHECK(c.worst_spread() < 2.0);
  for (const auto& [key, v] : c.bounded)
    for (double x : v) CHECK(x <= 1.0 + 1e-12);
}

TEST_CASE("snapshot and CSV round trip") {
  const GridSpec g(3, 2, {8}, {8, 10}, 0.25);
  const auto f = battery::smoothing_battery(g, 1, 2, 3)[0];
  const auto dir = std::filesystem::temp_directory_path() / "khess_field_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "f.field").string();
  write_snapshot(f, path, "w");
  std::string name;
  const GridField r = read_snapshot(path, &name);
  CHECK(name == "w");
  CHECK(r.grid() == g);
  CHECK(r.values() == f.values());
  std::ofstream(dir / "bad.field") << "nope\n";
  CHECK_THROWS_AS(read_snapshot((dir / "bad.field").string()), ConfigError);
  const auto csv = (dir / "s.csv").string();
  write_slice_csv(f, csv, {0, 2}, {0, 4, 0});
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1,x3,value");
  int rows = 0;
  for (std::string l; std::getline(in, l);) ++rows;
  CHECK(rows == 8 * 11);
}
