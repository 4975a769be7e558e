#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "khess/approx.hpp"
#include "khess/errors.hpp"
#include "khess/symfun.hpp"
#include "models.hpp"

using namespace khess;

namespace {

// Closed-form P^1 for K = K^1.
double p1_oracle(const ProblemSpec& s, const Eigen::VectorXd& y) {
  const int n = s.n(), k = s.k();
  double p = 0.0;
  for (int i = k - 1; i < n; ++i)
    p += (s.c(i + 1) / s.sigma_tau() - 4.0 * s.alpha() * (n - k)) / 12.0 * std::pow(y(i), 4);
  for (int i = k - 1; i < n; ++i)
    for (int j = k - 1; j < n; ++j)
      if (i != j) p += s.alpha() * y(i) * y(i) * y(j) * y(j);
  return p;
}

Eigen::VectorXd random_point(const ProblemSpec& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  const Eigen::VectorXd hw = s.half_widths();
  Eigen::VectorXd y(s.n());
  for (int i = 0; i < s.n(); ++i) y(i) = hw(i) * u(rng);
  return y;
}

}  // namespace

TEST_CASE("choose_alpha examples") {
  CHECK(choose_alpha(2, 2, {1.0}, {0.8}) == doctest::Approx(0.8 / 16.0));
  CHECK(choose_alpha(2, 2, {1.0}, {1.6}) == doctest::Approx(2.0 * choose_alpha(2, 2, {1.0}, {0.8})));
  // k = n: min c / (8 sigma_{n-1}(tau)), halved
  CHECK(choose_alpha(3, 3, {2.0, 1.0}, {0.7}) == doctest::Approx(0.5 * 0.7 / (8.0 * 2.0)));
  // (n,k) = (4,2): denominator 16*4 + 4*3
  CHECK(choose_alpha(4, 2, {1.5}, {1.0, 0.5, 2.0}) == doctest::Approx(0.5 * (0.5 / 3.0) / 76.0));
  const double a = choose_alpha(4, 2, {1.5}, {1.0, 0.5, 2.0});
  CHECK(a < alpha_upper_bound(4, 2, {1.5}, {1.0, 0.5, 2.0}));
  CHECK(a > 0.0);
}

TEST_CASE("ProblemSpec invariants") {
  CHECK_THROWS_AS(ProblemSpec::create(3, 3, {1.0, 2.0}, {1.0}, 0.1, 0.5), ConfigError);
  CHECK_THROWS_AS(ProblemSpec::create(2, 2, {1.0}, {1.0}, 0.6, 0.5), ConfigError);
  CHECK_THROWS_AS(ProblemSpec::create(2, 2, {1.0}, {-1.0}, 0.1, 0.5), ConfigError);
  CHECK_THROWS_AS(ProblemSpec::create(2, 2, {1.0}, {1.0}, 0.1, 0.5, 1.0), ConfigError);
  CHECK_NOTHROW(ProblemSpec::create(2, 2, {1.0}, {1.0}, 0.1, 0.5, 0.1));
  try {
    ProblemSpec::create(2, 2, {1.0}, {1.0}, 0.1, 0.5, 0.2);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("16(n-k)^2+4(n-k+1)") != std::string::npos);
  }
}

TEST_CASE("Polynomial text round trip and derivatives") {
  std::istringstream in("# K model\n1.0 0 2\n0.1 0 3  # cubic\n\n0.05 1 2\n");
  const Polynomial p = Polynomial::parse(in);
  CHECK(p.dim() == 2);
  CHECK(p.terms().size() == 3);
  std::istringstream again(p.to_text());
  const Polynomial q = Polynomial::parse(again);
  Eigen::Vector2d y(0.3, -0.7);
  CHECK(q.eval(y) == doctest::Approx(p.eval(y)));
  CHECK(p.eval(y) == doctest::Approx(0.49 + 0.1 * -0.343 + 0.05 * 0.3 * 0.49));
  const std::vector<int> d12{1, 2};
  // d/dy1 d^2/dy2^2 of 0.05 y1 y2^2 = 0.1
  CHECK(p.partial(d12, y) == doctest::Approx(0.1));
  const std::vector<int> d03{0, 3};
  CHECK(p.partial(d03, y) == doctest::Approx(0.6));
  CHECK(p.derivative(d03).eval(y) == doctest::Approx(0.6));
  std::istringstream bad("1.0 0 2\n2.0 1\n");
  CHECK_THROWS_AS(Polynomial::parse(bad), ConfigError);
}

TEST_CASE("KModel curvatures and structural checks") {
  const KModel km = models::cubic_3d(1.0, 0.8);
  const auto c = km.curvatures(2);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(0.8));
  CHECK_THROWS_AS(km.curvatures(3), ModelError);
  const KModel bad = KModel::from_polynomial(Polynomial(2, {{1.0, {0, 2}}, {-5.0, {0, 3}}}));
  CHECK_THROWS_AS(bad.validate(2, Eigen::Vector2d(0.1, 0.5)), ModelError);
  const KModel quartic = KModel::from_polynomial(Polynomial(2, {{1.0, {0, 2}}, {1.0, {4, 0}}}));
  CHECK_THROWS_AS(quartic.validate(2, Eigen::Vector2d(0.1, 0.1)), ModelError);
  CHECK_NOTHROW(models::rich_2d().validate(2, Eigen::Vector2d(0.03, 0.005)));
}

TEST_CASE("KModel finite-difference fallback") {
  const KModel exact = models::rich_2d();
  const KModel fd = KModel::from_function(2, [&](const Eigen::VectorXd& y) { return exact.value(y); });
  CHECK_FALSE(fd.exact_derivatives());
  CHECK(exact.exact_derivatives());
  const Eigen::Vector2d y(0.2, -0.1);
  CHECK((fd.hessian(y) - exact.hessian(y)).cwiseAbs().maxCoeff() < 1e-5);
  const std::vector<int> a{0, 4};
  CHECK(std::abs(fd.partial(a, y) - exact.partial(a, y)) < 1e-2);
}

TEST_CASE("cutoff profile") {
  const Cutoff chi;
  CHECK(chi.radial(0.0)[0] == 1.0);
  CHECK(chi.radial(M_PI / 2)[0] == 1.0);
  CHECK(chi.radial(M_PI)[0] == 0.0);
  double prev = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double r = M_PI / 2 + (M_PI / 2) * i / 200.0;
    const double v = chi.radial(r)[0];
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  const double h = 1e-5;
  for (double r : {1.7, 2.0, 2.4, 2.9}) {
    const auto d = chi.radial(r);
    const auto p = chi.radial(r + h);
    const auto m = chi.radial(r - h);
    for (int o = 1; o <= 4; ++o) {
      const double fd = (p[static_cast<std::size_t>(o - 1)] - m[static_cast<std::size_t>(o - 1)]) / (2 * h);
      CHECK(std::abs(fd - d[static_cast<std::size_t>(o)]) <= 1e-5 * std::max(1.0, std::abs(d[static_cast<std::size_t>(o)])));
    }
  }
}

TEST_CASE("K~ examples") {
  const KModel km = models::rich_2d();
  const ProblemSpec s = models::spec_for(km, 2, {1.0}, 0.1);
  const KTilde kt = build_ktilde(km, Cutoff(), s);
  const double e2 = 0.01;
  const Eigen::Vector2d out(-M_PI * e2, e2 * 0.3);
  CHECK(kt(out) == doctest::Approx(out(1) * out(1)).epsilon(1e-15));
  const Eigen::Vector2d in(e2 * 1.0, e2 * 0.3);
  CHECK(kt(in) == km.value(in));
  const KModel k1 = models::quadratic(3, 2, {1.0, 0.5});
  const ProblemSpec s3 = models::spec_for(k1, 2, {1.0}, 0.1);
  const KTilde kt3 = build_ktilde(k1, Cutoff(), s3);
  for (const auto& y : sample_omega(s3, 7)) CHECK(kt3(y) == doctest::Approx(k1.value(y)).epsilon(1e-14));
}

TEST_CASE("P for the quadratic model equals the closed form P^1") {
  for (auto [n, k] : {std::pair{2, 2}, {3, 2}, {3, 3}, {4, 3}}) {
    std::vector<double> c;
    for (int j = k; j <= n; ++j) c.push_back(1.0 + 0.3 * (j - k));
    std::vector<double> tau;
    for (int i = 1; i < k; ++i) tau.push_back(2.0 - 0.4 * i);
    const KModel km = models::quadratic(n, k, c);
    const ProblemSpec s = models::spec_for(km, k, tau, 0.1);
    const ApproxSolution a = build_P(km, Cutoff(), s);
    for (const auto& y : sample_omega(s, 5))
      CHECK(a.P(y) == doctest::Approx(p1_oracle(s, y)).epsilon(1e-13).scale(1e-30));
  }
}

TEST_CASE("P for the cubic-perturbed model matches a hand expansion") {
  const KModel km = models::rich_2d(1.0);
  const ProblemSpec s = models::spec_for(km, 2, {1.0}, 0.1);
  const ApproxSolution a = build_P(km, Cutoff(), s);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd y = random_point(s, rng);
    const double chi = a.chi(y);
    const double y1 = y(0), y2 = y(1);
    const double ref = 0.5 * chi * 0.01 * std::pow(y1, 6) * y2 * y2 +
                       chi * 0.1 * y1 * std::pow(y2, 4) / 24.0 + std::pow(y2, 4) / 12.0;
    CHECK(a.P(y) == doctest::Approx(ref).epsilon(1e-13).scale(1e-30));
    // R is a difference of O(y2^2) terms; cancellation limits it to |K| ulps.
    CHECK(std::abs(a.remainder(y) - 0.1 * y2 * y2 * y2) <= 1e-14 * std::abs(km.value(y)) + 1e-300);
  }
}

TEST_CASE("jet derivatives of P match finite differences") {
  const KModel km = models::cubic_3d();
  const ProblemSpec s = models::spec_for(km, 2, {1.0}, 0.3);
  const ApproxSolution a = build_P(km, Cutoff(), s);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd y = random_point(s, rng);
    y(0) = s.epsilon() * s.epsilon() * (1.7 + 1.2 * trial / 20.0);  // inside the cutoff ramp
    const Hd j = a.P_jet(y);
    const double h = 1e-6 * s.epsilon() * s.epsilon();
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd yp = y, ym = y;
      yp(i) += h;
      ym(i) -= h;
      const double gfd = (a.P(yp) - a.P(ym)) / (2 * h);
      CHECK(std::abs(gfd - j.g(i)) <= 1e-6 * (std::abs(j.g(i)) + j.g.cwiseAbs().maxCoeff()));
      const Eigen::VectorXd hfd = (a.grad_P(yp) - a.grad_P(ym)) / (2 * h);
      for (int q = 0; q < 3; ++q)
        CHECK(std::abs(hfd(q) - j.h(i, q)) <= 1e-6 * j.h.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("structure of D^2 P") {
  const KModel km = models::cubic_3d();
  const ProblemSpec s = models::spec_for(km, 2, {1.0}, 0.1);
  const ApproxSolution a = build_P(km, Cutoff(), s);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd y = random_point(s, rng);
    const Eigen::MatrixXd h = a.hess_P(y);
    CHECK(h(1, 2) == doctest::Approx(8.0 * s.alpha() * y(1) * y(2)).epsilon(1e-12).scale(1e-30));
    const double ypp2 = y.tail(2).squaredNorm();
    for (int j = 1; j < 3; ++j) CHECK(h(j, j) >= 4.0 * s.alpha() * ypp2);
    // psi minor block is tau + O(eps^4)
    CHECK(std::abs(a.hess_psi(y)(0, 0) - 1.0) <= 10.0 * std::pow(s.epsilon(), 4));
  }
  // P_jj(y',0) = O(|y'|^4): K(y',0) = 0.01 y1^6 in the 2D rich model
  const KModel rich = models::rich_2d();
  const ApproxSolution b = build_P(rich, Cutoff(), models::spec_for(rich, 2, {1.0}, 0.1));
  for (double r : {1e-3, 5e-3, 1e-2}) {
    const Eigen::Vector2d y(r, 0.0);
    CHECK(std::abs(b.hess_P(y)(1, 1)) <= std::pow(r, 4));
  }
}

TEST_CASE("trace identity") {
  for (auto [n, k] : {std::pair{2, 2}, {3, 2}, {3, 3}, {4, 3}}) {
    std::vector<double> c(static_cast<std::size_t>(n - k + 1), 0.9);
    std::vector<double> tau;
    for (int i = 1; i < k; ++i) tau.push_back(3.0 - i);
    const KModel km = models::quadratic(n, k, c);
    const ApproxSolution a = build_P(km, Cutoff(), models::spec_for(km, k, tau, 0.2));
    const auto rep = verify_trace_identity(a, sample_omega(a.spec(), 7));
    CHECK(rep.relative <= 1e-12);
  }
  for (const KModel& km : {models::rich_2d(), models::cubic_3d()}) {
    const ApproxSolution a = build_P(km, Cutoff(), models::spec_for(km, 2, {1.0}, 0.2));
    const auto rep = verify_trace_identity(a, sample_omega(a.spec(), 11));
    CHECK(rep.relative <= 1e-10);
    // y'' = 0: both sides equal chi K(y',0)
    Eigen::VectorXd y = Eigen::VectorXd::Zero(km.dim());
    y(0) = 0.02;
    const auto r0 = verify_trace_identity(a, {y});
    CHECK(r0.max_error <= 1e-12 * std::max(1e-30, std::abs(a.chi(y) * km.value(y))) + 1e-300);
  }
}

TEST_CASE("diagonal dominance") {
  const KModel k1 = models::quadratic(4, 2, {1.0, 0.7, 1.3});
  const ProblemSpec s = models::spec_for(k1, 2, {1.0}, 0.1);
  const ApproxSolution a = build_P(k1, Cutoff(), s);
  const auto rep = verify_diag_dominance(a, sample_omega(s, 7));
  CHECK(rep.ok);
  CHECK(rep.min_margin >= 0.0);
  CHECK(rep.validity_radius == doctest::Approx(rep.search_radius));
  // strictly positive off y'' = 0
  Eigen::VectorXd y(4);
  y << 0.001, 0.002, -0.001, 0.0015;
  CHECK(dominance_margin_at(a, y) > 0.0);

  const ApproxSolution bad = build_P(k1, Cutoff(), s.with_alpha_unchecked(20.0 * s.alpha_bound()));
  const auto rb = verify_diag_dominance(bad, sample_omega(s, 7));
  CHECK_FALSE(rb.ok);
  CHECK(rb.min_margin < 0.0);
  CHECK(rb.worst_point.size() == 4);
  CHECK(rb.validity_radius < rb.search_radius);

  const KModel rich = models::rich_2d();
  const ApproxSolution r = build_P(rich, Cutoff(), models::spec_for(rich, 2, {1.0}, 0.1));
  const Eigen::Vector2d slice(0.004, 0.0);
  CHECK(dominance_margin_at(r, slice) == doctest::Approx(r.hess_P(slice)(1, 1)));
  CHECK(dominance_margin_at(r, slice) >= 0.0);
}

TEST_CASE("residual of psi scales like eps^8 for K^1 and eps^6 with a cubic term") {
  const GridSpec grid = GridSpec::uniform(2, 2, 32, 32, 0.5);
  const std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
  const KModel k1 = models::quadratic(2, 2, {1.0});
  const auto t1 = residual_psi(build_P(k1, Cutoff(), models::spec_for(k1, 2, {1.0}, 0.25)), grid, eps);
  // K^1 in 2D makes psi exact: S_2 = tau P_22 + P_11 P_22 - P_12^2 with P_11 = P_12 = 0.
  for (double r : t1.residual) CHECK(r <= 1e-15);
  const KModel k3 = models::quadratic(3, 2, {1.0, 0.6});
  const auto t3 = residual_psi(build_P(k3, Cutoff(), models::spec_for(k3, 2, {1.0}, 0.25)),
                               GridSpec::uniform(3, 2, 16, 16, 0.5), eps);
  CHECK(t3.slope == doctest::Approx(8.0).epsilon(0.05));
  const KModel kc = models::cubic_2d();
  const auto tc = residual_psi(build_P(kc, Cutoff(), models::spec_for(kc, 2, {1.0}, 0.25)), grid, eps);
  CHECK(tc.slope >= 4.5);
  CHECK(tc.slope == doctest::Approx(6.0).epsilon(0.05));
  const auto fine = residual_psi(build_P(kc, Cutoff(), models::spec_for(kc, 2, {1.0}, 0.25)),
                                 GridSpec::uniform(2, 2, 64, 64, 0.5), {0.1});
  const auto coarse = residual_psi(build_P(kc, Cutoff(), models::spec_for(kc, 2, {1.0}, 0.25)), grid, {0.1});
  CHECK(fine.residual[0] == doctest::Approx(coarse.residual[0]).epsilon(1e-3));
  CHECK_THROWS_AS(residual_psi(build_P(kc, Cutoff(), models::spec_for(kc, 2, {1.0}, 0.25)), grid, {0.1, 0.2}),
                  DomainError);
}
