#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "khess/nashmoser.hpp"
#include "models.hpp"

using namespace khess;

TEST_CASE("d_m stays below N/2 once it gets there") {
  const KModel km = models::cubic_2d();
  const ProblemSpec spec = models::spec_for(km, 2, {1.0}, 0.1);
  const ApproxSolution ap = build_P(km, Cutoff(), spec);
  NashMoserParams p = NashMoserParams::practical(2, 2);
  p.stop_tol = 1e-10;
  const IterationState s = NashMoser(ap, GridSpec::uniform(2, 2, 64, 64, spec.delta0()), p).run();
  REQUIRE(s.trace.status == RunStatus::converged);
  const double half_n = 0.5 * s.trace.N_proxy;
  bool below = false;
  for (const TraceRow& r : s.trace.rows) {
    INFO("m = " << r.m << ", d_m = " << r.d_m << ", N/2 = " << half_n);
    if (below) CHECK(r.d_m < half_n);
    below = below || r.d_m < half_n;
  }
  CHECK(below);
}
