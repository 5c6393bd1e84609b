#include <doctest.h>

#include <cmath>
#include <vector>

#include "qecdm/analysis.hpp"

using namespace qecdm;

TEST_CASE("exact-form series roundtrip") {
  for (double g : {1e-3, 3e-2, 0.1}) {
    auto s = synthetic_series(g, 2.5, 10);
    CHECK_NOTHROW(s.validate());
    auto f = fit_crash_rate(s);
    CHECK(std::abs(f.gamma_n - g) < 1e-9 * std::max(1.0, g));
    CHECK(f.residual < 1e-12);
    CHECK(std::abs(f.gamma_t - f.gamma_n / 2.5) < 1e-12);
    // fixed point
    auto again = fit_crash_rate(synthetic_series(f.gamma_n, 2.5, 10));
    CHECK(std::abs(again.gamma_n - f.gamma_n) < 1e-9);
  }
}

TEST_CASE("all-zero series fits zero") {
  auto f = fit_crash_rate(synthetic_series(0.0, 1.0, 5));
  CHECK(f.gamma_n == 0.0);
  CHECK(f.gamma_t == 0.0);
}

TEST_CASE("bare-qubit series gives the noise rate") {
  ExperimentDescriptor d;
  d.options.n_steps = 10;
  auto s = bare_series(d, 0.01);
  CHECK(s.tau == 1.0);
  auto f = fit_crash_rate(s);
  CHECK(std::abs(f.gamma_t - 0.01) < 1e-6);

  d.kind = ExperimentKind::LogicalX;
  auto g = fit_crash_rate(bare_series(d, 1e-3));
  CHECK(g.gamma_n == doctest::Approx(1e-3 * kPi / 2).epsilon(1e-6));
}

TEST_CASE("doubling tau halves gamma_t and keeps gamma_n") {
  auto a = synthetic_series(2e-3, 3.0, 6);
  auto b = a;
  b.tau *= 2.0;
  for (auto& x : b.samples) x.t *= 2.0;
  auto fa = fit_crash_rate(a);
  auto fb = fit_crash_rate(b);
  CHECK(fb.gamma_n == fa.gamma_n);
  CHECK(fb.gamma_t == doctest::Approx(fa.gamma_t / 2.0).epsilon(1e-15));
}

TEST_CASE("fit preconditions") {
  auto s = synthetic_series(1e-2, 1.0, 2);
  CHECK_THROWS_AS(fit_crash_rate(s), std::invalid_argument);
  s.early_stopped = true;
  CHECK_NOTHROW(fit_crash_rate(s));

  auto big = synthetic_series(1e-2, 1.0, 4);
  big.samples[2].p = 0.5;
  CHECK_THROWS_AS(fit_crash_rate(big), BeyondThreshold);

  auto bumpy = synthetic_series(1e-2, 1.0, 4);
  bumpy.samples[2].p = bumpy.samples[1].p - 1e-3;
  CHECK_THROWS_AS(fit_crash_rate(bumpy), std::runtime_error);

  auto bad_t = synthetic_series(1e-2, 1.0, 4);
  bad_t.samples[1].t += 1e-3;
  CHECK_THROWS(bad_t.validate());
}

TEST_CASE("synthetic crossing at 1/c") {
  for (double c : {50.0, 120.0, 1000.0}) {
    auto grid = log_grid(1e-4, 1e-1, 9);
    auto enc = [c](double g) { return c * g * g; };
    auto bare = [](double g) { return g; };
    auto r = threshold_scan(enc, bare, grid, false);
    CHECK(r.gamma_star == doctest::Approx(1.0 / c).epsilon(1e-10));
    auto rr = threshold_scan(enc, bare, grid, true);
    CHECK(rr.gamma_star == doctest::Approx(1.0 / c).epsilon(1e-10));
    CHECK(rr.bracket.second / rr.bracket.first <= 1.01);
    // bracket invariant
    CHECK(enc(rr.bracket.first) < bare(rr.bracket.first));
    CHECK(enc(rr.bracket.second) >= bare(rr.bracket.second));
  }
}

TEST_CASE("grid checks and missing crossings") {
  auto enc = [](double g) { return 10.0 * g * g; };
  auto bare = [](double g) { return g; };
  CHECK_THROWS(threshold_scan(enc, bare, log_grid(1e-3, 1e-2, 4), false));
  CHECK_THROWS(threshold_scan(enc, bare, log_grid(1e-3, 5e-3, 6), false));
  CHECK_THROWS_AS(threshold_scan(enc, bare, log_grid(1e-4, 1e-2, 6), false), NoCrossing);
  try {
    threshold_scan(enc, bare, log_grid(1e-4, 1e-2, 6), false);
  } catch (const NoCrossing& e) {
    CHECK(std::string(e.what()) == "no crossing bracketed");
  }
  auto g = log_grid(3e-3, 1e-1, 8);
  CHECK(g.front() == 3e-3);
  CHECK(g.back() == 1e-1);
  CHECK(g.size() == 8);
  CHECK(g[1] / g[0] == doctest::Approx(g[7] / g[6]));
}

TEST_CASE("an infinite encoded rate above threshold still brackets") {
  std::vector<CurvePoint> curve{{1e-3, 1e-4, 1e-3}, {1e-2, 5e-3, 1e-2}, {1e-1, INFINITY, 1e-1}};
  auto r = find_crossing(curve);
  CHECK(r.bracket.first == 1e-2);
  CHECK(r.bracket.second == 1e-1);
  CHECK(r.gamma_star > 1e-2);
  CHECK(r.gamma_star < 1e-1);
}

TEST_CASE("bit-flip memory points and bath comparison at zero noise") {
  ExperimentDescriptor d;
  d.options.n_steps = 3;
  auto zero = compare_baths(d, {0.0});
  REQUIRE(zero.distinct.size() == 1);
  CHECK(zero.distinct[0].fit.gamma_n == 0.0);
  CHECK(zero.collective[0].fit.gamma_n == 0.0);

  auto p = evaluate_point(d, 3e-3);
  CHECK(p.ok);
  CHECK(p.ratio() < 1.0);
  CHECK(p.encoded_rate() == doctest::Approx(p.fit.gamma_t));
}

TEST_CASE("grid evaluation is order-stable across worker counts") {
  ExperimentDescriptor d;
  d.options.n_steps = 3;
  const std::vector<double> grid{1e-3, 3e-3, 1e-2, 3e-2};
  auto a = evaluate_grid(d, grid);
  d.workers = 3;
  auto b = evaluate_grid(d, grid);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gamma == b[i].gamma);
    CHECK(a[i].fit.gamma_n == b[i].fit.gamma_n);
    CHECK(a[i].series.samples.size() == b[i].series.samples.size());
  }
}

TEST_CASE("far above threshold") {
  ExperimentDescriptor d;
  d.options.n_steps = 5;
  auto p = evaluate_point(d, 3e-2);
  CHECK(p.ok);
  CHECK(p.ratio() > 1.0);
  auto q = evaluate_point(d, 0.3);
  CHECK(q.series.early_stopped);
  CHECK(q.series.samples.size() < 5);

  PointResult failed;
  failed.ok = false;
  failed.bare_fit.gamma_t = 0.1;
  CHECK(std::isinf(failed.ratio()));
}

TEST_CASE("noise axes") {
  auto x = noise_for(NoiseAxis::X, 0.1, Bath::Distinct);
  CHECK(x.gamma0 == 0.0);
  CHECK(x.gamma1 == 0.1);
  auto b = noise_for(NoiseAxis::Both, 0.1, Bath::Collective);
  CHECK(b.gamma0 == 0.1);
  CHECK(b.gamma1 == 0.1);
  CHECK(noise_axis_from_string("z") == NoiseAxis::Z);
  CHECK_THROWS(noise_axis_from_string("y"));
  CHECK(experiment_from_string("logical-x") == ExperimentKind::LogicalX);
}
