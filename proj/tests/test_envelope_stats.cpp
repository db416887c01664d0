#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "hbm/envelope_stats.hpp"
#include "hbm/errors.hpp"
#include "hbm/rate_functions.hpp"
#include "hbm/rng.hpp"
#include "hbm/sde_sim.hpp"

using namespace hbm;

namespace {

SimConfig sim(int d, double horizon, std::uint64_t seed, std::uint64_t n) {
  SimConfig c;
  c.d = d;
  c.horizon = horizon;
  c.step = step_preset("standard");
  c.seed = seed;
  c.path_count = n;
  return c;
}

std::vector<Path> radial_paths(const SimConfig& c) {
  std::vector<Path> out;
  for (auto& p : simulate_radial(c)) out.push_back(std::move(p.radial));
  return out;
}

EnvelopeOptions no_refine() {
  EnvelopeOptions o;
  o.refine_near_misses = false;
  return o;
}

Path deterministic(PathKind kind, double horizon, double slope) {
  auto grid = std::make_shared<const TimeGrid>(
      TimeGrid::build(horizon, step_preset("standard")));
  std::vector<double> v(grid->size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = slope * (*grid)[k];
  return Path{grid, std::move(v), kind, 0};
}

}  // namespace

TEST_CASE("Wilson interval reference values") {
  // Reference values from the closed-form score interval at z = 1.96.
  auto ci = wilson_interval(5, 10);
  CHECK(ci.lo == doctest::Approx(0.2365931).epsilon(1e-6));
  CHECK(ci.hi == doctest::Approx(0.7634069).epsilon(1e-6));
  ci = wilson_interval(0, 10);
  CHECK(ci.lo == 0.0);
  CHECK(ci.hi == doctest::Approx(0.2775328).epsilon(1e-6));
  ci = wilson_interval(10, 10);
  CHECK(ci.lo == doctest::Approx(0.7224672).epsilon(1e-6));
  CHECK(ci.hi == 1.0);
  ci = wilson_interval(0, 0);
  CHECK(ci.lo == 0.0);
  CHECK(ci.hi == 1.0);
}

TEST_CASE("Wilson interval coverage") {
  std::mt19937_64 gen(99);
  for (double p : {0.05, 0.3, 0.5, 0.9}) {
    std::binomial_distribution<std::size_t> draw(200, p);
    int covered = 0;
    for (int rep = 0; rep < 1000; ++rep) {
      const auto ci = wilson_interval(draw(gen), 200);
      covered += ci.lo <= p && p <= ci.hi;
    }
    INFO("p=" << p << " covered=" << covered);
    CHECK(covered >= 930);
  }
}

TEST_CASE("window and path-kind errors") {
  const auto paths = radial_paths(sim(3, 60.0, 1, 4));
  const auto spec = RateFunctionSpec::sqrt_loglog(2.0);
  CHECK_THROWS_AS(upper_containment(paths, spec, 3, {10.0, 50.0}),
                  PreconditionError);
  CHECK_THROWS_AS(upper_containment(paths, spec, 3, {70.0, 80.0}),
                  PreconditionError);
  CHECK_THROWS_AS(upper_containment(paths, spec, 3, {50.0, 40.0}),
                  PreconditionError);
  CHECK_THROWS_AS(bm_kolmogorov_check(paths, spec, {20.0, 50.0},
                                      BmMode::TwoSided),
                  PreconditionError);
  const auto bms = simulate_bm1d(sim(3, 60.0, 1, 4));
  CHECK_THROWS_AS(lower_containment(bms, spec, 3, {20.0, 50.0}),
                  PreconditionError);
  CHECK_THROWS_AS(parse_bm_mode("upper"), ConfigError);
}

TEST_CASE("degenerate window checks a single time") {
  const auto c = sim(3, 100.0, 2, 300);
  const auto paths = radial_paths(c);
  const auto spec = RateFunctionSpec::sqrt_loglog(0.5);
  const double t = paths.front().grid->horizon();
  const auto report = upper_containment(paths, spec, 3, {t, t});
  std::size_t below = 0;
  for (const auto& p : paths) below += p.terminal() < rate_upper(spec, 3, t);
  CHECK(report.n_contained == below);
  CHECK(report.n_paths == paths.size());
  for (double v : report.first_violation_times) CHECK(v == t);
}

TEST_CASE("report invariants and JSON record") {
  const auto paths = radial_paths(sim(3, 200.0, 3, 400));
  const auto spec = RateFunctionSpec::sqrt_loglog(0.5);
  const auto r = upper_containment(paths, spec, 3, {50.0, 200.0});
  CHECK(r.n_contained <= r.n_paths);
  CHECK(r.first_violation_times.size() == r.n_paths - r.n_contained);
  CHECK(r.ci.lo >= 0.0);
  CHECK(r.ci.hi <= 1.0);
  CHECK(r.ci.lo <= r.fraction());
  CHECK(r.fraction() <= r.ci.hi);
  for (double t : r.first_violation_times) {
    CHECK(t >= 50.0);
    CHECK(t <= 200.0);
  }
  const nlohmann::json j = r;
  CHECK(j.at("kind") == "upper_containment");
  CHECK(j.at("n_paths") == 400);
  CHECK(j.at("window")[0] == 50.0);
  CHECK(j.at("ci").size() == 2);
  CHECK(j.at("first_violation_times").size() == r.first_violation_times.size());
}

TEST_CASE("containment is monotone in the envelope constant") {
  const auto paths = radial_paths(sim(3, 300.0, 4, 300));
  std::size_t prev_upper = 0;
  std::size_t prev_lower = 0;
  for (double c : {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0}) {
    const auto spec = RateFunctionSpec::sqrt_loglog(c);
    const Window w{50.0, 300.0};
    const auto up = upper_containment(paths, spec, 3, w, no_refine());
    const auto lo = lower_containment(paths, spec, 3, w, no_refine());
    CHECK(up.n_contained >= prev_upper);
    CHECK(lo.n_contained >= prev_lower);
    prev_upper = up.n_contained;
    prev_lower = lo.n_contained;
  }
}

TEST_CASE("extra grid points can only remove contained paths") {
  // Coarse paths are the fine paths sampled at every fourth point.
  auto c = sim(3, 200.0, 5, 300);
  const auto fine = radial_paths(c);
  auto coarse_grid =
      std::make_shared<const TimeGrid>(fine.front().grid->coarsened(4));
  std::vector<Path> coarse;
  for (const auto& p : fine) {
    std::vector<double> v;
    for (std::size_t k = 0; k < p.values.size(); k += 4) v.push_back(p.values[k]);
    if (v.size() < coarse_grid->size()) v.push_back(p.values.back());
    coarse.push_back(Path{coarse_grid, std::move(v), PathKind::Radial, p.path_id});
  }
  for (double cc : {0.5, 1.0, 2.0}) {
    const auto spec = RateFunctionSpec::sqrt_loglog(cc);
    const Window w{50.0, 200.0};
    CHECK(upper_containment(fine, spec, 3, w, no_refine()).n_contained <=
          upper_containment(coarse, spec, 3, w, no_refine()).n_contained);
    CHECK(lower_containment(fine, spec, 3, w, no_refine()).n_contained <=
          lower_containment(coarse, spec, 3, w, no_refine()).n_contained);
    // Near-miss refinement is itself extra points.
    CHECK(upper_containment(fine, spec, 3, w).n_contained <=
          upper_containment(fine, spec, 3, w, no_refine()).n_contained);
  }
}

TEST_CASE("lower containment transfers from the comparison path") {
  const int d = 3;
  auto c = sim(d, 200.0, 6, 200);
  const auto spec = RateFunctionSpec::sqrt_loglog(1.0);
  int transferred = 0;
  for (const auto& p : simulate_radial(c)) {
    auto cmp = comparison_path(p, d);
    cmp.kind = PathKind::Radial;
    const std::vector<Path> one_cmp{cmp};
    const std::vector<Path> one_rad{p.radial};
    const auto a = lower_containment(one_cmp, spec, d, {50.0, 200.0}, no_refine());
    const auto b = lower_containment(one_rad, spec, d, {50.0, 200.0}, no_refine());
    if (a.n_contained == 1) {
      CHECK(b.n_contained == 1);
      ++transferred;
    }
  }
  CHECK(transferred > 0);
}

TEST_CASE("Brownian checks") {
  auto c = sim(2, 2000.0, 7, 500);
  const auto bms = simulate_bm1d(c);
  // An envelope of ten standard deviations is never reached.
  const auto huge = bm_kolmogorov_check(
      bms, RateFunctionSpec::sqrt_loglog(10.0), {50.0, 2000.0}, BmMode::TwoSided);
  CHECK(huge.n_contained == bms.size());
  CHECK(huge.kind == EnvelopeKind::BmTwoSided);

  // Crossings accumulate over nested windows.
  const auto flat = RateFunctionSpec::constant(1.0);
  const auto short_w =
      bm_kolmogorov_check(bms, flat, {50.0, 500.0}, BmMode::Lower);
  const auto long_w =
      bm_kolmogorov_check(bms, flat, {50.0, 2000.0}, BmMode::Lower);
  CHECK(short_w.kind == EnvelopeKind::BmLowerCrossing);
  CHECK(long_w.n_contained >= short_w.n_contained);
  CHECK(long_w.first_violation_times.size() == long_w.n_contained);
  CHECK(long_w.fraction() > 0.3);
}

TEST_CASE("merge sums counts") {
  const auto paths = radial_paths(sim(3, 100.0, 8, 200));
  const auto spec = RateFunctionSpec::sqrt_loglog(0.5);
  const Window w{50.0, 100.0};
  const std::span<const Path> all(paths);
  const auto whole = upper_containment(all, spec, 3, w);
  const auto a = upper_containment(all.first(77), spec, 3, w);
  const auto b = upper_containment(all.subspan(77), spec, 3, w);
  const auto m = merge(a, b);
  CHECK(m.n_paths == whole.n_paths);
  CHECK(m.n_contained == whole.n_contained);
  CHECK(m.first_violation_times == whole.first_violation_times);
  CHECK(m.ci.lo == whole.ci.lo);
  CHECK_THROWS_AS(merge(a, lower_containment(all, spec, 3, w)),
                  PreconditionError);
}

TEST_CASE("drift summary") {
  const std::vector<Path> line{deterministic(PathKind::Radial, 50.0, 1.0)};
  const auto s = drift_limit(line);
  CHECK(s.n == 1);
  CHECK(s.mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.stdev == 0.0);
  const std::vector<double> slopes{1.0, 2.0, 3.0};
  const auto t = drift_limit_from_slopes(slopes);
  CHECK(t.mean == 2.0);
  CHECK(t.stdev == 1.0);
  CHECK(t.ci_hi - t.mean == doctest::Approx(1.959963984540054 / std::sqrt(3.0)));
  const std::vector<Path> bm{deterministic(PathKind::Bm1d, 50.0, 1.0)};
  CHECK_THROWS_AS(drift_limit(bm), PreconditionError);
}

TEST_CASE("LIL statistic") {
  const std::vector<Path> line{deterministic(PathKind::Radial, 500.0, 1.0)};
  const auto zero = lil_statistic(line, 3, {16.0, 500.0});
  CHECK(zero.suprema.front() == doctest::Approx(0.0).scale(1e-12));
  CHECK_THROWS_AS(lil_statistic(line, 3, {10.0, 500.0}), PreconditionError);
  CHECK_THROWS_AS(lil_statistic(line, 3, {600.0, 700.0}), PreconditionError);

  const auto paths = radial_paths(sim(3, 2000.0, 9, 100));
  const auto narrow = lil_statistic(paths, 3, {100.0, 500.0});
  const auto wide = lil_statistic(paths, 3, {100.0, 2000.0});
  const auto wider = lil_statistic(paths, 3, {50.0, 2000.0});
  for (std::size_t i = 0; i < paths.size(); ++i) {
    CHECK(wide.suprema[i] >= narrow.suprema[i]);
    CHECK(wider.suprema[i] >= wide.suprema[i]);
  }
  CHECK(wide.q05 <= wide.q25);
  CHECK(wide.q25 <= wide.median);
  CHECK(wide.median <= wide.q75);
  CHECK(wide.q75 <= wide.q95);
  const nlohmann::json j = wide;
  CHECK(j.at("quantiles").at("median") == wide.median);
}

TEST_CASE("type-7 quantiles") {
  CHECK(quantile({4, 1, 3, 2}, 0.25) == 1.75);
  CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(quantile({7}, 0.3) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), PreconditionError);
}

TEST_CASE("LIL median on the pilot-fixed interval") {
  auto c = sim(3, 1e4, fixtures::kAcceptanceSeed, 2000);
  c.seed = derive_seed(fixtures::kAcceptanceSeed, "lil");
  const auto grid = c.make_grid();
  std::vector<double> suprema;
  // Chunks keep memory at a few hundred paths.
  for (std::uint64_t first = 0; first < c.path_count; first += 250) {
    std::vector<Path> chunk;
    for (std::uint64_t i = first; i < first + 250; ++i) {
      chunk.push_back(simulate_radial_path(c, grid, i).radial);
    }
    const auto s = lil_statistic(chunk, 3, {100.0, 1e4});
    suprema.insert(suprema.end(), s.suprema.begin(), s.suprema.end());
  }
  const double median = quantile(suprema, 0.5);
  INFO("median " << median);
  CHECK(median >= fixtures::kLilMedianLo);
  CHECK(median <= fixtures::kLilMedianHi);
}
