#include "hbm/envelope_stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "hbm/errors.hpp"
#include "hbm/parallel.hpp"
#include "hbm/rng.hpp"

namespace hbm {

namespace {

// Envelope condition "inside(t, v)" plus the safe-side near-miss test.
struct Boundary {
  EnvelopeKind kind;
  const RateFunctionSpec* spec;
  int d;
  double near_rel;

  // The boundary value: r1, r2, or sqrt(t) g(t) for the 1D kinds.
  double level(double t) const {
    switch (kind) {
      case EnvelopeKind::UpperContainment:
        return rate_band(*spec, d, t).upper();
      case EnvelopeKind::LowerContainment:
        return rate_band(*spec, d, t).lower();
      case EnvelopeKind::BmTwoSided:
      case EnvelopeKind::BmLowerCrossing:
        return std::sqrt(t) * eval_g(*spec, t);
    }
    return 0.0;
  }

  bool inside(double v, double env) const noexcept {
    switch (kind) {
      case EnvelopeKind::UpperContainment:
        return v < env;
      case EnvelopeKind::LowerContainment:
        return v > env;
      case EnvelopeKind::BmTwoSided:
        return std::abs(v) < env;
      case EnvelopeKind::BmLowerCrossing:
        return v > -env;
    }
    return true;
  }

  bool near_miss(double v, double env) const noexcept {
    const double slack = near_rel * std::abs(env);
    switch (kind) {
      case EnvelopeKind::UpperContainment:
        return v >= env - slack;
      case EnvelopeKind::LowerContainment:
        return v <= env + slack;
      case EnvelopeKind::BmTwoSided:
        return std::abs(v) >= env - slack;
      case EnvelopeKind::BmLowerCrossing:
        return v <= -env + slack;
    }
    return false;
  }
};

bool is_radial_kind(EnvelopeKind kind) {
  return kind == EnvelopeKind::UpperContainment ||
         kind == EnvelopeKind::LowerContainment;
}

// First time in the window at which the path leaves the envelope.
std::optional<double> first_violation(const Path& path, const Boundary& b,
                                      std::span<const double> env,
                                      std::size_t k0, std::size_t k1,
                                      const EnvelopeOptions& options) {
  const auto t = path.times();
  const auto& v = path.values;
  std::optional<NormalStream> bridge;
  for (std::size_t k = k0; k <= k1; ++k) {
    if (!b.inside(v[k], env[k - k0])) return t[k];
    if (!options.refine_near_misses || k == k1) continue;
    if (!b.near_miss(v[k], env[k - k0]) &&
        !b.near_miss(v[k + 1], env[k + 1 - k0])) {
      continue;
    }
    if (!bridge) {
      bridge.emplace(options.refine_seed, StreamId::Refinement, path.path_id);
    }
    // Brownian-bridge midpoint: variance h/4 around the chord.
    const double h = t[k + 1] - t[k];
    const double tm = t[k] + 0.5 * h;
    const double vm =
        0.5 * (v[k] + v[k + 1]) + 0.5 * std::sqrt(h) * bridge->normal(k);
    if (!b.inside(vm, b.level(tm))) return tm;
  }
  return std::nullopt;
}

EnvelopeReport check_envelope(std::span<const Path> paths, const Boundary& b,
                              Window window, const EnvelopeOptions& options) {
  if (paths.empty()) throw PreconditionError("no paths supplied");
  const bool radial = is_radial_kind(b.kind);
  for (const auto& p : paths) {
    const bool ok = radial ? p.kind == PathKind::Radial
                           : p.kind == PathKind::Bm1d;
    if (!ok) {
      throw PreconditionError(std::string("envelope ") +
                              std::string(envelope_kind_name(b.kind)) +
                              " cannot use paths of kind " +
                              std::string(path_kind_name(p.kind)));
    }
  }
  if (!(window.t_start >= b.spec->t0())) {
    throw PreconditionError("window start precedes the rate function's t0");
  }
  if (!(window.t_end >= window.t_start)) {
    throw PreconditionError("window end precedes its start");
  }

  struct Outcome {
    bool violated = false;
    double time = 0.0;
  };
  std::vector<Outcome> outcomes(paths.size());
  std::vector<double> window_t_end(paths.size());

  // Envelope values are shared by paths on the same grid.
  const TimeGrid* cached_grid = nullptr;
  std::vector<double> cached_env;
  std::size_t k0 = 0;
  std::size_t k1 = 0;
  auto prepare = [&](const Path& p) {
    if (cached_grid == p.grid.get()) return;
    const auto& grid = *p.grid;
    k0 = grid.lower_index(window.t_start);
    std::size_t end = grid.lower_index(window.t_end);
    if (end == grid.size() || grid[end] > window.t_end) {
      if (end == 0) {
        throw PreconditionError("window contains no grid points");
      }
      --end;
    }
    if (k0 >= grid.size() || end < k0) {
      throw PreconditionError("window contains no grid points");
    }
    k1 = end;
    cached_env.resize(k1 - k0 + 1);
    for (std::size_t k = k0; k <= k1; ++k) cached_env[k - k0] = b.level(grid[k]);
    cached_grid = p.grid.get();
  };

  bool shared_grid = true;
  for (const auto& p : paths) shared_grid &= p.grid == paths.front().grid;

  if (shared_grid) {
    prepare(paths.front());
    parallel_for(paths.size(), options.threads, [&](std::size_t i) {
      const auto hit =
          first_violation(paths[i], b, cached_env, k0, k1, options);
      outcomes[i] = {hit.has_value(), hit.value_or(0.0)};
      window_t_end[i] = paths[i].grid->operator[](k1);
    });
  } else {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      prepare(paths[i]);
      const auto hit =
          first_violation(paths[i], b, cached_env, k0, k1, options);
      outcomes[i] = {hit.has_value(), hit.value_or(0.0)};
      window_t_end[i] = paths[i].grid->operator[](k1);
    }
  }

  EnvelopeReport report;
  report.kind = b.kind;
  report.window = {window.t_start,
                   *std::max_element(window_t_end.begin(), window_t_end.end())};
  report.n_paths = paths.size();
  const bool counts_crossings = b.kind == EnvelopeKind::BmLowerCrossing;
  for (const auto& o : outcomes) {
    if (o.violated) report.first_violation_times.push_back(o.time);
    if (o.violated == counts_crossings) ++report.n_contained;
  }
  report.ci = wilson_interval(report.n_contained, report.n_paths);
  return report;
}

}  // namespace

std::string_view envelope_kind_name(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::UpperContainment:
      return "upper_containment";
    case EnvelopeKind::LowerContainment:
      return "lower_containment";
    case EnvelopeKind::BmTwoSided:
      return "bm_two_sided";
    case EnvelopeKind::BmLowerCrossing:
      return "bm_lower_crossing";
  }
  return "unknown";
}

BmMode parse_bm_mode(std::string_view name) {
  if (name == "two_sided") return BmMode::TwoSided;
  if (name == "lower") return BmMode::Lower;
  throw ConfigError("bm mode must be 'two_sided' or 'lower', got '" +
                    std::string(name) + "'");
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t n,
                               double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The bound at an observed 0 or 1 is exact.
  return {successes == 0 ? 0.0 : std::max(0.0, center - half),
          successes == n ? 1.0 : std::min(1.0, center + half)};
}

EnvelopeReport merge(const EnvelopeReport& a, const EnvelopeReport& b) {
  if (a.kind != b.kind || a.window.t_start != b.window.t_start) {
    throw PreconditionError("cannot merge reports of different kinds/windows");
  }
  EnvelopeReport out = a;
  out.window.t_end = std::max(a.window.t_end, b.window.t_end);
  out.n_paths += b.n_paths;
  out.n_contained += b.n_contained;
  out.first_violation_times.insert(out.first_violation_times.end(),
                                   b.first_violation_times.begin(),
                                   b.first_violation_times.end());
  out.ci = wilson_interval(out.n_contained, out.n_paths);
  return out;
}

EnvelopeReport upper_containment(std::span<const Path> paths,
                                 const RateFunctionSpec& spec, int d,
                                 Window window,
                                 const EnvelopeOptions& options) {
  const Boundary b{EnvelopeKind::UpperContainment, &spec, d,
                   options.near_miss_rel};
  return check_envelope(paths, b, window, options);
}

EnvelopeReport lower_containment(std::span<const Path> paths,
                                 const RateFunctionSpec& spec, int d,
                                 Window window,
                                 const EnvelopeOptions& options) {
  const Boundary b{EnvelopeKind::LowerContainment, &spec, d,
                   options.near_miss_rel};
  return check_envelope(paths, b, window, options);
}

EnvelopeReport bm_kolmogorov_check(std::span<const Path> paths,
                                   const RateFunctionSpec& spec, Window window,
                                   BmMode mode,
                                   const EnvelopeOptions& options) {
  const Boundary b{mode == BmMode::TwoSided ? EnvelopeKind::BmTwoSided
                                            : EnvelopeKind::BmLowerCrossing,
                   &spec, 2, options.near_miss_rel};
  return check_envelope(paths, b, window, options);
}

DriftSummary drift_limit_from_slopes(std::span<const double> slopes) {
  DriftSummary s;
  s.n = slopes.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : slopes) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double x : slopes) ss += (x - s.mean) * (x - s.mean);
  s.stdev = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  const double half = 1.959963984540054 * s.stdev /
                      std::sqrt(static_cast<double>(s.n));
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  return s;
}

DriftSummary drift_limit(std::span<const Path> paths) {
  std::vector<double> slopes;
  slopes.reserve(paths.size());
  for (const auto& p : paths) {
    if (p.kind != PathKind::Radial && p.kind != PathKind::AmbientDistance) {
      throw PreconditionError("drift_limit needs radial paths");
    }
    slopes.push_back(p.terminal() / p.grid->horizon());
  }
  return drift_limit_from_slopes(slopes);
}

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw PreconditionError("quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  return sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

LilSummary lil_statistic(std::span<const Path> paths, int d, Window window) {
  if (!(window.t_start >= 16.0)) {
    throw PreconditionError("LIL window must start at t >= 16");
  }
  if (paths.empty()) throw PreconditionError("no paths supplied");
  const double half_dim = 0.5 * (d - 1);
  LilSummary s;
  s.suprema.reserve(paths.size());
  for (const auto& p : paths) {
    if (p.kind != PathKind::Radial) {
      throw PreconditionError("lil_statistic needs radial paths");
    }
    const auto t = p.times();
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t k = p.grid->lower_index(window.t_start);
         k < t.size() && t[k] <= window.t_end; ++k) {
      const double scale = std::sqrt(t[k] * std::log(std::log(t[k])));
      sup = std::max(sup, (p.values[k] - half_dim * t[k]) / scale);
    }
    if (!std::isfinite(sup)) {
      throw PreconditionError("LIL window contains no grid points");
    }
    s.suprema.push_back(sup);
  }
  s.q05 = quantile(s.suprema, 0.05);
  s.q25 = quantile(s.suprema, 0.25);
  s.median = quantile(s.suprema, 0.5);
  s.q75 = quantile(s.suprema, 0.75);
  s.q95 = quantile(s.suprema, 0.95);
  return s;
}

void to_json(nlohmann::json& j, const EnvelopeReport& r) {
  j = nlohmann::json{{"kind", envelope_kind_name(r.kind)},
                     {"window", {r.window.t_start, r.window.t_end}},
                     {"n_paths", r.n_paths},
                     {"n_contained", r.n_contained},
                     {"fraction", r.fraction()},
                     {"ci", {r.ci.lo, r.ci.hi}},
                     {"first_violation_times", r.first_violation_times}};
}

void to_json(nlohmann::json& j, const DriftSummary& s) {
  j = nlohmann::json{{"n", s.n},
                     {"mean", s.mean},
                     {"stdev", s.stdev},
                     {"ci", {s.ci_lo, s.ci_hi}}};
}

void to_json(nlohmann::json& j, const LilSummary& s) {
  j = nlohmann::json{{"n", s.suprema.size()},
                     {"quantiles",
                      {{"q05", s.q05},
                       {"q25", s.q25},
                       {"median", s.median},
                       {"q75", s.q75},
                       {"q95", s.q95}}},
                     {"suprema", s.suprema}};
}

}  // namespace hbm
