#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hbm/rate_functions.hpp"
#include "hbm/sde_sim.hpp"

namespace hbm {

enum class EnvelopeKind {
  UpperContainment,  // R_t < r1(t) throughout the window
  LowerContainment,  // R_t > r2(t) throughout the window
  BmTwoSided,        // |B_t| < sqrt(t) g(t) throughout the window
  BmLowerCrossing,   // B_t <= -sqrt(t) g(t) somewhere in the window
};

std::string_view envelope_kind_name(EnvelopeKind kind);

enum class BmMode { TwoSided, Lower };

BmMode parse_bm_mode(std::string_view name);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval; z = 1.96 gives 95% coverage.
WilsonInterval wilson_interval(std::size_t successes, std::size_t n,
                               double z = 1.959963984540054);

/// Closed time window; t_end = inf means "to the end of each path".
struct Window {
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
};

/// For the containment kinds n_contained counts paths satisfying the
/// envelope at every checked time and first_violation_times lists the first
/// failing time of every other path. For BmLowerCrossing n_contained counts
/// paths that cross and first_violation_times holds their first crossing.
struct EnvelopeReport {
  EnvelopeKind kind = EnvelopeKind::UpperContainment;
  Window window;
  std::size_t n_paths = 0;
  std::size_t n_contained = 0;
  WilsonInterval ci;
  std::vector<double> first_violation_times;

  double fraction() const noexcept {
    return n_paths == 0 ? 0.0
                        : static_cast<double>(n_contained) /
                              static_cast<double>(n_paths);
  }
};

/// Sums counts and pools violation times; kinds and windows must match.
EnvelopeReport merge(const EnvelopeReport& a, const EnvelopeReport& b);

struct EnvelopeOptions {
  /// Intervals with an endpoint within near_miss_rel of the envelope (on the
  /// safe side) get one extra Brownian-bridge midpoint.
  bool refine_near_misses = true;
  double near_miss_rel = 0.01;
  std::uint64_t refine_seed = 0;
  unsigned threads = 1;
};

/// Paths must be radial. window.t_start must be >= spec.t0().
EnvelopeReport upper_containment(std::span<const Path> paths,
                                 const RateFunctionSpec& spec, int d,
                                 Window window,
                                 const EnvelopeOptions& options = {});
EnvelopeReport lower_containment(std::span<const Path> paths,
                                 const RateFunctionSpec& spec, int d,
                                 Window window,
                                 const EnvelopeOptions& options = {});

/// Paths must be bm1d.
EnvelopeReport bm_kolmogorov_check(std::span<const Path> paths,
                                   const RateFunctionSpec& spec, Window window,
                                   BmMode mode,
                                   const EnvelopeOptions& options = {});

struct DriftSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double stdev = 0.0;
  double ci_lo = 0.0;  // normal-approximation 95% interval for the mean
  double ci_hi = 0.0;
};

/// Statistics of R(T)/T with T the final grid time of each path.
DriftSummary drift_limit(std::span<const Path> paths);
DriftSummary drift_limit_from_slopes(std::span<const double> slopes);

struct LilSummary {
  std::vector<double> suprema;  // one per path
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

/// Per-path sup over the window of (R_t - (d-1)t/2) / sqrt(t log log t).
/// Requires window.t_start >= 16.
LilSummary lil_statistic(std::span<const Path> paths, int d, Window window);

/// Linear-interpolation (type 7) quantile of an unsorted sample.
double quantile(std::vector<double> sample, double q);

void to_json(nlohmann::json& j, const EnvelopeReport& r);
void to_json(nlohmann::json& j, const DriftSummary& s);
void to_json(nlohmann::json& j, const LilSummary& s);

}  // namespace hbm
