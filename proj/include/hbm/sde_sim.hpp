#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hbm/time_grid.hpp"

namespace hbm {

enum class PathKind { Bm1d, Radial, AmbientDistance };

std::string_view path_kind_name(PathKind kind);
PathKind parse_path_kind(std::string_view name);

/// One realization of a scalar process on a time grid shared between paths.
struct Path {
  std::shared_ptr<const TimeGrid> grid;
  std::vector<double> values;
  PathKind kind = PathKind::Bm1d;
  std::uint64_t path_id = 0;

  std::span<const double> times() const noexcept { return grid->times(); }
  double terminal() const noexcept { return values.back(); }
};

/// A 1D Brownian path and the radial path driven by the same increments.
struct PairedPaths {
  std::vector<double> increments;  // increments[k] = B(t_{k+1}) - B(t_k)
  Path bm;
  Path radial;
};

struct SimConfig {
  int d = 3;
  double horizon = 1.0;
  double r_init = 0.0;
  StepRule step{};
  std::uint64_t seed = 1;
  std::uint64_t path_count = 1;

  /// Throws ConfigError on d < 2, r_init < 0, horizon <= r_init, bad steps,
  /// or zero paths.
  void validate() const;
  std::shared_ptr<const TimeGrid> make_grid() const;
};

/// coth(x) for x > 0, as 1 + 2/(e^{2x}-1) above 1e-2 and by its Laurent
/// series below.
double coth(double x) noexcept;
/// coth(x) - 1 without cancellation.
double coth_minus_one(double x) noexcept;

/// Unique positive root y of  y = x + a coth(y)  for a > 0.
/// Throws NumericalError if the safeguarded Newton iteration stalls.
double implicit_radial_step(double x, double a);

/// Brownian increments sqrt(h_k) Z_k from the driving-noise stream.
std::vector<double> driving_increments(const TimeGrid& grid,
                                       std::uint64_t seed,
                                       std::uint64_t path_index);

/// Increments on grid.coarsened(factor) from increments on the fine grid.
std::vector<double> coarsen_increments(std::span<const double> fine,
                                       std::size_t factor);

Path simulate_bm1d_path(const SimConfig& config,
                        std::shared_ptr<const TimeGrid> grid,
                        std::uint64_t path_index);
std::vector<Path> simulate_bm1d(const SimConfig& config, unsigned threads = 1);

/// Drift-implicit Euler for dR = dB + ((d-1)/2) coth(R) dt:
///   R_{k+1} = R_k + dB_k + h_k ((d-1)/2) coth(R_{k+1}).
PairedPaths radial_from_increments(std::shared_ptr<const TimeGrid> grid,
                                   std::vector<double> increments, int d,
                                   double r_init, std::uint64_t path_id = 0);

PairedPaths simulate_radial_path(const SimConfig& config,
                                 std::shared_ptr<const TimeGrid> grid,
                                 std::uint64_t path_index);
std::vector<PairedPaths> simulate_radial(const SimConfig& config,
                                         unsigned threads = 1);

struct TerminalValues {
  std::uint64_t path_id;
  double bm;
  double radial;
};

/// Same paths as simulate_radial, keeping only terminal values.
std::vector<TerminalValues> simulate_radial_terminal(const SimConfig& config,
                                                     unsigned threads = 1);

/// t -> B_t + (d-1)t/2 on the paired grid.
Path comparison_path(const PairedPaths& paired, int d);

/// Running trapezoidal approximation of ((d-1)/2) int_0^t (coth R_s - 1) ds.
/// An interval whose left endpoint sits at R = 0 uses its right endpoint.
std::vector<double> correction_integral(const PairedPaths& paired, int d);

/// Finite-horizon quantities that bound R_t - B_t - (d-1)t/2 once R_t >= c t.
struct BoundSurrogates {
  double c = 0.0;
  /// First grid time after which R_t >= c t holds through the horizon.
  std::optional<double> t1;
  /// int_0^{T1} (coth R_s - 1) ds.
  double correction_at_t1 = 0.0;
  /// int_{T1}^inf 2/(e^{2cs} - 1) ds = -log(1 - e^{-2 c T1}) / c.
  double tail_bound = 0.0;
  double c_t1 = 0.0;
  /// Smallest integer N >= 1 with ((d-1)/2) C_{T1} <= N.
  long long n_bound = 0;
  /// ((d-1)/2) int_0^T (coth R_s - 1) ds at the horizon.
  double plateau = 0.0;
};

BoundSurrogates bound_surrogates(const PairedPaths& paired, int d, double c);

}  // namespace hbm
