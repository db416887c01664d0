#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hbm/sde_sim.hpp"

namespace hbm {

/// Point of the upper half-space model {x in R^d : x_d > 0} of H^d.
class HalfSpacePoint {
 public:
  /// Throws PreconditionError unless size >= 2, all finite and x_d > 0.
  explicit HalfSpacePoint(std::vector<double> coords);

  /// (0, ..., 0, 1).
  static HalfSpacePoint origin(int d);

  std::size_t dim() const noexcept { return coords_.size(); }
  double height() const noexcept { return coords_.back(); }
  std::span<const double> coords() const noexcept { return coords_; }

 private:
  std::vector<double> coords_;
};

/// acosh(1 + |p-q|^2 / (2 p_d q_d)), evaluated as
/// 2 asinh(|p-q| / (2 sqrt(p_d q_d))) to stay accurate near p = q.
double geodesic_distance(const HalfSpacePoint& p, const HalfSpacePoint& q);

/// Distance from (0, ..., 0, 1) to the point with the given squared
/// horizontal norm and log-height.
double distance_from_origin(double horizontal_norm2, double log_height) noexcept;

struct AmbientPath {
  Path distance;                    // kind AmbientDistance
  std::vector<double> log_height;   // Y = log X_d at every grid point
  std::vector<double> horizontal;   // final horizontal coordinates
};

/// Brownian motion generated by (1/2) Laplace-Beltrami on H^d from
/// (0, ..., 0, 1). Y = log X_d follows dY = dB_d - ((d-1)/2) dt exactly;
/// horizontal coordinates take Euler steps with the midpoint height
/// e^{(Y_k + Y_{k+1})/2} as diffusion coefficient.
AmbientPath simulate_ambient_path(const SimConfig& config,
                                  std::shared_ptr<const TimeGrid> grid,
                                  std::uint64_t path_index);

std::vector<Path> simulate_ambient(const SimConfig& config,
                                   unsigned threads = 1);

/// Distance to the start at the horizon, one per path.
std::vector<double> ambient_terminal_distances(const SimConfig& config,
                                               unsigned threads = 1);

}  // namespace hbm
