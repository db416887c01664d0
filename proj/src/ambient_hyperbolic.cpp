#include "hbm/ambient_hyperbolic.hpp"

#include <cmath>

#include "hbm/errors.hpp"
#include "hbm/parallel.hpp"
#include "hbm/rng.hpp"

namespace hbm {

HalfSpacePoint::HalfSpacePoint(std::vector<double> coords)
    : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw PreconditionError("half-space points need dimension >= 2");
  }
  for (double x : coords_) {
    if (!std::isfinite(x)) throw PreconditionError("non-finite coordinate");
  }
  if (!(coords_.back() > 0.0)) {
    throw PreconditionError("half-space height must be strictly positive");
  }
}

HalfSpacePoint HalfSpacePoint::origin(int d) {
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  x.back() = 1.0;
  return HalfSpacePoint(std::move(x));
}

double geodesic_distance(const HalfSpacePoint& p, const HalfSpacePoint& q) {
  if (p.dim() != q.dim()) {
    throw PreconditionError("points live in different dimensions");
  }
  double norm2 = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double diff = p.coords()[i] - q.coords()[i];
    norm2 += diff * diff;
  }
  return 2.0 * std::asinh(std::sqrt(norm2) /
                          (2.0 * std::sqrt(p.height() * q.height())));
}

double distance_from_origin(double horizontal_norm2,
                            double log_height) noexcept {
  // |x - o|^2 / (4 x_d) with (x_d - 1)^2 / x_d = 4 sinh^2(Y/2).
  const double sh = std::sinh(0.5 * log_height);
  const double arg =
      std::sqrt(0.25 * horizontal_norm2 * std::exp(-log_height) + sh * sh);
  return 2.0 * std::asinh(arg);
}

AmbientPath simulate_ambient_path(const SimConfig& config,
                                  std::shared_ptr<const TimeGrid> grid,
                                  std::uint64_t path_index) {
  const auto d = static_cast<std::size_t>(config.d);
  const std::size_t n = grid->size();
  const NormalStream noise(config.seed, StreamId::Ambient, path_index);
  const double drift = -0.5 * static_cast<double>(d - 1);

  AmbientPath out;
  out.log_height.assign(n, 0.0);
  out.horizontal.assign(d - 1, 0.0);
  out.distance = Path{grid, std::vector<double>(n, 0.0),
                      PathKind::AmbientDistance, path_index};

  std::vector<double> z(d);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = grid->step(k);
    const double sqrt_h = std::sqrt(h);
    noise.fill(z, static_cast<std::uint64_t>(k) * d);
    const double y0 = out.log_height[k];
    const double y1 = y0 + sqrt_h * z[d - 1] + drift * h;
    out.log_height[k + 1] = y1;
    const double scale = std::exp(0.5 * (y0 + y1)) * sqrt_h;
    double norm2 = 0.0;
    for (std::size_t i = 0; i + 1 < d; ++i) {
      out.horizontal[i] += scale * z[i];
      norm2 += out.horizontal[i] * out.horizontal[i];
    }
    out.distance.values[k + 1] = distance_from_origin(norm2, y1);
  }
  return out;
}

std::vector<Path> simulate_ambient(const SimConfig& config, unsigned threads) {
  const auto grid = config.make_grid();
  std::vector<Path> out(config.path_count);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = simulate_ambient_path(config, grid, i).distance;
  });
  return out;
}

std::vector<double> ambient_terminal_distances(const SimConfig& config,
                                               unsigned threads) {
  const auto grid = config.make_grid();
  std::vector<double> out(config.path_count);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = simulate_ambient_path(config, grid, i).distance.terminal();
  });
  return out;
}

}  // namespace hbm
