#include "hbm/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "hbm/errors.hpp"
#include "hbm/parallel.hpp"
#include "hbm/rng.hpp"

namespace hbm {

namespace {

// Positive root of y^2 - b y - a = 0 (a > 0), free of cancellation.
double positive_quadratic_root(double b, double a) noexcept {
  const double disc = std::sqrt(b * b + 4.0 * a);
  return b >= 0.0 ? 0.5 * (b + disc) : 2.0 * a / (disc - b);
}

constexpr double kSeriesCutoff = 1e-2;

}  // namespace

std::string_view path_kind_name(PathKind kind) {
  switch (kind) {
    case PathKind::Bm1d:
      return "bm1d";
    case PathKind::Radial:
      return "radial";
    case PathKind::AmbientDistance:
      return "ambient_distance";
  }
  return "unknown";
}

PathKind parse_path_kind(std::string_view name) {
  for (PathKind k :
       {PathKind::Bm1d, PathKind::Radial, PathKind::AmbientDistance}) {
    if (path_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown path kind '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (d < 2) throw ConfigError("dimension d must be >= 2");
  if (!(r_init >= 0.0) || !std::isfinite(r_init)) {
    throw ConfigError("r_init must be finite and >= 0");
  }
  if (!(horizon > r_init) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be finite and exceed r_init");
  }
  if (path_count == 0) throw ConfigError("path count must be positive");
  step.validate();
}

std::shared_ptr<const TimeGrid> SimConfig::make_grid() const {
  validate();
  return std::make_shared<const TimeGrid>(TimeGrid::build(horizon, step));
}

double coth(double x) noexcept {
  if (x > kSeriesCutoff) return 1.0 + 2.0 / std::expm1(2.0 * x);
  const double x2 = x * x;
  return 1.0 / x + x / 3.0 - x * x2 / 45.0;
}

double coth_minus_one(double x) noexcept {
  if (x > kSeriesCutoff) return 2.0 / std::expm1(2.0 * x);
  const double x2 = x * x;
  return 1.0 / x - 1.0 + x / 3.0 - x * x2 / 45.0;
}

double implicit_radial_step(double x, double a) {
  // f(y) = y - x - a coth(y) is increasing and concave on (0, inf).
  // coth(y) >= max(1, 1/y) gives the lower bracket and
  // coth(y) <= 1 + 1/y the upper one.
  const double lo = std::max(positive_quadratic_root(x, a), x + a);
  const double hi = positive_quadratic_root(x + a, a);
  constexpr double kTol = 4.0 * std::numeric_limits<double>::epsilon();

  double left = lo;
  double right = hi;
  double y = lo;
  for (int iter = 0; iter < 100; ++iter) {
    double cm1;    // coth(y) - 1
    double csch2;  // 1 / sinh(y)^2
    if (y > kSeriesCutoff) {
      cm1 = 2.0 / std::expm1(2.0 * y);
      csch2 = cm1 * (2.0 + cm1);
    } else {
      const double y2 = y * y;
      cm1 = coth_minus_one(y);
      csch2 = 1.0 / y2 - 1.0 / 3.0 + y2 / 15.0;
    }
    const double fy = (y - x - a) - a * cm1;
    if (fy == 0.0) return y;
    (fy < 0.0 ? left : right) = y;
    double next = y - fy / (1.0 + a * csch2);
    if (std::abs(next - y) <= kTol * y) return std::clamp(next, lo, hi);
    // Newton from the left stays left of the root for a concave f; fall back
    // to bisection if rounding pushes it out of the bracket.
    if (!(next > left && next < right)) next = 0.5 * (left + right);
    if (right - left <= kTol * right) return std::clamp(next, lo, hi);
    y = next;
  }
  std::ostringstream os;
  os.precision(17);
  os << "implicit radial step did not converge in 100 iterations (x=" << x
     << ", a=" << a << ", bracket=[" << left << ", " << right << "])";
  throw NumericalError(os.str());
}

std::vector<double> driving_increments(const TimeGrid& grid,
                                       std::uint64_t seed,
                                       std::uint64_t path_index) {
  std::vector<double> inc(grid.steps());
  NormalStream(seed, StreamId::DrivingNoise, path_index).fill(inc);
  for (std::size_t k = 0; k < inc.size(); ++k) {
    inc[k] *= std::sqrt(grid.step(k));
  }
  return inc;
}

std::vector<double> coarsen_increments(std::span<const double> fine,
                                       std::size_t factor) {
  if (factor < 1) throw PreconditionError("coarsening factor must be >= 1");
  std::vector<double> out;
  out.reserve(fine.size() / factor + 1);
  for (std::size_t k = 0; k < fine.size(); k += factor) {
    double sum = 0.0;
    for (std::size_t j = k; j < std::min(fine.size(), k + factor); ++j) {
      sum += fine[j];
    }
    out.push_back(sum);
  }
  return out;
}

Path simulate_bm1d_path(const SimConfig& config,
                        std::shared_ptr<const TimeGrid> grid,
                        std::uint64_t path_index) {
  const auto inc = driving_increments(*grid, config.seed, path_index);
  Path p{std::move(grid), std::vector<double>(inc.size() + 1, 0.0),
         PathKind::Bm1d, path_index};
  for (std::size_t k = 0; k < inc.size(); ++k) {
    p.values[k + 1] = p.values[k] + inc[k];
  }
  return p;
}

std::vector<Path> simulate_bm1d(const SimConfig& config, unsigned threads) {
  const auto grid = config.make_grid();
  std::vector<Path> out(config.path_count);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = simulate_bm1d_path(config, grid, i);
  });
  return out;
}

PairedPaths radial_from_increments(std::shared_ptr<const TimeGrid> grid,
                                   std::vector<double> increments, int d,
                                   double r_init, std::uint64_t path_id) {
  if (d < 2) throw PreconditionError("dimension d must be >= 2");
  if (increments.size() != grid->steps()) {
    throw PreconditionError("increment count does not match the grid");
  }
  const std::size_t n = grid->size();
  PairedPaths out;
  out.bm = Path{grid, std::vector<double>(n, 0.0), PathKind::Bm1d, path_id};
  out.radial = Path{grid, std::vector<double>(n, 0.0), PathKind::Radial,
                    path_id};
  auto& b = out.bm.values;
  auto& r = out.radial.values;
  r[0] = r_init;
  const double half_dim = 0.5 * (d - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = grid->step(k);
    b[k + 1] = b[k] + increments[k];
    try {
      r[k + 1] = implicit_radial_step(r[k] + increments[k], h * half_dim);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at step " +
                           std::to_string(k) + " of path " +
                           std::to_string(path_id));
    }
  }
  out.increments = std::move(increments);
  return out;
}

PairedPaths simulate_radial_path(const SimConfig& config,
                                 std::shared_ptr<const TimeGrid> grid,
                                 std::uint64_t path_index) {
  auto inc = driving_increments(*grid, config.seed, path_index);
  return radial_from_increments(std::move(grid), std::move(inc), config.d,
                                config.r_init, path_index);
}

std::vector<PairedPaths> simulate_radial(const SimConfig& config,
                                         unsigned threads) {
  const auto grid = config.make_grid();
  std::vector<PairedPaths> out(config.path_count);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = simulate_radial_path(config, grid, i);
  });
  return out;
}

std::vector<TerminalValues> simulate_radial_terminal(const SimConfig& config,
                                                     unsigned threads) {
  const auto grid = config.make_grid();
  std::vector<TerminalValues> out(config.path_count);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto p = simulate_radial_path(config, grid, i);
    out[i] = {i, p.bm.terminal(), p.radial.terminal()};
  });
  return out;
}

Path comparison_path(const PairedPaths& paired, int d) {
  const auto t = paired.bm.times();
  Path p{paired.bm.grid, std::vector<double>(t.size()), PathKind::Bm1d,
         paired.bm.path_id};
  const double half_dim = 0.5 * (d - 1);
  for (std::size_t k = 0; k < t.size(); ++k) {
    p.values[k] = paired.bm.values[k] + half_dim * t[k];
  }
  return p;
}

std::vector<double> correction_integral(const PairedPaths& paired, int d) {
  const auto t = paired.radial.times();
  const auto& r = paired.radial.values;
  const double half_dim = 0.5 * (d - 1);
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double h = t[k + 1] - t[k];
    const double right = coth_minus_one(r[k + 1]);
    const double area = r[k] > 0.0
                            ? 0.5 * h * (coth_minus_one(r[k]) + right)
                            : h * right;
    out[k + 1] = out[k] + half_dim * area;
  }
  return out;
}

BoundSurrogates bound_surrogates(const PairedPaths& paired, int d, double c) {
  if (!(c > 0.0)) throw PreconditionError("linear rate c must be positive");
  const auto t = paired.radial.times();
  const auto& r = paired.radial.values;
  const auto corr = correction_integral(paired, d);
  const double half_dim = 0.5 * (d - 1);

  BoundSurrogates s;
  s.c = c;
  s.plateau = corr.back();

  std::size_t start = 1;
  for (std::size_t k = t.size(); k-- > 1;) {
    if (r[k] < c * t[k]) {
      start = k + 1;
      break;
    }
  }
  if (start >= t.size()) return s;

  const double t1 = t[start];
  s.t1 = t1;
  s.correction_at_t1 = corr[start] / half_dim;
  s.tail_bound = -std::log(-std::expm1(-2.0 * c * t1)) / c;
  s.c_t1 = s.correction_at_t1 + s.tail_bound;
  s.n_bound = std::max<long long>(
      1, static_cast<long long>(std::ceil(half_dim * s.c_t1)));
  return s;
}

}  // namespace hbm
