#include "hbm/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hbm/errors.hpp"

namespace hbm {

void StepRule::validate() const {
  if (!(dt_max > 0.0) || !std::isfinite(dt_max)) {
    throw ConfigError("dt_max must be positive and finite");
  }
  if (!(rel > 0.0 && rel <= 0.1)) {
    throw ConfigError("rel must lie in (0, 0.1]");
  }
  if (!(dt_max_late > 0.0)) {
    throw ConfigError("dt_max_late must be positive");
  }
}

StepRule step_preset(std::string_view name) {
  if (name == "fine") return {1e-3, 0.01, 0.05};
  if (name == "standard") return {1e-2, 0.02, 0.5};
  if (name == "coarse") return {5e-2, 0.05, std::numeric_limits<double>::infinity()};
  throw ConfigError("unknown step preset '" + std::string(name) +
                    "' (expected fine, standard or coarse)");
}

TimeGrid TimeGrid::build(double horizon, const StepRule& rule) {
  rule.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be positive and finite");
  }
  std::vector<double> t{0.0};
  // Uniform part: t_k = k * dt_max exactly, up to min(1, horizon).
  const double uniform_end = std::min(1.0, horizon);
  const auto n_uniform =
      static_cast<std::size_t>(std::ceil(uniform_end / rule.dt_max - 1e-9));
  for (std::size_t k = 1; k <= n_uniform; ++k) {
    t.push_back(std::min(static_cast<double>(k) * rule.dt_max, uniform_end));
  }
  double now = t.back();
  while (now < horizon) {
    double dt = std::min(rule.dt_max_late, rule.rel * now);
    dt = std::max(dt, 1e-12 * now);
    double next = now + dt;
    // Avoid a sliver final step.
    if (next >= horizon || horizon - next < 1e-6 * dt) next = horizon;
    t.push_back(next);
    now = next;
  }
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::from_times(std::vector<double> times) {
  if (times.size() < 2) throw PreconditionError("time grid needs >= 2 points");
  if (times.front() != 0.0) throw PreconditionError("time grid must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1]) || !std::isfinite(times[k])) {
      throw PreconditionError("time grid must be strictly increasing");
    }
  }
  return TimeGrid(std::move(times));
}

TimeGrid TimeGrid::refined(std::size_t factor) const {
  if (factor < 1) throw PreconditionError("refinement factor must be >= 1");
  std::vector<double> t;
  t.reserve(steps() * factor + 1);
  for (std::size_t k = 0; k < steps(); ++k) {
    const double a = times_[k];
    const double h = step(k);
    for (std::size_t j = 0; j < factor; ++j) {
      t.push_back(a + h * static_cast<double>(j) / static_cast<double>(factor));
    }
  }
  t.push_back(times_.back());
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::coarsened(std::size_t factor) const {
  if (factor < 1) throw PreconditionError("coarsening factor must be >= 1");
  std::vector<double> t;
  for (std::size_t k = 0; k < times_.size(); k += factor) t.push_back(times_[k]);
  if (t.back() != times_.back()) t.push_back(times_.back());
  return TimeGrid(std::move(t));
}

std::size_t TimeGrid::lower_index(double t) const noexcept {
  return static_cast<std::size_t>(
      std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
}

}  // namespace hbm
