#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace hbm {

/// Step-size rule: uniform steps of dt_max on [0, 1], then
/// dt = min(dt_max_late, rel * t).
struct StepRule {
  double dt_max = 1e-2;
  double rel = 0.02;
  double dt_max_late = std::numeric_limits<double>::infinity();

  /// Throws ConfigError unless dt_max > 0, 0 < rel <= 0.1, dt_max_late > 0.
  void validate() const;
};

/// Named step presets: "fine", "standard", "coarse".
StepRule step_preset(std::string_view name);

/// Strictly increasing times starting at 0.
class TimeGrid {
 public:
  static TimeGrid build(double horizon, const StepRule& rule);
  static TimeGrid from_times(std::vector<double> times);

  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::size_t steps() const noexcept { return times_.size() - 1; }
  double operator[](std::size_t k) const noexcept { return times_[k]; }
  double horizon() const noexcept { return times_.back(); }
  double step(std::size_t k) const noexcept {
    return times_[k + 1] - times_[k];
  }

  /// Every interval split into `factor` equal parts.
  TimeGrid refined(std::size_t factor) const;
  /// Every `factor`-th point (plus the last). Inverse of refined().
  TimeGrid coarsened(std::size_t factor) const;

  /// Index of the first grid time >= t, or size() if none.
  std::size_t lower_index(double t) const noexcept;

 private:
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {}
  std::vector<double> times_;
};

}  // namespace hbm
