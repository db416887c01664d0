#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbm/envelope_stats.hpp"
#include "hbm/rate_functions.hpp"
#include "hbm/sde_sim.hpp"

namespace hbm {

/// Pipeline stages, always executed in this order.
enum class Stage { Simulate, Envelope, Lil, Drift, Classify, Crosscheck };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

struct SimulateStage {
  int d = 3;
  double horizon = 500.0;
  std::uint64_t paths = 1000;
  double r_init = 0.0;
  StepRule step = step_preset("standard");
  std::string format = "binary";  // "binary" or "csv"
  bool write_paths = true;
};

enum class EnvelopeMode { Upper, Lower, Bm };

struct EnvelopeStage {
  EnvelopeMode mode = EnvelopeMode::Upper;
  BmMode bm_mode = BmMode::TwoSided;
  RateFunctionSpec rate = RateFunctionSpec::sqrt_loglog(3.0);
  Window window{50.0, 500.0};
  bool refine = true;
};

struct ClassifyStage {
  RateFunctionSpec rate = RateFunctionSpec::sqrt_loglog(2.0);
  std::optional<int> n;
  ShiftDirection shift = ShiftDirection::Minus;
};

struct CrosscheckStage {
  int d = 3;
  double t = 5.0;
  std::uint64_t paths = 5000;
  StepRule step = step_preset("fine");
  double alpha = 0.01;
};

/// Parsed and validated pipeline configuration. Unknown keys are rejected.
///
/// Top-level keys: seed, threads, out_dir, stages, simulate, envelope (list),
/// lil {window}, drift {}, classify (list), crosscheck. Step rules are given
/// either as "preset" or explicit dt_max / rel / dt_max_late and are
/// normalized to the explicit form (dt_max_late null = unbounded).
struct RunConfig {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = "hbm_out";
  std::vector<Stage> stages;  // sorted, unique
  SimulateStage simulate;
  std::vector<EnvelopeStage> envelope;
  Window lil_window{100.0, 10000.0};
  std::vector<ClassifyStage> classify;
  CrosscheckStage crosscheck;

  bool has(Stage s) const;
};

/// Throws ConfigError with a descriptive message on any invalid input,
/// including "no stages requested".
RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::json serialize_run_config(const RunConfig& config);

SimConfig simulation_config(const SimulateStage& s, std::uint64_t seed);

}  // namespace hbm
