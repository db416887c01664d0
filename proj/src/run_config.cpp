#include "hbm/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>

#include "hbm/errors.hpp"

namespace hbm {

namespace {

using nlohmann::json;

void allow_keys(const json& j, std::string_view where,
                std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) {
    throw ConfigError(std::string(where) + " must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <class T>
T read(const json& j, std::string_view where, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

StepRule read_step(const json& j, std::string_view where, StepRule fallback) {
  StepRule step = fallback;
  if (j.contains("preset")) {
    step = step_preset(read<std::string>(j, where, "preset", ""));
  }
  step.dt_max = read(j, where, "dt_max", step.dt_max);
  step.rel = read(j, where, "rel", step.rel);
  if (j.contains("dt_max_late")) {
    step.dt_max_late = j["dt_max_late"].is_null()
                           ? std::numeric_limits<double>::infinity()
                           : read(j, where, "dt_max_late", step.dt_max_late);
  }
  step.validate();
  return step;
}

void write_step(json& j, const StepRule& step) {
  j["dt_max"] = step.dt_max;
  j["rel"] = step.rel;
  j["dt_max_late"] = std::isfinite(step.dt_max_late) ? json(step.dt_max_late)
                                                     : json(nullptr);
}

Window read_window(const json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(std::string(where) + " must be a [start, end] pair");
  }
  Window w{j[0].get<double>(), j[1].get<double>()};
  if (!(w.t_end >= w.t_start) || !(w.t_start > 0.0)) {
    throw ConfigError(std::string(where) + " must satisfy 0 < start <= end");
  }
  return w;
}

RateFunctionSpec read_rate(const json& j, std::string_view where) {
  RateFunctionSpec spec = rate_spec_from_json(j);
  const auto report = check_admissibility(spec);
  if (!report.admissible) {
    throw ConfigError(std::string(where) + " is not admissible: " +
                      report.violations.front());
  }
  return spec;
}

EnvelopeMode parse_envelope_mode(std::string_view s) {
  if (s == "upper") return EnvelopeMode::Upper;
  if (s == "lower") return EnvelopeMode::Lower;
  if (s == "bm") return EnvelopeMode::Bm;
  throw ConfigError("envelope mode must be upper, lower or bm");
}

std::string_view envelope_mode_name(EnvelopeMode m) {
  switch (m) {
    case EnvelopeMode::Upper:
      return "upper";
    case EnvelopeMode::Lower:
      return "lower";
    case EnvelopeMode::Bm:
      return "bm";
  }
  return "upper";
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Simulate:
      return "simulate";
    case Stage::Envelope:
      return "envelope";
    case Stage::Lil:
      return "lil";
    case Stage::Drift:
      return "drift";
    case Stage::Classify:
      return "classify";
    case Stage::Crosscheck:
      return "crosscheck";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::Simulate, Stage::Envelope, Stage::Lil, Stage::Drift,
                  Stage::Classify, Stage::Crosscheck}) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

bool RunConfig::has(Stage s) const {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

RunConfig parse_run_config(const json& j) {
  allow_keys(j, "config",
             {"seed", "threads", "out_dir", "stages", "simulate", "envelope",
              "lil", "drift", "classify", "crosscheck"});
  RunConfig c;
  c.seed = read<std::uint64_t>(j, "config", "seed", c.seed);
  c.threads = read<unsigned>(j, "config", "threads", c.threads);
  c.out_dir = read<std::string>(j, "config", "out_dir", c.out_dir);
  if (c.threads == 0) throw ConfigError("threads must be >= 1");

  std::set<Stage> stages;
  if (j.contains("stages")) {
    if (!j["stages"].is_array()) throw ConfigError("stages must be a list");
    for (const auto& s : j["stages"]) {
      if (!s.is_string()) throw ConfigError("stage names must be strings");
      stages.insert(parse_stage(s.get<std::string>()));
    }
  }
  if (stages.empty()) throw ConfigError("no stages requested");
  c.stages.assign(stages.begin(), stages.end());

  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    allow_keys(s, "simulate",
               {"d", "horizon", "paths", "r_init", "preset", "dt_max", "rel",
                "dt_max_late", "format", "write_paths"});
    c.simulate.d = read(s, "simulate", "d", c.simulate.d);
    c.simulate.horizon = read(s, "simulate", "horizon", c.simulate.horizon);
    c.simulate.paths = read(s, "simulate", "paths", c.simulate.paths);
    c.simulate.r_init = read(s, "simulate", "r_init", c.simulate.r_init);
    c.simulate.step = read_step(s, "simulate", c.simulate.step);
    c.simulate.format = read(s, "simulate", "format", c.simulate.format);
    c.simulate.write_paths =
        read(s, "simulate", "write_paths", c.simulate.write_paths);
    if (c.simulate.format != "binary" && c.simulate.format != "csv") {
      throw ConfigError("simulate.format must be 'binary' or 'csv'");
    }
  }
  simulation_config(c.simulate, c.seed).validate();

  if (j.contains("envelope")) {
    if (!j["envelope"].is_array()) {
      throw ConfigError("envelope must be a list of envelope checks");
    }
    for (const auto& e : j["envelope"]) {
      allow_keys(e, "envelope[]", {"mode", "bm_mode", "rate", "window", "refine"});
      EnvelopeStage st;
      st.mode = parse_envelope_mode(read<std::string>(e, "envelope[]", "mode", "upper"));
      st.bm_mode = parse_bm_mode(read<std::string>(e, "envelope[]", "bm_mode", "two_sided"));
      if (!e.contains("rate")) throw ConfigError("envelope[] needs a rate block");
      st.rate = read_rate(e["rate"], "envelope[].rate");
      if (!e.contains("window")) throw ConfigError("envelope[] needs a window");
      st.window = read_window(e["window"], "envelope[].window");
      st.refine = read(e, "envelope[]", "refine", st.refine);
      if (st.window.t_start < st.rate.t0()) {
        throw ConfigError("envelope window starts before the rate function's t0");
      }
      c.envelope.push_back(std::move(st));
    }
  }

  if (j.contains("lil")) {
    allow_keys(j["lil"], "lil", {"window"});
    if (j["lil"].contains("window")) {
      c.lil_window = read_window(j["lil"]["window"], "lil.window");
    }
  }
  if (c.lil_window.t_start < 16.0) {
    throw ConfigError("lil.window must start at t >= 16");
  }
  if (j.contains("drift")) allow_keys(j["drift"], "drift", {});

  if (j.contains("classify")) {
    if (!j["classify"].is_array()) throw ConfigError("classify must be a list");
    for (const auto& e : j["classify"]) {
      allow_keys(e, "classify[]", {"rate", "n", "shift"});
      ClassifyStage st;
      if (!e.contains("rate")) throw ConfigError("classify[] needs a rate block");
      st.rate = read_rate(e["rate"], "classify[].rate");
      if (e.contains("n")) {
        st.n = read<int>(e, "classify[]", "n", 1);
        if (*st.n < 1) throw ConfigError("classify[].n must be >= 1");
      }
      st.shift = parse_shift(read<std::string>(e, "classify[]", "shift", "minus"));
      c.classify.push_back(std::move(st));
    }
  }

  if (j.contains("crosscheck")) {
    const auto& x = j["crosscheck"];
    allow_keys(x, "crosscheck",
               {"d", "t", "paths", "preset", "dt_max", "rel", "dt_max_late",
                "alpha"});
    c.crosscheck.d = read(x, "crosscheck", "d", c.crosscheck.d);
    c.crosscheck.t = read(x, "crosscheck", "t", c.crosscheck.t);
    c.crosscheck.paths = read(x, "crosscheck", "paths", c.crosscheck.paths);
    c.crosscheck.step = read_step(x, "crosscheck", c.crosscheck.step);
    c.crosscheck.alpha = read(x, "crosscheck", "alpha", c.crosscheck.alpha);
    if (c.crosscheck.d < 2) throw ConfigError("crosscheck.d must be >= 2");
    if (!(c.crosscheck.t > 0.0)) throw ConfigError("crosscheck.t must be > 0");
    if (c.crosscheck.paths == 0) throw ConfigError("crosscheck.paths must be > 0");
    if (!(c.crosscheck.alpha > 0.0 && c.crosscheck.alpha < 1.0)) {
      throw ConfigError("crosscheck.alpha must lie in (0, 1)");
    }
  }

  const bool needs_paths = c.has(Stage::Envelope) || c.has(Stage::Lil) ||
                           c.has(Stage::Drift);
  if (needs_paths && !c.has(Stage::Simulate)) {
    throw ConfigError("envelope, lil and drift stages require the simulate stage");
  }
  if (c.has(Stage::Envelope) && c.envelope.empty()) {
    throw ConfigError("envelope stage requested without envelope checks");
  }
  if (c.has(Stage::Classify) && c.classify.empty()) {
    throw ConfigError("classify stage requested without classify entries");
  }
  if (c.has(Stage::Lil) && c.lil_window.t_start > c.simulate.horizon) {
    throw ConfigError("lil.window starts beyond the simulation horizon");
  }
  for (const auto& e : c.envelope) {
    if (e.window.t_start > c.simulate.horizon) {
      throw ConfigError("envelope window starts beyond the simulation horizon");
    }
  }
  return c;
}

json serialize_run_config(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  j["stages"] = json::array();
  for (Stage s : c.stages) j["stages"].push_back(stage_name(s));

  json sim{{"d", c.simulate.d},
           {"horizon", c.simulate.horizon},
           {"paths", c.simulate.paths},
           {"r_init", c.simulate.r_init},
           {"format", c.simulate.format},
           {"write_paths", c.simulate.write_paths}};
  write_step(sim, c.simulate.step);
  j["simulate"] = std::move(sim);

  j["envelope"] = json::array();
  for (const auto& e : c.envelope) {
    j["envelope"].push_back({{"mode", envelope_mode_name(e.mode)},
                             {"bm_mode", e.bm_mode == BmMode::TwoSided
                                             ? "two_sided"
                                             : "lower"},
                             {"rate", e.rate},
                             {"window", {e.window.t_start, e.window.t_end}},
                             {"refine", e.refine}});
  }
  j["lil"] = {{"window", {c.lil_window.t_start, c.lil_window.t_end}}};
  j["drift"] = json::object();
  j["classify"] = json::array();
  for (const auto& e : c.classify) {
    json entry{{"rate", e.rate}, {"shift", shift_name(e.shift)}};
    if (e.n) entry["n"] = *e.n;
    j["classify"].push_back(std::move(entry));
  }
  json x{{"d", c.crosscheck.d},
         {"t", c.crosscheck.t},
         {"paths", c.crosscheck.paths},
         {"alpha", c.crosscheck.alpha}};
  write_step(x, c.crosscheck.step);
  j["crosscheck"] = std::move(x);
  return j;
}

SimConfig simulation_config(const SimulateStage& s, std::uint64_t seed) {
  SimConfig cfg;
  cfg.d = s.d;
  cfg.horizon = s.horizon;
  cfg.r_init = s.r_init;
  cfg.step = s.step;
  cfg.seed = seed;
  cfg.path_count = s.paths;
  return cfg;
}

}  // namespace hbm
