#include "hbm/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include <CLI11.hpp>

#include "hbm/ambient_hyperbolic.hpp"
#include "hbm/errors.hpp"
#include "hbm/kolmogorov_test.hpp"
#include "hbm/ks_test.hpp"
#include "hbm/path_io.hpp"
#include "hbm/rng.hpp"

#ifndef HBM_VERSION
#define HBM_VERSION "dev"
#endif

namespace hbm {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Seed derivation labels; all randomness flows from the top-level seed.
constexpr std::string_view kSimulateLabel = "simulate";
constexpr std::string_view kRefineLabel = "envelope/refine";
constexpr std::string_view kCrossRadialLabel = "crosscheck/radial";
constexpr std::string_view kCrossAmbientLabel = "crosscheck/ambient";

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

void write_json(const fs::path& file, const json& j) {
  write_text(file, j.dump(2) + "\n");
}

Window parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw ConfigError("window must be given as <start>,<end>");
  }
  try {
    std::size_t used = 0;
    const double a = std::stod(text.substr(0, comma), &used);
    const double b = std::stod(text.substr(comma + 1));
    if (!(b >= a) || !(a > 0.0)) {
      throw ConfigError("window must satisfy 0 < start <= end");
    }
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("window must be given as <start>,<end>");
  }
}

json terminal_summary(const std::vector<PairedPaths>& paths,
                      const SimConfig& cfg) {
  json terminal = json::array();
  for (const auto& p : paths) {
    terminal.push_back({{"path_id", p.radial.path_id},
                        {"time", p.radial.grid->horizon()},
                        {"radial", p.radial.terminal()},
                        {"bm1d", p.bm.terminal()}});
  }
  json step{{"dt_max", cfg.step.dt_max}, {"rel", cfg.step.rel}};
  step["dt_max_late"] = std::isfinite(cfg.step.dt_max_late)
                            ? json(cfg.step.dt_max_late)
                            : json(nullptr);
  return {{"d", cfg.d},
          {"horizon", cfg.horizon},
          {"r_init", cfg.r_init},
          {"paths", cfg.path_count},
          {"stream_seed", cfg.seed},
          {"step", step},
          {"grid_points", paths.empty() ? 0 : paths.front().radial.grid->size()},
          {"terminal", std::move(terminal)}};
}

std::vector<std::string> write_simulation(const fs::path& dir,
                                          const std::vector<PairedPaths>& paths,
                                          const SimConfig& cfg,
                                          const std::string& format,
                                          bool write_paths) {
  std::vector<std::string> files;
  if (write_paths) {
    std::vector<Path> radial;
    std::vector<Path> bm;
    radial.reserve(paths.size());
    bm.reserve(paths.size());
    for (const auto& p : paths) {
      radial.push_back(p.radial);
      bm.push_back(p.bm);
    }
    const bool binary = format == "binary";
    const std::string ext = binary ? ".bin" : ".csv";
    for (auto [name, set] : {std::pair{std::string("radial"), &radial},
                             std::pair{std::string("bm1d"), &bm}}) {
      const std::string file = name + ext;
      std::ofstream out(dir / file, std::ios::binary);
      if (!out) throw IoError("cannot open '" + (dir / file).string() + "'");
      if (binary) {
        write_paths_binary(out, *set, cfg.d);
      } else {
        write_paths_csv(out, *set);
      }
      files.push_back(file);
    }
  }
  write_json(dir / "simulate_summary.json", terminal_summary(paths, cfg));
  files.push_back("simulate_summary.json");
  return files;
}

json envelope_json(const EnvelopeStage& e, std::span<const Path> radial,
                   std::span<const Path> bm, int d, std::uint64_t seed,
                   unsigned threads) {
  EnvelopeOptions opts;
  opts.refine_near_misses = e.refine;
  opts.refine_seed = derive_seed(seed, kRefineLabel);
  opts.threads = threads;
  EnvelopeReport report;
  switch (e.mode) {
    case EnvelopeMode::Upper:
      report = upper_containment(radial, e.rate, d, e.window, opts);
      break;
    case EnvelopeMode::Lower:
      report = lower_containment(radial, e.rate, d, e.window, opts);
      break;
    case EnvelopeMode::Bm:
      report = bm_kolmogorov_check(bm, e.rate, e.window, e.bm_mode, opts);
      break;
  }
  json j = report;
  j["rate"] = e.rate;
  return j;
}

json lil_json(std::span<const Path> radial, int d, Window w) {
  json j = lil_statistic(radial, d, w);
  j["window"] = {w.t_start, w.t_end};
  j["d"] = d;
  return j;
}

json classify_json(const ClassifyStage& c) {
  json j = c.n ? classify_shifted(c.rate, *c.n, c.shift) : classify(c.rate);
  j["rate"] = c.rate;
  if (c.n) {
    j["n"] = *c.n;
    j["shift"] = shift_name(c.shift);
  }
  return j;
}

json error_json(int code, std::string_view type, std::string_view message) {
  return {{"error",
           {{"exit_code", code}, {"type", type}, {"message", message}}}};
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0')
       << static_cast<int>(digest[i]);
  }
  return os.str();
}

std::string sha256_file(const std::string& filename) {
  std::ifstream in(filename, std::ios::binary);
  if (!in) throw IoError("cannot read '" + filename + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

json crosscheck(const CrosscheckStage& stage, std::uint64_t seed,
                unsigned threads) {
  SimConfig cfg;
  cfg.d = stage.d;
  cfg.horizon = stage.t;
  cfg.step = stage.step;
  cfg.path_count = stage.paths;

  // Each (d, t) cell gets its own streams so that cells are independent.
  char cell[64];
  std::snprintf(cell, sizeof cell, "/d%d/t%.17g", stage.d, stage.t);
  cfg.seed = derive_seed(seed, std::string(kCrossRadialLabel) + cell);
  std::vector<double> radial;
  radial.reserve(stage.paths);
  for (const auto& tv : simulate_radial_terminal(cfg, threads)) {
    radial.push_back(tv.radial);
  }
  cfg.seed = derive_seed(seed, std::string(kCrossAmbientLabel) + cell);
  const auto ambient = ambient_terminal_distances(cfg, threads);

  const KsResult ks = ks_two_sample(ambient, radial);
  return {{"ks_statistic", ks.statistic},
          {"p_value", ks.p_value},
          {"n", stage.paths},
          {"d", stage.d},
          {"t", stage.t},
          {"alpha", stage.alpha},
          {"verdict", ks.rejects(stage.alpha) ? "rejected" : "consistent"}};
}

PipelineResult run_pipeline(const RunConfig& config) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir.string() +
                  "': " + ec.message());
  }

  PipelineResult result;
  json timings = json::object();
  auto timed = [&](Stage stage, auto&& body) {
    const auto t0 = clock::now();
    body();
    timings[std::string(stage_name(stage))] =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  std::vector<PairedPaths> paired;
  std::vector<Path> radial;
  std::vector<Path> bm;
  const SimConfig sim =
      simulation_config(config.simulate, derive_seed(config.seed, kSimulateLabel));

  if (config.has(Stage::Simulate)) {
    timed(Stage::Simulate, [&] {
      paired = simulate_radial(sim, config.threads);
      for (const auto& f : write_simulation(dir, paired, sim,
                                            config.simulate.format,
                                            config.simulate.write_paths)) {
        result.artifacts.push_back(f);
      }
      radial.reserve(paired.size());
      bm.reserve(paired.size());
      for (auto& p : paired) {
        radial.push_back(std::move(p.radial));
        bm.push_back(std::move(p.bm));
      }
      paired.clear();
    });
  }
  if (config.has(Stage::Envelope)) {
    timed(Stage::Envelope, [&] {
      for (std::size_t i = 0; i < config.envelope.size(); ++i) {
        const std::string file = "envelope_" + std::to_string(i) + ".json";
        write_json(dir / file, envelope_json(config.envelope[i], radial, bm,
                                             sim.d, config.seed,
                                             config.threads));
        result.artifacts.push_back(file);
      }
    });
  }
  if (config.has(Stage::Lil)) {
    timed(Stage::Lil, [&] {
      write_json(dir / "lil.json", lil_json(radial, sim.d, config.lil_window));
      result.artifacts.push_back("lil.json");
    });
  }
  if (config.has(Stage::Drift)) {
    timed(Stage::Drift, [&] {
      write_json(dir / "drift.json", json(drift_limit(radial)));
      result.artifacts.push_back("drift.json");
    });
  }
  if (config.has(Stage::Classify)) {
    timed(Stage::Classify, [&] {
      for (std::size_t i = 0; i < config.classify.size(); ++i) {
        const std::string file = "classify_" + std::to_string(i) + ".json";
        write_json(dir / file, classify_json(config.classify[i]));
        result.artifacts.push_back(file);
      }
    });
  }
  if (config.has(Stage::Crosscheck)) {
    timed(Stage::Crosscheck, [&] {
      write_json(dir / "crosscheck.json",
                 crosscheck(config.crosscheck, config.seed, config.threads));
      result.artifacts.push_back("crosscheck.json");
    });
  }

  json artifacts = json::array();
  for (const auto& f : result.artifacts) {
    artifacts.push_back({{"file", f},
                         {"sha256", sha256_file((dir / f).string())},
                         {"bytes", fs::file_size(dir / f)}});
  }
  result.manifest = {
      {"tool", "hbm"},
      {"version", HBM_VERSION},
      {"seed", config.seed},
      {"config", serialize_run_config(config)},
      {"artifacts", std::move(artifacts)},
      {"timings_ms", std::move(timings)},
      {"wall_clock_ms",
       std::chrono::duration<double, std::milli>(clock::now() - start).count()}};
  write_json(dir / "manifest.json", result.manifest);
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Escape-rate laboratory for Brownian motion on hyperbolic space",
               "hbm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", HBM_VERSION);

  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = ".";
  auto* seed_opt = app.add_option("--seed", seed, "Top-level random seed");
  auto* threads_opt =
      app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* out_dir_opt = app.add_option("--out-dir", out_dir, "Artifact directory");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate radial and 1D Brownian paths");
  SimulateStage sim;
  std::string preset = "standard";
  std::optional<double> dt_max, rel, dt_max_late;
  sim_cmd->add_option("--d", sim.d, "Dimension of H^d")->required();
  sim_cmd->add_option("--horizon", sim.horizon, "Final time")->required();
  sim_cmd->add_option("--paths", sim.paths, "Number of paths")->required();
  sim_cmd->add_option("--r-init", sim.r_init, "Initial radius");
  sim_cmd->add_option("--preset", preset, "Step preset: fine|standard|coarse");
  sim_cmd->add_option("--dt-max", dt_max, "Uniform step on [0,1]");
  sim_cmd->add_option("--rel", rel, "Relative step cap for t >= 1");
  sim_cmd->add_option("--dt-max-late", dt_max_late, "Absolute step cap for t >= 1");
  sim_cmd->add_option("--format", sim.format, "Path format: binary|csv")
      ->check(CLI::IsMember({"binary", "csv"}));

  // classify
  auto* cls_cmd = app.add_subcommand("classify", "Classify the integral test for g");
  std::string family;
  double param = 0.0;
  double t0 = kDefaultT0;
  std::optional<int> shift_n;
  std::string shift = "minus";
  cls_cmd->add_option("--family", family, "constant|sqrt_loglog|kolmogorov_erdos")->required();
  cls_cmd->add_option("--param", param, "Family parameter")->required();
  cls_cmd->add_option("--t0", t0, "Threshold time");
  cls_cmd->add_option("--n", shift_n, "Shift index n >= 1");
  cls_cmd->add_option("--shift", shift, "plus|minus");

  // envelope
  auto* env_cmd = app.add_subcommand("envelope", "Envelope containment report for stored paths");
  std::string mode = "upper";
  std::string bm_mode = "two_sided";
  std::string window_text;
  std::string input;
  std::optional<int> d_override;
  bool no_refine = false;
  env_cmd->add_option("--mode", mode, "upper|lower|bm")->required();
  env_cmd->add_option("--bm-mode", bm_mode, "two_sided|lower (mode bm)");
  env_cmd->add_option("--family", family, "Rate-function family")->required();
  env_cmd->add_option("--param", param, "Family parameter")->required();
  env_cmd->add_option("--t0", t0, "Threshold time");
  env_cmd->add_option("--window", window_text, "<start>,<end>")->required();
  env_cmd->add_option("--input", input, "Path file (binary or CSV)")->required();
  env_cmd->add_option("--d", d_override, "Dimension (needed for CSV input)");
  env_cmd->add_flag("--no-refine", no_refine, "Disable near-miss refinement");

  // lil
  auto* lil_cmd = app.add_subcommand("lil", "LIL statistic of stored radial paths");
  lil_cmd->add_option("--input", input, "Radial path file")->required();
  lil_cmd->add_option("--window", window_text, "<start>,<end>")->required();
  lil_cmd->add_option("--d", d_override, "Dimension (needed for CSV input)");

  // drift
  auto* drift_cmd = app.add_subcommand("drift", "Terminal slope R_T/T of stored radial paths");
  drift_cmd->add_option("--input", input, "Radial path file")->required();

  // crosscheck
  auto* cross_cmd = app.add_subcommand("crosscheck", "KS test: half-space model vs radial SDE");
  CrosscheckStage cross;
  std::string cross_preset = "fine";
  cross_cmd->add_option("--d", cross.d, "Dimension")->required();
  cross_cmd->add_option("--t", cross.t, "Comparison time")->required();
  cross_cmd->add_option("--paths", cross.paths, "Samples per side")->required();
  cross_cmd->add_option("--preset", cross_preset, "Step preset");
  cross_cmd->add_option("--alpha", cross.alpha, "Significance level");

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute a pipeline config file");
  std::string config_file;
  run_cmd->add_option("--config", config_file, "JSON pipeline config")->required();

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << HBM_VERSION << "\n";
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }

    if (sim_cmd->parsed()) {
      sim.step = step_preset(preset);
      if (dt_max) sim.step.dt_max = *dt_max;
      if (rel) sim.step.rel = *rel;
      if (dt_max_late) sim.step.dt_max_late = *dt_max_late;
      const SimConfig cfg = simulation_config(sim, derive_seed(seed, kSimulateLabel));
      cfg.validate();
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
      const auto paths = simulate_radial(cfg, threads);
      const auto files = write_simulation(out_dir, paths, cfg, sim.format, true);
      out << json{{"out_dir", out_dir}, {"artifacts", files}}.dump() << "\n";
      return kExitOk;
    }
    if (cls_cmd->parsed()) {
      ClassifyStage c;
      c.rate = rate_spec_from_json({{"family", family}, {"param", param}, {"t0", t0}});
      c.n = shift_n;
      c.shift = parse_shift(shift);
      if (c.n && *c.n < 1) throw ConfigError("--n must be >= 1");
      out << classify_json(c).dump(2) << "\n";
      return kExitOk;
    }
    if (env_cmd->parsed()) {
      EnvelopeStage e;
      if (mode == "upper") {
        e.mode = EnvelopeMode::Upper;
      } else if (mode == "lower") {
        e.mode = EnvelopeMode::Lower;
      } else if (mode == "bm") {
        e.mode = EnvelopeMode::Bm;
      } else {
        throw ConfigError("--mode must be upper, lower or bm");
      }
      e.bm_mode = parse_bm_mode(bm_mode);
      e.rate = rate_spec_from_json({{"family", family}, {"param", param}, {"t0", t0}});
      e.window = parse_window(window_text);
      e.refine = !no_refine;
      const PathKind kind = e.mode == EnvelopeMode::Bm ? PathKind::Bm1d : PathKind::Radial;
      PathSet set = read_paths_file(input, kind, d_override.value_or(0));
      if (d_override) set.d = *d_override;
      if (set.kind != kind) {
        throw ConfigError("input holds " + std::string(path_kind_name(set.kind)) +
                          " paths but mode needs " + std::string(path_kind_name(kind)));
      }
      if (e.mode != EnvelopeMode::Bm && set.d < 2) {
        throw ConfigError("dimension unknown: pass --d");
      }
      std::span<const Path> paths = set.paths;
      out << envelope_json(e, paths, paths, set.d, seed, threads).dump(2) << "\n";
      return kExitOk;
    }
    if (lil_cmd->parsed()) {
      PathSet set = read_paths_file(input, PathKind::Radial, d_override.value_or(0));
      if (d_override) set.d = *d_override;
      if (set.d < 2) throw ConfigError("dimension unknown: pass --d");
      out << lil_json(set.paths, set.d, parse_window(window_text)).dump(2) << "\n";
      return kExitOk;
    }
    if (drift_cmd->parsed()) {
      const PathSet set = read_paths_file(input, PathKind::Radial);
      out << json(drift_limit(set.paths)).dump(2) << "\n";
      return kExitOk;
    }
    if (cross_cmd->parsed()) {
      cross.step = step_preset(cross_preset);
      if (cross.d < 2) throw ConfigError("--d must be >= 2");
      if (!(cross.t > 0.0)) throw ConfigError("--t must be positive");
      out << crosscheck(cross, seed, threads).dump(2) << "\n";
      return kExitOk;
    }
    if (run_cmd->parsed()) {
      std::ifstream in(config_file);
      if (!in) throw IoError("cannot open config '" + config_file + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      if (seed_opt->count() > 0) j["seed"] = seed;
      if (threads_opt->count() > 0) j["threads"] = threads;
      if (out_dir_opt->count() > 0) j["out_dir"] = out_dir;
      const RunConfig config = parse_run_config(j);
      const auto result = run_pipeline(config);
      out << json{{"out_dir", config.out_dir}, {"artifacts", result.artifacts}}.dump()
          << "\n";
      return kExitOk;
    }
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    err << error_json(kExitInvalidConfig, "invalid_config", e.what()).dump() << "\n";
    return kExitInvalidConfig;
  } catch (const PreconditionError& e) {
    err << error_json(kExitInvalidConfig, "invalid_config", e.what()).dump() << "\n";
    return kExitInvalidConfig;
  } catch (const DomainError& e) {
    err << error_json(kExitInvalidConfig, "invalid_config", e.what()).dump() << "\n";
    return kExitInvalidConfig;
  } catch (const EvaluationError& e) {
    err << error_json(kExitInvalidConfig, "invalid_config", e.what()).dump() << "\n";
    return kExitInvalidConfig;
  } catch (const NumericalError& e) {
    err << error_json(kExitNumerical, "numerical_failure", e.what()).dump() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    err << error_json(kExitIo, "io_failure", e.what()).dump() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << error_json(kExitIo, "io_failure", e.what()).dump() << "\n";
    return kExitIo;
  }
}

}  // namespace hbm
