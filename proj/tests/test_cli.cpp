#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbm/cli.hpp"
#include "hbm/errors.hpp"
#include "hbm/run_config.hpp"

using namespace hbm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hbm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hbm_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const json& j) {
  const auto file = (dir / "config.json").string();
  std::ofstream(file) << j.dump(2);
  return file;
}

json full_pipeline(const std::string& out_dir) {
  return json{
      {"seed", 77},
      {"out_dir", out_dir},
      {"stages", {"simulate", "envelope", "lil", "drift", "classify", "crosscheck"}},
      {"simulate", {{"d", 3}, {"horizon", 120.0}, {"paths", 40}, {"preset", "standard"}}},
      {"envelope",
       {{{"mode", "upper"},
         {"rate", {{"family", "sqrt_loglog"}, {"param", 3.0}}},
         {"window", {50, 120}}},
        {{"mode", "bm"},
         {"bm_mode", "lower"},
         {"rate", {{"family", "constant"}, {"param", 1.0}}},
         {"window", {50, 120}}}}},
      {"lil", {{"window", {20, 120}}}},
      {"classify", {{{"rate", {{"family", "kolmogorov_erdos"}, {"param", 4}}}}}},
      {"crosscheck", {{"d", 2}, {"t", 1.0}, {"paths", 300}, {"preset", "standard"}}}};
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  return json::parse(in);
}

}  // namespace

TEST_CASE("empty pipeline is an invalid config") {
  const auto dir = scratch("empty");
  const auto file = write_config(dir, json{{"stages", json::array()}});
  const auto r = cli({"run", "--config", file});
  CHECK(r.code == kExitInvalidConfig);
  const auto e = json::parse(r.err);
  CHECK(e.at("error").at("exit_code") == 2);
  CHECK(e.at("error").at("message").get<std::string>().find("no stages requested") !=
        std::string::npos);
  CHECK_THROWS_WITH_AS(parse_run_config(json::object()), "no stages requested",
                       ConfigError);
}

TEST_CASE("classify-only run reports a convergent verdict") {
  const auto dir = scratch("classify");
  const auto file = write_config(
      dir, json{{"out_dir", (dir / "out").string()},
                {"stages", {"classify"}},
                {"classify", {{{"rate", {{"family", "sqrt_loglog"}, {"param", 2.0}}}}}}});
  const auto r = cli({"run", "--config", file});
  REQUIRE(r.code == 0);
  const auto verdict = read_json(dir / "out" / "classify_0.json");
  CHECK(verdict.at("verdict") == "Convergent");
  const auto manifest = read_json(dir / "out" / "manifest.json");
  CHECK(manifest.at("artifacts").size() == 1);
  CHECK(manifest.at("artifacts")[0].at("file") == "classify_0.json");
  CHECK(manifest.at("artifacts")[0].at("sha256") ==
        sha256_file((dir / "out" / "classify_0.json").string()));
}

TEST_CASE("full pipeline is reproducible from its manifest") {
  const auto dir = scratch("repro");
  const auto a = (dir / "a").string();
  const auto b = (dir / "b").string();
  const auto c = (dir / "c").string();
  REQUIRE(cli({"run", "--config", write_config(dir, full_pipeline(a))}).code == 0);
  REQUIRE(cli({"run", "--config", write_config(dir, full_pipeline(b))}).code == 0);
  const auto ma = read_json(fs::path(a) / "manifest.json");
  const auto mb = read_json(fs::path(b) / "manifest.json");
  CHECK(ma.at("artifacts") == mb.at("artifacts"));
  CHECK(ma.at("artifacts").size() == 9);
  for (const auto& art : ma.at("artifacts")) {
    CHECK(sha256_file((fs::path(b) / art.at("file").get<std::string>()).string()) ==
          art.at("sha256"));
  }

  // Replaying the recorded config into a new directory reproduces the bytes.
  json replay = ma.at("config");
  REQUIRE(cli({"run", "--config", write_config(dir, replay), "--out-dir", c}).code == 0);
  CHECK(read_json(fs::path(c) / "manifest.json").at("artifacts") == ma.at("artifacts"));

  // Thread count does not change any artifact.
  const auto d = (dir / "d").string();
  REQUIRE(cli({"run", "--config", write_config(dir, full_pipeline(d)), "--threads", "3"})
              .code == 0);
  CHECK(read_json(fs::path(d) / "manifest.json").at("artifacts") == ma.at("artifacts"));

  // A different seed changes the simulated paths.
  const auto e = (dir / "e").string();
  REQUIRE(cli({"run", "--config", write_config(dir, full_pipeline(e)), "--seed", "78"})
              .code == 0);
  CHECK(read_json(fs::path(e) / "manifest.json").at("artifacts") != ma.at("artifacts"));

  CHECK(ma.at("timings_ms").contains("simulate"));
  CHECK(ma.at("seed") == 77);
  CHECK(ma.at("tool") == "hbm");
}

TEST_CASE("config round trip is idempotent") {
  const json raw = full_pipeline("x");
  const auto once = serialize_run_config(parse_run_config(raw));
  const auto twice = serialize_run_config(parse_run_config(once));
  CHECK(once == twice);
  CHECK(once.at("simulate").at("dt_max") == 1e-2);
  CHECK(once.at("simulate").at("dt_max_late") == 0.5);
  CHECK(once.at("crosscheck").at("alpha") == 0.01);
  CHECK(once.at("envelope")[0].at("rate").at("t0") == 16.0);
  CHECK(once.at("stages")[0] == "simulate");

  // Explicit step keys win over the preset they refine.
  json custom = raw;
  custom["simulate"]["rel"] = 0.05;
  custom["simulate"]["dt_max_late"] = nullptr;
  const auto c = parse_run_config(custom);
  CHECK(c.simulate.step.rel == 0.05);
  CHECK(std::isinf(c.simulate.step.dt_max_late));
  CHECK(serialize_run_config(c).at("simulate").at("dt_max_late").is_null());
}

TEST_CASE("config validation") {
  auto bad = [](json j) {
    CHECK_THROWS_AS(parse_run_config(j), ConfigError);
  };
  json j = full_pipeline("x");
  j["extra"] = 1;
  bad(j);
  j = full_pipeline("x");
  j["simulate"]["d"] = 1;
  bad(j);
  j = full_pipeline("x");
  j["stages"] = {"envelope"};
  bad(j);
  j = full_pipeline("x");
  j["envelope"][0]["rate"]["param"] = -1.0;
  bad(j);
  j = full_pipeline("x");
  j["envelope"][0]["window"] = {100, 50};
  bad(j);
  j = full_pipeline("x");
  j["lil"]["window"] = {10, 100};
  bad(j);
  j = full_pipeline("x");
  j["stages"] = {"teleport"};
  bad(j);
  j = full_pipeline("x");
  j["simulate"]["rel"] = 0.5;
  bad(j);
  j = full_pipeline("x");
  j["classify"][0]["n"] = 0;
  bad(j);
}

TEST_CASE("subcommands") {
  const auto dir = scratch("sub");
  const auto out = dir.string();

  auto r = cli({"classify", "--family", "sqrt_loglog", "--param", "1"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("verdict") == "Divergent");
  r = cli({"classify", "--family", "kolmogorov_erdos", "--param", "5", "--n", "3",
           "--shift", "plus"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("verdict") == "Convergent");
  r = cli({"classify", "--family", "sqrt_loglog", "--param", "-1"});
  CHECK(r.code == kExitInvalidConfig);

  r = cli({"--seed", "5", "--out-dir", out, "simulate", "--d", "3", "--horizon", "200",
           "--paths", "30"});
  REQUIRE(r.code == 0);
  const auto sim = json::parse(r.out);
  CHECK(sim.at("artifacts").size() >= 2);
  const auto radial = (dir / "radial.bin").string();
  const auto bm = (dir / "bm1d.bin").string();
  REQUIRE(fs::exists(radial));
  REQUIRE(fs::exists(bm));

  r = cli({"envelope", "--mode", "upper", "--family", "sqrt_loglog", "--param", "3",
           "--window", "50,200", "--input", radial});
  REQUIRE(r.code == 0);
  auto rep = json::parse(r.out);
  CHECK(rep.at("kind") == "upper_containment");
  CHECK(rep.at("n_paths") == 30);

  r = cli({"envelope", "--mode", "bm", "--bm-mode", "lower", "--family", "constant",
           "--param", "1", "--window", "50,200", "--input", bm});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("kind") == "bm_lower_crossing");

  // Wrong path kind for the mode.
  r = cli({"envelope", "--mode", "bm", "--family", "constant", "--param", "1",
           "--window", "50,200", "--input", radial});
  CHECK(r.code == kExitInvalidConfig);

  r = cli({"drift", "--input", radial});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("mean").get<double>() == doctest::Approx(1.0).epsilon(0.15));

  r = cli({"lil", "--input", radial, "--window", "20,200"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("suprema").size() == 30);

  r = cli({"crosscheck", "--d", "2", "--t", "1", "--paths", "200", "--preset", "standard"});
  REQUIRE(r.code == 0);
  const auto x = json::parse(r.out);
  CHECK(x.at("ks_statistic").get<double>() >= 0.0);
  CHECK(x.at("p_value").get<double>() <= 1.0);

  r = cli({"drift", "--input", (dir / "missing.bin").string()});
  CHECK(r.code == kExitIo);
  CHECK(json::parse(r.err).at("error").at("exit_code") == kExitIo);

  r = cli({"bogus"});
  CHECK(r.code == kExitInvalidConfig);
}

TEST_CASE("installed tool reports exit codes") {
  const char* tool = std::getenv("HBM_TOOL");
  if (tool == nullptr) return;
  const auto dir = scratch("tool");
  const auto file = write_config(dir, json{{"stages", json::array()}});
  const std::string base = std::string(tool) + " ";
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  CHECK(status(base + "run --config " + file) == 2);
  CHECK(status(base + "run --config " + (dir / "nope.json").string()) == 4);
  CHECK(status(base + "classify --family constant --param 1") == 0);
  CHECK(status(base + "--version") == 0);
}

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
