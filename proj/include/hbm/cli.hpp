#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbm/run_config.hpp"

namespace hbm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Entry point of the `hbm` tool. Results go to `out`; failures produce a
/// one-line error JSON {"error": {"exit_code", "type", "message"}} on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

/// Two-sample KS comparison of ambient half-space distances against radial
/// SDE samples at time t. Uses independent seeds derived from `seed`.
nlohmann::json crosscheck(const CrosscheckStage& stage, std::uint64_t seed,
                          unsigned threads);

struct PipelineResult {
  std::vector<std::string> artifacts;  // file names relative to out_dir
  nlohmann::json manifest;
};

/// Executes every requested stage, writing artifacts and manifest.json into
/// config.out_dir. Throws the library's error types.
PipelineResult run_pipeline(const RunConfig& config);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& filename);

}  // namespace hbm
