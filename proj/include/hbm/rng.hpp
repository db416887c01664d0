#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace hbm {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for a named stage: splitmix64(seed ^ fnv1a64(label)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

/// Stream identifiers. A stream is keyed by (seed, stream id); within it each
/// path owns an independent random-access sequence of standard normals.
enum class StreamId : std::uint32_t {
  DrivingNoise = 1,  // 1D Brownian increments shared by bm1d and radial paths
  Ambient = 2,       // half-space Brownian motion, d normals per step
  Refinement = 3,    // bridge midpoints for envelope near-miss refinement
};

/// Random-access standard normals for one (seed, stream, path) triple.
/// normal(i) depends only on (seed, stream, path, i), never on call order.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, StreamId stream, std::uint64_t path);

  double normal(std::uint64_t index) const noexcept;

  /// out[j] = normal(first + j).
  void fill(std::span<double> out, std::uint64_t first = 0) const noexcept;

 private:
  std::array<double, 2> block(std::uint64_t block_index) const noexcept;

  PhiloxKey key_;
  std::uint64_t path_;
};

}  // namespace hbm
