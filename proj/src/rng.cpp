#include "hbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace hbm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Uniform on the open interval (0, 1) with 53 random bits.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(seed ^ h);
}

NormalStream::NormalStream(std::uint64_t seed, StreamId stream,
                           std::uint64_t path)
    : path_(path) {
  const std::uint64_t k =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::array<double, 2> NormalStream::block(
    std::uint64_t block_index) const noexcept {
  const PhiloxCounter out = philox4x32_10(
      {static_cast<std::uint32_t>(block_index),
       static_cast<std::uint32_t>(block_index >> 32),
       static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
      key_);
  // Box-Muller.
  const double u1 = to_open_unit(out[0], out[1]);
  const double u2 = to_open_unit(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

double NormalStream::normal(std::uint64_t index) const noexcept {
  return block(index >> 1)[index & 1];
}

void NormalStream::fill(std::span<double> out,
                        std::uint64_t first) const noexcept {
  std::size_t j = 0;
  std::uint64_t i = first;
  if ((i & 1) && j < out.size()) {
    out[j++] = normal(i++);
  }
  while (j + 1 < out.size()) {
    const auto pair = block(i >> 1);
    out[j++] = pair[0];
    out[j++] = pair[1];
    i += 2;
  }
  if (j < out.size()) out[j] = normal(i);
}

}  // namespace hbm
