#include "gqmc/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gqmc {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 2> make_key(std::uint64_t seed, NoiseDomain domain) {
  const auto tag = static_cast<std::uint32_t>(domain) * 0x85EBCA6Bu;
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) ^ tag};
}

std::array<std::uint32_t, 4> block(const NoiseStream& stream, std::uint32_t index) {
  if (stream.counter > 0xFFFFFFFFull) {
    throw std::out_of_range("noise counter exceeds 32 bits");
  }
  return philox4x32({index, static_cast<std::uint32_t>(stream.counter),
                     static_cast<std::uint32_t>(stream.stream_id),
                     static_cast<std::uint32_t>(stream.stream_id >> 32)},
                    make_key(stream.master_seed, stream.domain));
}

// 53-bit uniform in [0,1) from two 32-bit words.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return static_cast<double>(bits & ((1ull << 53) - 1)) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

void uniform_draws(const NoiseStream& stream, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); k += 2) {
    const auto words = block(stream, static_cast<std::uint32_t>(k / 2));
    out[k] = to_unit(words[0], words[1]);
    if (k + 1 < out.size()) out[k + 1] = to_unit(words[2], words[3]);
  }
}

double uniform_draw(const NoiseStream& stream, std::uint32_t component) {
  const auto words = block(stream, component / 2);
  return component % 2 == 0 ? to_unit(words[0], words[1]) : to_unit(words[2], words[3]);
}

void gaussian_draws(const NoiseStream& stream, double variance, std::span<double> out) {
  if (variance < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  if (variance == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double scale = std::sqrt(variance);
  // Box-Muller on one Philox block per pair of normals.
  for (std::size_t k = 0; k < out.size(); k += 2) {
    const auto words = block(stream, static_cast<std::uint32_t>(k / 2));
    const double u1 = 1.0 - to_unit(words[0], words[1]);  // (0, 1]
    const double u2 = to_unit(words[2], words[3]);
    const double radius = scale * std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[k] = radius * std::cos(angle);
    if (k + 1 < out.size()) out[k + 1] = radius * std::sin(angle);
  }
}

std::vector<double> gaussian_draws(const NoiseStream& stream, std::size_t count,
                                   double variance) {
  std::vector<double> out(count);
  gaussian_draws(stream, variance, out);
  return out;
}

std::uint64_t derive_stream_id(std::uint64_t master_seed, std::uint64_t parent,
                               std::uint64_t generation, std::uint64_t copy) noexcept {
  const auto key = make_key(master_seed, NoiseDomain::stream_derivation);
  const auto words = philox4x32(
      {static_cast<std::uint32_t>(parent), static_cast<std::uint32_t>(parent >> 32),
       static_cast<std::uint32_t>(generation),
       static_cast<std::uint32_t>(copy) ^ (static_cast<std::uint32_t>(generation >> 32) << 16)},
      key);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace gqmc
