#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace gqmc {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3", SC'11). Pure function of counter and key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Separates independent uses of the same master seed.
enum class NoiseDomain : std::uint32_t {
  trajectory = 0,
  branching = 1,
  stream_derivation = 2,
  auxiliary = 3,
};

/// Address of one block of draws: (seed, stream, counter) always maps to the
/// same numbers, whatever thread asks and in whatever order.
struct NoiseStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;
  NoiseDomain domain = NoiseDomain::trajectory;
};

/// Fills `out` with independent zero-mean normals of the given variance.
/// The counter must fit in 32 bits.
void gaussian_draws(const NoiseStream& stream, double variance, std::span<double> out);
std::vector<double> gaussian_draws(const NoiseStream& stream, std::size_t count, double variance);

/// Uniform draws in [0, 1).
void uniform_draws(const NoiseStream& stream, std::span<double> out);
double uniform_draw(const NoiseStream& stream, std::uint32_t component);

/// Fresh stream id for a branched clone, fixed by (parent, generation, copy).
std::uint64_t derive_stream_id(std::uint64_t master_seed, std::uint64_t parent,
                               std::uint64_t generation, std::uint64_t copy) noexcept;

}  // namespace gqmc
