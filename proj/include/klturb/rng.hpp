#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace klturb {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Logical sub-streams so independent checks never share normals.
enum class Stream : std::uint32_t {
    field = 0,
    gaussian_moment = 1,
    scratch = 2,
};

/// Standard normals for one draw, keyed by (seed, stream, draw, mode). The value for a
/// given mode does not depend on out.size(), so truncating a basis keeps the leading xi.
void standard_normals(std::uint64_t seed, Stream stream, std::uint64_t draw, std::span<double> out);

/// Uniform on (0, 1] from 64 random bits.
double unit_uniform(std::uint64_t bits);

}  // namespace klturb
