#include "klturb/rng.hpp"

#include <cmath>
#include <numbers>

namespace klturb {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k)
{
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += w0;
        k[1] += w1;
    }
    return c;
}

double unit_uniform(std::uint64_t bits)
{
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

void standard_normals(std::uint64_t seed, Stream stream, std::uint64_t draw, std::span<double> out)
{
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (std::size_t block = 0; 2 * block < out.size(); ++block) {
        const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32),
                                               static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(stream)};
        const auto r = philox4x32(ctr, key);
        const double u1 = unit_uniform((static_cast<std::uint64_t>(r[1]) << 32) | r[0]);
        const double u2 = unit_uniform((static_cast<std::uint64_t>(r[3]) << 32) | r[2]);
        // Box-Muller: u1 in (0, 1] keeps the log finite.
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[2 * block] = radius * std::cos(angle);
        if (2 * block + 1 < out.size()) out[2 * block + 1] = radius * std::sin(angle);
    }
}

}  // namespace klturb
