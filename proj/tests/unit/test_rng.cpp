#include "klturb/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

using namespace klturb;

TEST_CASE("philox4x32-10 known-answer vectors")
{
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, A2{0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, A2{0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("unit uniform covers (0, 1]")
{
    CHECK(unit_uniform(0) == std::ldexp(1.0, -53));
    CHECK(unit_uniform(~std::uint64_t{0}) == 1.0);
}

TEST_CASE("normals follow Box-Muller on the keyed counter")
{
    const std::uint64_t seed = 0x123456789abcdefULL;
    const std::uint64_t draw = 0x100000002ULL;
    std::vector<double> z(5);
    standard_normals(seed, Stream::field, draw, z);
    for (std::uint32_t block = 0; block < 3; ++block) {
        const auto r = philox4x32({2u, 1u, block, 0u}, {0x89abcdefu, 0x01234567u});
        const double u1 = (static_cast<double>(((static_cast<std::uint64_t>(r[1]) << 32 | r[0]) >> 11) + 1)) / 9007199254740992.0;
        const double u2 = (static_cast<double>(((static_cast<std::uint64_t>(r[3]) << 32 | r[2]) >> 11) + 1)) / 9007199254740992.0;
        const double rad = std::sqrt(-2.0 * std::log(u1));
        CHECK(z[2 * block] == rad * std::cos(2.0 * std::numbers::pi * u2));
        if (2 * block + 1 < z.size()) CHECK(z[2 * block + 1] == rad * std::sin(2.0 * std::numbers::pi * u2));
    }
}

TEST_CASE("normals are deterministic, prefix stable and stream separated")
{
    std::vector<double> a(7), b(7), c(3), d(7);
    standard_normals(42, Stream::field, 9, a);
    standard_normals(42, Stream::field, 9, b);
    standard_normals(42, Stream::field, 9, c);
    standard_normals(42, Stream::scratch, 9, d);
    CHECK(a == b);
    for (int i = 0; i < 3; ++i) CHECK(c[i] == a[i]);
    CHECK(a != d);
    standard_normals(43, Stream::field, 9, d);
    CHECK(a != d);
}

TEST_CASE("one million normals have mean 0 and variance 1")
{
    std::vector<double> z(1000);
    double s = 0.0, s2 = 0.0;
    for (std::uint64_t draw = 0; draw < 1000; ++draw) {
        standard_normals(3, Stream::scratch, draw, z);
        for (double v : z) {
            s += v;
            s2 += v * v;
        }
    }
    const double n = 1e6;
    const double mean = s / n;
    CHECK(std::abs(mean) < 4e-3);
    CHECK(std::abs((s2 - n * mean * mean) / (n - 1) - 1.0) < 0.01);
}
