#include "klturb/errors.hpp"
#include "klturb/mcstats.hpp"
#include "klturb/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

using namespace klturb;

TEST_CASE("hand arithmetic on three values")
{
    Estimator e(1);
    for (double v : {1.0, 2.0, 3.0}) e.accumulate(v);
    CHECK(e.count() == 3);
    CHECK(e.mean(0) == doctest::Approx(2.0));
    CHECK(e.m2()[0] == doctest::Approx(2.0));
    CHECK(e.variance(0) == doctest::Approx(1.0));
    CHECK(e.standard_error(0) == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("a single value has no standard error")
{
    Estimator e(1);
    e.accumulate(5.0);
    CHECK_FALSE(e.has_standard_error());
    CHECK(std::isnan(e.standard_error(0)));
    CHECK(std::isnan(e.variance(0)));
}

TEST_CASE("non-finite values are rejected")
{
    Estimator e(2);
    CHECK_THROWS_AS(e.accumulate(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}), NumericalError);
    CHECK_THROWS_AS(e.accumulate(std::vector<double>{std::numeric_limits<double>::infinity(), 0.0}), NumericalError);
    CHECK_THROWS_AS(e.accumulate(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("merging two halves equals the sequential estimator")
{
    Estimator all(2), first(2), second(2);
    std::vector<double> z(2);
    for (std::uint64_t i = 0; i < 1001; ++i) {
        standard_normals(8, Stream::scratch, i, z);
        z[1] = 3.0 + z[1] * z[1];
        all.accumulate(z);
        (i < 400 ? first : second).accumulate(z);
    }
    const auto m = merge(first, second);
    CHECK(m.count() == all.count());
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(m.mean(k) - all.mean(k)) < 1e-12);
        CHECK(std::abs(m.m2()[k] - all.m2()[k]) < 1e-12 * all.m2()[k]);
    }
    CHECK_THROWS_AS(merge(Estimator(1), Estimator(2)), ValidationError);
    CHECK(merge(Estimator(2), first).mean(0) == first.mean(0));
}

TEST_CASE("run_monte_carlo is bit identical for any worker count")
{
    const auto fn = [](std::uint64_t d, std::span<double> out) {
        standard_normals(17, Stream::scratch, d, out);
        out[2] = std::exp(out[2]);
    };
    const std::uint64_t draws = 5 * chunk_draws + 37;
    const auto ref = run_monte_carlo(draws, 3, 1, fn);
    CHECK(ref.count() == draws);
    for (unsigned w : {2u, 3u, 8u, 0u}) {
        const auto e = run_monte_carlo(draws, 3, w, fn);
        CHECK(std::memcmp(e.mean().data(), ref.mean().data(), 3 * sizeof(double)) == 0);
        CHECK(std::memcmp(e.m2().data(), ref.m2().data(), 3 * sizeof(double)) == 0);
    }
    Estimator seq(3);
    std::vector<double> v(3);
    for (std::uint64_t d = 0; d < draws; ++d) {
        fn(d, v);
        seq.accumulate(v);
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(seq.mean(k) - ref.mean(k)) < 1e-12);
}

TEST_CASE("errors inside draws propagate")
{
    const auto bad = [](std::uint64_t d, std::span<double> out) { out[0] = d == 300 ? std::nan("") : 1.0; };
    CHECK_THROWS_AS(run_monte_carlo(1000, 1, 2, bad), NumericalError);
    CHECK(resolve_workers(3) == 3);
    CHECK(resolve_workers(0) >= 1);
}
