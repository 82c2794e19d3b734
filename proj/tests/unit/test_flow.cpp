#include "klturb/errors.hpp"
#include "klturb/flow.hpp"
#include "klturb/mcstats.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace klturb;

namespace {

constexpr double pi = std::numbers::pi;

FlowConfig turbulent_1d()
{
    FlowConfig c;
    c.u = {2.0};
    c.nu = 1e-4;
    c.amplitude = 0.01;
    c.re_star = 2000.0;
    c.length = 1.0;
    return c;
}

const KLBasis& basis_1d()
{
    static const KLBasis b = solve_nystrom(BoxDomain::build(1, {1.0}, 40), Kernel::gaussian(0.1), 16);
    return b;
}

const KLBasis& basis_2d()
{
    static const KLBasis b = solve_nystrom(BoxDomain::build(2, {1.0}, 10), Kernel::gaussian(0.3), 12);
    return b;
}

}  // namespace

TEST_CASE("reynolds number examples")
{
    FlowConfig c;
    c.u = {1.0};
    c.length = 1.0;
    c.nu = 1e-3;
    CHECK(reynolds(c, 1.0) == doctest::Approx(1000.0));
    CHECK(reynolds(c, 0.0) == 0.0);
    const double re = reynolds(c, 0.7);
    c.nu *= 0.5;
    CHECK(reynolds(c, 0.7) == doctest::Approx(2.0 * re));
    c.u = {3.0, 4.0};
    CHECK(speed(c) == 5.0);
}

TEST_CASE("weighting examples")
{
    FlowConfig c;
    c.beta = 0.5;
    c.re_star = 2000.0;
    CHECK(weighting(c, 2500.0) == doctest::Approx(std::sqrt(500.0)));
    CHECK(weighting(c, 1500.0) == 0.0);
    CHECK(weighting(c, 2000.0) == 0.0);
}

TEST_CASE("flow configuration validation")
{
    FlowConfig c;
    c.beta = 0.6;
    try {
        c.validate();
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()) == "beta must lie in (0, 0.5]");
    }
    c.beta = 0.5;
    c.nu = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.nu = 1e-3;
    c.re_star = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.re_star = 10.0;
    CHECK_NOTHROW(c.validate(1));
    CHECK_THROWS_AS(c.validate(2), ValidationError);
    CHECK(resolve_length(c, BoxDomain::build(2, {2.0, 8.0}, 3)).length == doctest::Approx(4.0));
}

TEST_CASE("laminar gate returns u exactly")
{
    auto c = turbulent_1d();
    c.nu = speed(c) * 1.0 / c.re_star;  // RE == RE_* exactly
    const auto& b = basis_1d();
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = sample_turbulent(c, b, seed);
        CHECK((s.values.array() == 2.0).all());
    }
    c.nu *= 3.0;
    CHECK((sample_turbulent(c, b, 1).values.array() == 2.0).all());
    CHECK(turbulent_gradient(c, b, draw_xi(b, 1, 0)).norm() == 0.0);
}

TEST_CASE("turbulent field construction")
{
    const auto c = turbulent_1d();
    const auto& b = basis_1d();
    const double w = flow_weight(c);
    CHECK(w == doctest::Approx(std::sqrt(2.0 / 1e-4 - 2000.0)));
    const Eigen::VectorXd xi = draw_xi(b, 4, 2);
    const auto u = turbulent_field(c, b, xi);
    const auto t = field_values(b, xi);
    for (Eigen::Index j = 0; j < u.rows(); ++j) CHECK(u(j, 0) == doctest::Approx(2.0 * (1.0 + 0.01 * w * t[j])));
    CHECK((turbulent_field(c, b, Eigen::VectorXd::Zero(b.size())).array() == 2.0).all());
    const Eigen::MatrixXd grid = Eigen::MatrixXd::Constant(u.rows(), 1, 2.0);
    CHECK((turbulent_field(c, b, xi, grid) - u).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("turbulent gradient matches the analytic dirichlet derivative")
{
    auto c = turbulent_1d();
    const auto b = dirichlet_basis(BoxDomain::build(2, {1.0}, 6), 3);
    c.u = {1.0, -0.5};
    const double w = flow_weight(c);
    const Eigen::VectorXd xi = draw_xi(b, 3, 0);
    const auto g = turbulent_gradient(c, b, xi);
    for (std::size_t j = 0; j < b.node_count(); ++j) {
        const double x = b.domain().coord(j, 0);
        const double y = b.domain().coord(j, 1);
        for (int db = 0; db < 2; ++db) {
            double dt = 0.0;
            for (int i = 0; i < b.size(); ++i) {
                const auto m = b.dirichlet_modes()[i];
                const double kx = m[0] * pi, ky = m[1] * pi;
                const double d = db == 0 ? 2.0 * kx * std::cos(kx * x) * std::sin(ky * y)
                                         : 2.0 * ky * std::sin(kx * x) * std::cos(ky * y);
                dt += std::sqrt(b.eigenvalues()[i]) * xi[i] * d;
            }
            for (int a = 0; a < 2; ++a)
                CHECK(g(static_cast<Eigen::Index>(j), a * 2 + db) ==
                      doctest::Approx(c.u[a] * c.amplitude * w * dt).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("covariance structure")
{
    auto c = turbulent_1d();
    c.u = {1.0, 0.5};
    const auto& b = basis_2d();
    const double w = flow_weight(c);
    const double a2w2 = c.amplitude * c.amplitude * w * w;
    const auto var = b.variance();
    const auto cov = covariance(c, b, 33, 33);
    for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb)
            CHECK(cov(a, bb) == doctest::Approx(a2w2 * c.u[a] * c.u[bb] * var[33]).epsilon(1e-12));
    // Opposite corners are many correlation lengths apart; this needs a basis whose Mercer sum has converged.
    const auto full = solve_nystrom(b.domain(), b.kernel(), 80);
    REQUIRE(mercer_diagnostics(full).max_pointwise_error < 1e-4);
    const auto far = covariance(c, full, 0, full.node_count() - 1);
    CHECK(far.cwiseAbs().maxCoeff() < 1e-3 * cov.cwiseAbs().maxCoeff());
    CHECK(mean_difference(c, b, 3, 40).norm() == 0.0);
}

TEST_CASE("structure function properties")
{
    auto c = turbulent_1d();
    c.u = {1.0, 0.5};
    const auto& b = basis_2d();
    const std::size_t mid = b.domain().flat_index({5, 5, 0});
    CHECK(structure_function(c, b, mid, {0, 0, 0}) == 0.0);
    const std::size_t k = offset_node(b.domain(), mid, {2, 1, 0});
    const double w = flow_weight(c);
    const auto var = b.variance();
    const double expect =
        c.amplitude * c.amplitude * 1.25 * w * w * (var[mid] + var[k] - 2.0 * b.mercer(mid, k));
    CHECK(structure_function(c, b, mid, {2, 1, 0}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(offset_node(b.domain(), mid, {9, 0, 0}), ValidationError);
}

TEST_CASE("structure function is symmetric under ell to -ell about the grid centre")
{
    auto c = turbulent_1d();
    c.u = {1.0, 0.5};
    const auto b = solve_nystrom(BoxDomain::build(2, {1.0}, 11, QuadratureRule::trapezoid), Kernel::gaussian(0.3), 15);
    const std::size_t mid = b.domain().flat_index({5, 5, 0});
    for (const std::array<int, 3> ell : {std::array<int, 3>{2, 1, 0}, std::array<int, 3>{0, 3, 0}}) {
        const double plus = structure_function(c, b, mid, ell);
        const double minus = structure_function(c, b, mid, {-ell[0], -ell[1], 0});
        CHECK(plus > 0.0);
        CHECK(plus == doctest::Approx(minus).epsilon(1e-10));
    }
}

TEST_CASE("large separation structure function approaches twice the variance")
{
    auto c = turbulent_1d();
    const auto b = solve_nystrom(BoxDomain::build(1, {1.0}, 80), Kernel::gaussian(0.05), 60);
    const double w = flow_weight(c);
    const std::size_t j = 20;
    const double s = structure_function(c, b, j, {40, 0, 0});
    CHECK(s == doctest::Approx(2.0 * c.amplitude * c.amplitude * 4.0 * w * w).epsilon(0.05));
}

TEST_CASE("moment bounds")
{
    auto c = turbulent_1d();
    const auto& b = basis_1d();
    auto lam = c;
    lam.nu = 1.0;
    const auto m = moment_bound_check(lam, b, 12, 0, 2, 100, 1);
    CHECK(m.estimate == doctest::Approx(4.0));
    CHECK(m.holds);
    CHECK(m.bound >= m.estimate);
    for (int p : {2, 4}) {
        const auto t = moment_bound_check(c, b, 12, 0, p, 20000, 1);
        CHECK(t.holds);
        CHECK(std::abs(t.estimate - t.exact) < 4.0 * t.standard_error);
    }
    const auto g = gradient_moment(c, b, 12, 0, 0, 2, 20000, 3);
    CHECK(std::abs(g.estimate - g.analytic_p2) < 4.0 * g.standard_error);
    CHECK(gradient_moment(lam, b, 12, 0, 0, 2, 100, 3).estimate == 0.0);
}

TEST_CASE("vector sobolev expectations")
{
    auto c = turbulent_1d();
    c.amplitude = 0.0;
    const auto& b = basis_2d();
    c.u = {1.0, 2.0};
    CHECK(vector_sobolev_expectation(c, b, 1) == doctest::Approx(5.0 * 1.0).epsilon(1e-12));

    const auto dir = dirichlet_basis(BoxDomain::build(1, {1.0}, 48), 3);
    auto d = turbulent_1d();
    const double w = flow_weight(d);
    double sum = 0.0;
    for (int n = 1; n <= 3; ++n) sum += n * n * pi * pi * (1.0 + n * n * pi * pi);
    const double expect = 4.0 * 1.0 + d.amplitude * d.amplitude * 4.0 * w * w * sum;
    CHECK(vector_sobolev_expectation(d, dir, 1) == doctest::Approx(expect).epsilon(1e-10));

    const auto est = run_monte_carlo(10000, 1, 0, [&](std::uint64_t k, std::span<double> out) {
        out[0] = vector_sobolev_norm(d, dir, draw_xi(dir, 6, k), 1);
    });
    CHECK(std::abs(est.mean(0) - expect) < 3.5 * est.standard_error(0));
}

TEST_CASE("viscosity suppresses the random part")
{
    auto c = turbulent_1d();
    const auto& b = basis_1d();
    const Eigen::VectorXd xi = draw_xi(b, 1, 0);
    double prev = 1e300;
    for (double nu : {1e-4, 2e-4, 5e-4, 9e-4, 1e-3}) {
        c.nu = nu;
        const double dev = (turbulent_field(c, b, xi).array() - 2.0).abs().maxCoeff();
        CHECK(dev <= prev);
        prev = dev;
    }
    CHECK(prev == 0.0);
}

TEST_CASE("verify_flow passes on small bases")
{
    FlowVerifyOptions opt;
    opt.draws = 20000;
    auto c = turbulent_1d();
    c.u = {1.0, 0.5};
    for (const auto& ch : verify_flow(c, basis_2d(), opt)) {
        INFO(ch.name << " value " << ch.value << " reference " << ch.reference << " " << ch.note);
        CHECK(ch.passed);
    }
    auto d = turbulent_1d();
    for (const auto& ch : verify_flow(d, dirichlet_basis(BoxDomain::build(1, {1.0}, 32), 4), opt)) {
        INFO(ch.name << " value " << ch.value << " reference " << ch.reference << " " << ch.note);
        CHECK(ch.passed);
    }
}
