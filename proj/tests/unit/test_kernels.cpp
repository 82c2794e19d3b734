#include "klturb/errors.hpp"
#include "klturb/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace klturb;

namespace {

using Pt = std::vector<double>;

double fd_grad(const Kernel& k, Pt x, const Pt& y, int a, double h)
{
    Pt xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    return (k.eval(xp, y) - k.eval(xm, y)) / (2.0 * h);
}

double fd_mixed(const Kernel& k, const Pt& x, const Pt& y, int a, int b, double h)
{
    Pt yp = y, ym = y;
    yp[b] += h;
    ym[b] -= h;
    return (fd_grad(k, x, yp, a, h) - fd_grad(k, x, ym, a, h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("kernel values at simple separations")
{
    const auto g = Kernel::gaussian(0.3);
    CHECK(g.eval(Pt{0.4}, Pt{0.4}) == 1.0);
    CHECK(g.eval(Pt{0.1, 0.0}, Pt{0.1, 0.3}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    for (double alpha : {0.5, 1.0, 4.0})
        CHECK(Kernel::rational_quadratic(0.2, alpha).eval(Pt{0.7}, Pt{0.7}) == 1.0);
    const auto rq = Kernel::rational_quadratic(0.5, 2.0, 3.0);
    CHECK(rq.eval(Pt{0.0}, Pt{0.5}) == doctest::Approx(3.0 * std::pow(1.0 + 0.25 / (2.0 * 2.0 * 0.25), -2.0)));
}

TEST_CASE("stationary kernels are symmetric and translation invariant")
{
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& k : {Kernel::gaussian(0.2), Kernel::rational_quadratic(0.3, 1.5)})
        for (int i = 0; i < 50; ++i) {
            const Pt x{u(gen), u(gen)}, y{u(gen), u(gen)};
            const Pt xs{x[0] + 0.25, x[1] - 0.1}, ys{y[0] + 0.25, y[1] - 0.1};
            CHECK(k.eval(x, y) == k.eval(y, x));
            CHECK(k.eval(xs, ys) == doctest::Approx(k.eval(x, y)).epsilon(1e-12));
        }
}

TEST_CASE("grad_x examples")
{
    const auto g = Kernel::gaussian(1.0);
    CHECK(g.grad_x(Pt{0.3, 0.2}, Pt{0.3, 0.2}).norm() == 0.0);
    CHECK(g.grad_x(Pt{0.5}, Pt{0.0})[0] == doctest::Approx(-std::exp(-0.25)).epsilon(1e-14));
    CHECK(Kernel::rational_quadratic(0.4, 2.0).grad_x(Pt{0.5}, Pt{0.5})[0] == 0.0);
    CHECK((g.grad_y(Pt{0.1}, Pt{0.6}) + g.grad_x(Pt{0.1}, Pt{0.6})).norm() == 0.0);
}

TEST_CASE("grad_x matches central differences of eval")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& k : {Kernel::gaussian(0.3), Kernel::rational_quadratic(0.25, 0.7, 2.0)}) {
        const double h = 1e-5 * k.lambda();
        int checked = 0;
        for (int i = 0; i < 120; ++i) {
            const Pt x{u(gen), u(gen), u(gen)}, y{u(gen), u(gen), u(gen)};
            const auto g = k.grad_x(x, y);
            for (int a = 0; a < 3; ++a) {
                const double fd = fd_grad(k, x, y, a, h);
                // Relative to the gradient magnitude so near-zero components are not ill-posed.
                CHECK(std::abs(g[a] - fd) <= 1e-6 * std::max(g.norm(), 1e-8));
            }
            ++checked;
        }
        CHECK(checked >= 100);
    }
}

TEST_CASE("mixed_grad examples and nested finite differences")
{
    CHECK(Kernel::gaussian(1.0).mixed_grad(Pt{0.2}, Pt{0.2})(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(Kernel::gaussian(0.5).mixed_grad(Pt{0.2}, Pt{0.2})(0, 0) == doctest::Approx(8.0).epsilon(1e-14));

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& k : {Kernel::gaussian(0.4), Kernel::rational_quadratic(0.3, 1.2)}) {
        const Pt c{0.5, 0.5};
        CHECK(k.mixed_grad(c, c).trace() > 0.0);
        for (int i = 0; i < 30; ++i) {
            const Pt x{u(gen), u(gen)}, y{u(gen), u(gen)};
            const auto m = k.mixed_grad(x, y);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    CHECK(std::abs(m(a, b) - fd_mixed(k, x, y, a, b, 1e-4 * k.lambda())) <=
                          1e-4 * std::max(m.norm(), 1e-8));
        }
    }
}

TEST_CASE("dirichlet modes and kernel")
{
    const std::vector<double> unit{1.0, 1.0};
    const auto modes = dirichlet_mode_indices(unit, 4);
    REQUIRE(modes.size() == 4);
    CHECK(modes[0] == std::array<int, 3>{1, 1, 0});
    CHECK(modes[1] == std::array<int, 3>{1, 2, 0});
    CHECK(modes[2] == std::array<int, 3>{2, 1, 0});
    CHECK(modes[3] == std::array<int, 3>{2, 2, 0});
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(dirichlet_eigenvalue(unit, modes[1]) == doctest::Approx(5.0 * pi2));

    const std::vector<double> side{2.0};
    const Pt x{0.3};
    CHECK(dirichlet_mode_value(side, {3, 0, 0}, x) ==
          doctest::Approx(std::sqrt(2.0 / 2.0) * std::sin(3.0 * std::numbers::pi * 0.3 / 2.0)));

    const auto k = Kernel::analytic_dirichlet(2, {1.0});
    const Pt y{0.6};
    const double f1x = std::sqrt(2.0) * std::sin(std::numbers::pi * 0.3);
    const double f1y = std::sqrt(2.0) * std::sin(std::numbers::pi * 0.6);
    const double f2x = std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 0.3);
    const double f2y = std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 0.6);
    CHECK(k.eval(x, y) == doctest::Approx(pi2 * f1x * f1y + 4.0 * pi2 * f2x * f2y).epsilon(1e-13));
    CHECK_FALSE(k.stationary());
    CHECK_THROWS_AS(k.grad_x(x, y), ValidationError);
    CHECK_THROWS_AS(k.mixed_grad(x, y), ValidationError);
}

TEST_CASE("kernel parameters are validated")
{
    CHECK_THROWS_AS(Kernel::gaussian(0.0), ValidationError);
    CHECK_THROWS_AS(Kernel::rational_quadratic(0.2, -1.0), ValidationError);
    CHECK_THROWS_AS(Kernel::analytic_dirichlet(0, {1.0}), ValidationError);
    CHECK_THROWS_AS(kernel_type_from_string("matern"), ValidationError);
    CHECK(kernel_type_from_string("rq") == KernelType::rational_quadratic);
}

TEST_CASE("gaussian spectral density reproduces the gaussian kernel")
{
    const double lambda = 0.2;
    SpectralOptions opt;
    opt.cutoff = 16.0 / lambda;
    const auto k = kernel_from_spectral_density([&](double xi) { return gaussian_spectral_density(lambda, xi); }, opt);
    CHECK(k.zero_lag() == doctest::Approx(1.0).epsilon(1e-10));
    for (double r = 0.0; r <= 1.0; r += 0.05) CHECK(std::abs(k.at_lag(r) - std::exp(-r * r / (lambda * lambda))) < 1e-10);
    CHECK(k(0.1, 0.45) == k(0.45, 0.1));
}

TEST_CASE("truncated white noise is a spike and is rejected when convergence is required")
{
    SpectralOptions opt;
    opt.cutoff = 200.0;
    CHECK_THROWS_AS(kernel_from_spectral_density([](double) { return 1.0; }, opt), ValidationError);
    opt.require_convergence = false;
    opt.normalize = true;
    const auto k = kernel_from_spectral_density([](double) { return 1.0; }, opt);
    CHECK(k.zero_lag() == doctest::Approx(1.0));
    // Normalized transform of the box spectrum is sin(c r) / (c r).
    for (double r : {0.01, 0.05, 0.3}) CHECK(k.at_lag(r) == doctest::Approx(std::sin(200.0 * r) / (200.0 * r)).scale(1.0).epsilon(1e-8));
    CHECK(std::abs(k.at_lag(0.5)) < 0.02);
}
