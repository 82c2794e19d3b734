#include "klturb/errors.hpp"
#include "klturb/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace klturb;

namespace {

constexpr double pi = std::numbers::pi;

/// Eigenpairs of the unsymmetrized Nystrom matrix K W by a general (nonsymmetric) solver,
/// eigenvalues descending, eigenvectors W-normalized.
struct DenseOracle {
    std::vector<double> z;
    Eigen::MatrixXd f;
};

DenseOracle dense_oracle(const BoxDomain& d, const Kernel& k)
{
    const auto n = static_cast<Eigen::Index>(d.node_count());
    Eigen::MatrixXd km(n, n);
    std::vector<double> x(d.dim()), y(d.dim());
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            for (int a = 0; a < d.dim(); ++a) {
                x[a] = d.coord(r, a);
                y[a] = d.coord(c, a);
            }
            km(r, c) = k.eval(x, y) * d.weight(c);
        }
    Eigen::EigenSolver<Eigen::MatrixXd> es(km);
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return es.eigenvalues()[a].real() > es.eigenvalues()[b].real(); });
    DenseOracle o;
    o.f.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        o.z.push_back(es.eigenvalues()[order[i]].real());
        Eigen::VectorXd v = es.eigenvectors().col(order[i]).real();
        double norm2 = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) norm2 += d.weight(j) * v[j] * v[j];
        o.f.col(i) = v / std::sqrt(norm2);
    }
    return o;
}

}  // namespace

TEST_CASE("nystrom eigenvalues are descending and sum to the volume")
{
    const auto d = BoxDomain::build(1, {1.0}, 64);
    const auto b = solve_nystrom(d, Kernel::gaussian(0.2), 20);
    REQUIRE(b.size() == 20);
    CHECK_FALSE(b.truncated());
    const auto& z = b.eigenvalues();
    for (int i = 1; i < z.size(); ++i) CHECK(z[i] <= z[i - 1]);
    CHECK(std::abs(z.sum() - 1.0) < 0.01);
}

TEST_CASE("nystrom agrees with a general dense eigensolver")
{
    SUBCASE("1D gaussian")
    {
        const auto d = BoxDomain::build(1, {1.0}, 48);
        const auto b = solve_nystrom(d, Kernel::gaussian(0.2), 12);
        const auto o = dense_oracle(d, Kernel::gaussian(0.2));
        for (int i = 0; i < b.size(); ++i) {
            CHECK(std::abs(b.eigenvalues()[i] - o.z[i]) < 1e-12 * o.z[0] + 1e-10 * o.z[i]);
            // Well separated leading modes agree up to sign.
            if (i < 8) {
                const double s = b.eigenfunctions().col(i).dot(o.f.col(i)) > 0 ? 1.0 : -1.0;
                CHECK((b.eigenfunctions().col(i) - s * o.f.col(i)).cwiseAbs().maxCoeff() < 1e-7);
            }
        }
    }
    SUBCASE("2D rational quadratic on a trapezoid grid")
    {
        const auto d = BoxDomain::build(2, {1.0, 1.5}, 9, QuadratureRule::trapezoid);
        const auto k = Kernel::rational_quadratic(0.4, 1.5);
        const auto b = solve_nystrom(d, k, 15);
        const auto o = dense_oracle(d, k);
        for (int i = 0; i < b.size(); ++i) CHECK(std::abs(b.eigenvalues()[i] - o.z[i]) < 1e-11 * o.z[0]);
    }
}

TEST_CASE("nystrom basis is orthonormal and solves the discrete Fredholm problem")
{
    const auto d = BoxDomain::build(2, {1.0}, 10);
    const auto b = solve_nystrom(d, Kernel::gaussian(0.3), 25);
    CHECK(orthonormality_error(b) < 1e-12);
    CHECK(fredholm_residual(b) < 1e-12 * b.eigenvalues()[0]);
}

TEST_CASE("nystrom sign convention")
{
    const auto d = BoxDomain::build(1, {1.0}, 40);
    const auto b = solve_nystrom(d, Kernel::gaussian(0.25), 8);
    for (int i = 0; i < b.size(); ++i) {
        const Eigen::VectorXd f = b.eigenfunctions().col(i);
        if (std::abs(f.sum()) > 1e-10 * f.cwiseAbs().sum()) {
            CHECK(f.sum() > 0.0);
        } else {
            const double cut = 1e-10 * f.cwiseAbs().maxCoeff();
            Eigen::Index j = 0;
            while (std::abs(f[j]) <= cut) ++j;
            CHECK(f[j] > 0.0);
        }
    }
}

TEST_CASE("eigenvalue floor truncates and flags")
{
    const auto d = BoxDomain::build(1, {1.0}, 64);
    const auto b = solve_nystrom(d, Kernel::gaussian(0.2), 40);
    CHECK(b.truncated());
    CHECK(b.size() < 40);
    CHECK(b.eigenvalues()[b.size() - 1] > eigenvalue_floor * b.eigenvalues()[0]);
}

TEST_CASE("long correlation length gives a nearly rank-one kernel")
{
    const auto d = BoxDomain::build(1, {1.0}, 32);
    const auto b = solve_nystrom(d, Kernel::gaussian(10.0), 3);
    CHECK(b.eigenvalues()[0] == doctest::Approx(1.0).epsilon(0.01));
    CHECK(b.eigenvalues()[1] < 0.01 * b.eigenvalues()[0]);
    const auto m = mercer_diagnostics(solve_nystrom(d, Kernel::gaussian(10.0), 1));
    CHECK(m.kl_l2_tail >= 0.0);
    CHECK(m.kl_l2_tail < 0.01);
}

TEST_CASE("mercer reconstruction error decreases with the truncation")
{
    const auto d = BoxDomain::build(1, {1.0}, 64);
    double prev = 1e300;
    for (int n : {5, 10, 20, 40}) {
        const auto m = mercer_diagnostics(solve_nystrom(d, Kernel::gaussian(0.2), n));
        CHECK(m.max_pointwise_error <= prev);
        prev = m.max_pointwise_error;
    }
    CHECK(prev < 1e-3);
    const auto full = mercer_diagnostics(solve_nystrom(d, Kernel::gaussian(0.2), 64));
    CHECK(full.trace_error < 1e-6);
    CHECK(full.kl_l2_tail > -1e-8);
}

TEST_CASE("dirichlet basis matches separation of variables")
{
    const auto d = BoxDomain::build(1, {1.0}, 32);
    const auto b = dirichlet_basis(d, 3);
    CHECK(b.exact_derivatives());
    CHECK(b.eigenvalues()[0] == doctest::Approx(pi * pi).epsilon(1e-14));
    CHECK(b.eigenvalues()[2] == doctest::Approx(9.0 * pi * pi).epsilon(1e-14));
    for (std::size_t j = 0; j < d.node_count(); ++j) {
        const double x = d.coord(j, 0);
        CHECK(b.eigenfunctions()(j, 0) == doctest::Approx(std::sqrt(2.0) * std::sin(pi * x)).epsilon(1e-13));
        CHECK(b.gradient(0)(j, 0) == doctest::Approx(std::sqrt(2.0) * pi * std::cos(pi * x)).epsilon(1e-12).scale(1.0));
        CHECK(b.hessian(0, 0)(j, 1) ==
              doctest::Approx(-4.0 * pi * pi * std::sqrt(2.0) * std::sin(2.0 * pi * x)).epsilon(1e-12).scale(1.0));
    }
    const auto bi = basis_integrals(b);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(bi.H[i] - 1.0) < 1e-12);
        CHECK(std::abs(bi.H_grad[i] - b.eigenvalues()[i]) < 1e-10 * b.eigenvalues()[i]);
    }
    CHECK(bi.H_grad[1] == doctest::Approx(4.0 * pi * pi).epsilon(1e-10));
}

TEST_CASE("dirichlet basis in 2D has analytic mixed second derivatives")
{
    const auto d = BoxDomain::build(2, {1.0, 2.0}, 8);
    const auto b = dirichlet_basis(d, 4);
    for (int i = 0; i < b.size(); ++i) {
        const auto m = b.dirichlet_modes()[i];
        const double k0 = m[0] * pi / 1.0;
        const double k1 = m[1] * pi / 2.0;
        const double c = std::sqrt(2.0 / 1.0) * std::sqrt(2.0 / 2.0);
        CHECK(b.eigenvalues()[i] == doctest::Approx(k0 * k0 + k1 * k1));
        for (std::size_t j = 0; j < d.node_count(); ++j) {
            const double x = d.coord(j, 0);
            const double y = d.coord(j, 1);
            CHECK(b.hessian(0, 1)(j, i) ==
                  doctest::Approx(c * k0 * k1 * std::cos(k0 * x) * std::cos(k1 * y)).epsilon(1e-12).scale(1.0));
            const std::vector<double> p{x, y};
            CHECK(b.evaluate_mode(i, p) == doctest::Approx(b.eigenfunctions()(j, i)).epsilon(1e-14).scale(1.0));
        }
    }
}

TEST_CASE("nystrom gradients agree with the derivative of the Nystrom interpolant")
{
    // f_I(x) = (1/Z_I) sum_k w_k K(x, x_k) f_I(x_k) is smooth, so its exact derivative is an
    // independent differentiation oracle for the finite-difference tables. The three-point stencil is
    // second order, so the grid is chosen fine enough to resolve the sixth mode.
    const auto d = BoxDomain::build(1, {1.0}, 128);
    const auto k = Kernel::gaussian(0.2);
    const auto b = solve_nystrom(d, k, 6);
    for (int i = 0; i < b.size(); ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < d.node_count(); ++j) {
            double oracle = 0.0;
            for (std::size_t m = 0; m < d.node_count(); ++m)
                oracle += d.weight(m) * k.grad_x(std::vector<double>{d.coord(j, 0)}, std::vector<double>{d.coord(m, 0)})[0] *
                          b.eigenfunctions()(m, i);
            oracle /= b.eigenvalues()[i];
            num += d.weight(j) * std::pow(b.gradient(0)(j, i) - oracle, 2);
            den += d.weight(j) * oracle * oracle;
        }
        INFO("mode " << i);
        CHECK(std::sqrt(num / den) < 1e-2);
    }
}

TEST_CASE("eigenfunction integral identities")
{
    for (int dim : {1, 2}) {
        const auto d = BoxDomain::build(dim, {1.0}, dim == 1 ? 64 : 16);
        const auto b = solve_nystrom(d, Kernel::gaussian(0.2), 30);
        const auto bi = basis_integrals(b);
        for (int a = 0; a < dim; ++a) CHECK(bi.H_a[a].cwiseAbs().maxCoeff() < 1e-6);
        CHECK(bi.H_grad.minCoeff() > 0.0);
        CHECK((bi.H.array() - 1.0).abs().maxCoeff() < 1e-12);
        const Eigen::MatrixXd g = eigenfunction_gradient(b, 2);
        CHECK(g.rows() == static_cast<Eigen::Index>(d.node_count()));
        CHECK(g.cols() == dim);
    }
}

TEST_CASE("mercer diagnostics are only defined for Nystrom bases")
{
    const auto d = BoxDomain::build(1, {1.0}, 16);
    CHECK_THROWS_AS(mercer_diagnostics(dirichlet_basis(d, 2)), ValidationError);
}

TEST_CASE("solver argument validation")
{
    const auto d = BoxDomain::build(1, {1.0}, 16);
    CHECK_THROWS_AS(solve_nystrom(d, Kernel::gaussian(0.2), 0), ValidationError);
    CHECK_THROWS_AS(solve_nystrom(d, Kernel::gaussian(0.2), 17), ValidationError);
    CHECK_THROWS_AS(solve_nystrom(d, Kernel::analytic_dirichlet(3, {2.0}), 3), ValidationError);
    CHECK_THROWS_AS(dirichlet_basis(d, 0), ValidationError);
    CHECK_THROWS_AS(solve_nystrom(d, Kernel::gaussian(0.2), 4).evaluate_mode(0, std::vector<double>{0.5}),
                    ValidationError);
}

TEST_CASE("nystrom on the analytic dirichlet kernel recovers its eigenvalues")
{
    const auto d = BoxDomain::build(1, {1.0}, 48);
    const auto b = solve_nystrom(d, Kernel::analytic_dirichlet(3, {1.0}), 3);
    CHECK(b.eigenvalues()[0] == doctest::Approx(9.0 * pi * pi).epsilon(1e-8));
    CHECK(b.eigenvalues()[1] == doctest::Approx(4.0 * pi * pi).epsilon(1e-8));
    CHECK(b.eigenvalues()[2] == doctest::Approx(pi * pi).epsilon(1e-8));
}
