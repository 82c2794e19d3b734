#include "klturb/grf.hpp"

#include "klturb/errors.hpp"
#include "klturb/mcstats.hpp"
#include "klturb/rng.hpp"

#include <algorithm>
#include <cmath>

namespace klturb {

namespace {

Eigen::Map<const Eigen::VectorXd> weights_of(const KLBasis& basis)
{
    const auto w = basis.domain().weights();
    return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

void check_xi(const KLBasis& basis, const Eigen::VectorXd& xi)
{
    if (xi.size() != basis.size())
        throw ValidationError("xi has " + std::to_string(xi.size()) + " entries, basis has " +
                              std::to_string(basis.size()) + " modes");
}

}  // namespace

Eigen::VectorXd draw_xi(const KLBasis& basis, std::uint64_t seed, std::uint64_t draw)
{
    Eigen::VectorXd xi(basis.size());
    standard_normals(seed, Stream::field, draw, std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
    return xi;
}

GRFSample sample(const KLBasis& basis, std::uint64_t seed, std::uint64_t draw)
{
    GRFSample s;
    s.seed = seed;
    s.draw = draw;
    s.xi = draw_xi(basis, seed, draw);
    s.values = field_values(basis, s.xi);
    return s;
}

Eigen::VectorXd field_values(const KLBasis& basis, const Eigen::VectorXd& xi)
{
    check_xi(basis, xi);
    return basis.eigenfunctions() * basis.eigenvalues().cwiseSqrt().cwiseProduct(xi);
}

Eigen::MatrixXd field_gradient(const KLBasis& basis, const Eigen::VectorXd& xi)
{
    check_xi(basis, xi);
    const Eigen::VectorXd c = basis.eigenvalues().cwiseSqrt().cwiseProduct(xi);
    const int dim = basis.domain().dim();
    Eigen::MatrixXd g(basis.node_count(), dim);
    for (int a = 0; a < dim; ++a) g.col(a) = basis.gradient(a) * c;
    return g;
}

Eigen::MatrixXd field_hessian(const KLBasis& basis, const Eigen::VectorXd& xi)
{
    check_xi(basis, xi);
    const Eigen::VectorXd c = basis.eigenvalues().cwiseSqrt().cwiseProduct(xi);
    const int dim = basis.domain().dim();
    Eigen::MatrixXd h(basis.node_count(), dim * dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) h.col(a * dim + b) = basis.hessian(a, b) * c;
    return h;
}

double double_factorial(int n)
{
    double r = 1.0;
    for (int k = n; k > 1; k -= 2) r *= k;
    return r;
}

namespace {

void check_moment_order(int p)
{
    if (p < 2 || p % 2 != 0) throw ValidationError("moment order p must be even and >= 2, got " + std::to_string(p));
}

}  // namespace

double moment_p(const KLBasis& basis, std::size_t node, int p)
{
    check_moment_order(p);
    if (node >= basis.node_count()) throw ValidationError("node index out of range");
    const double var = basis.variance()[static_cast<Eigen::Index>(node)];
    return double_factorial(p - 1) * std::pow(var, 0.5 * p);
}

double moment_p_literal(const KLBasis& basis, std::size_t node, int p)
{
    check_moment_order(p);
    if (node >= basis.node_count()) throw ValidationError("node index out of range");
    double s = 0.0;
    for (int i = 0; i < basis.size(); ++i)
        s += std::pow(basis.eigenvalues()[i], 0.5 * p) *
             std::pow(basis.eigenfunctions()(static_cast<Eigen::Index>(node), i), p);
    return s * double_factorial(p / 2 - 1);
}

double sobolev_norm_expectation(const KLBasis& basis, int s)
{
    if (s != 1 && s != 2) throw ValidationError("sobolev order must be 1 or 2");
    const auto integrals = basis_integrals(basis);
    const auto& z = basis.eigenvalues();
    double total = z.dot(integrals.H) + z.dot(integrals.H_grad);
    if (s == 2) total += z.dot(integrals.H_hess);
    return total;
}

double sobolev_norm(const KLBasis& basis, const Eigen::VectorXd& xi, int s)
{
    if (s != 1 && s != 2) throw ValidationError("sobolev order must be 1 or 2");
    const auto w = weights_of(basis);
    const Eigen::VectorXd v = field_values(basis, xi);
    double total = w.dot(v.cwiseAbs2()) + w.dot(field_gradient(basis, xi).rowwise().squaredNorm());
    if (s == 2) total += w.dot(field_hessian(basis, xi).rowwise().squaredNorm());
    return total;
}

VarianceIntegral variance_integral(const KLBasis& basis)
{
    VarianceIntegral v;
    v.quadrature = weights_of(basis).dot(basis.variance());
    v.eigen_sum = basis.eigenvalues().sum();
    v.scaled_by_volume = v.eigen_sum * basis.domain().volume();
    v.consistent = std::abs(v.quadrature - v.eigen_sum) <= 1e-6 * std::abs(v.eigen_sum);
    return v;
}

Eigen::VectorXd project_xi(const KLBasis& basis, const Eigen::VectorXd& values)
{
    if (values.size() != static_cast<Eigen::Index>(basis.node_count()))
        throw ValidationError("field values do not match the basis grid");
    const auto& z = basis.eigenvalues();
    const double floor = eigenvalue_floor * z.maxCoeff();
    for (Eigen::Index i = 0; i < z.size(); ++i)
        if (z[i] <= floor) throw ValidationError("cannot project onto a mode below the eigenvalue floor");
    const Eigen::VectorXd proj = basis.eigenfunctions().transpose() * weights_of(basis).cwiseProduct(values);
    return proj.cwiseQuotient(z.cwiseSqrt());
}

namespace {

Check within_se(std::string name, double value, double reference, double se, double n_se, std::string note = {})
{
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.reference = reference;
    c.tolerance = n_se * se;
    c.passed = std::abs(value - reference) <= c.tolerance;
    c.note = std::move(note);
    return c;
}

}  // namespace

std::vector<Check> verify_grf(const KLBasis& basis, const GRFVerifyOptions& options)
{
    if (options.draws < 2) throw ValidationError("grf verification needs at least 2 draws");
    const auto n = basis.node_count();
    const int m = basis.size();
    const auto w = weights_of(basis);
    const Eigen::VectorXd var = basis.variance();
    const auto integrals = basis_integrals(basis);
    const auto& z = basis.eigenvalues();

    // Deterministic node pairs for the covariance check.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    {
        std::vector<double> u(2 * static_cast<std::size_t>(options.covariance_pairs));
        standard_normals(options.seed, Stream::scratch, 0, u);
        for (int p = 0; p < options.covariance_pairs; ++p) {
            auto pick = [&](double g) {
                const double uu = 0.5 * std::erfc(-g / std::sqrt(2.0));
                return std::min(n - 1, static_cast<std::size_t>(uu * static_cast<double>(n)));
            };
            pairs.emplace_back(pick(u[2 * p]), pick(u[2 * p + 1]));
        }
    }

    const std::size_t n_cov = pairs.size();
    const std::size_t n_xi = static_cast<std::size_t>(m) * (m + 1) / 2;
    const std::size_t off_cov = n;
    const std::size_t off_xi = off_cov + n_cov;
    const std::size_t off_norm = off_xi + n_xi;
    const std::size_t off_var = off_norm + 4;
    const std::size_t width = off_var + 1;
    Eigen::Index var_node = 0;
    var.maxCoeff(&var_node);

    const Eigen::VectorXd sqrt_z = z.cwiseSqrt();
    const auto est = run_monte_carlo(options.draws, width, options.workers, [&](std::uint64_t d, std::span<double> out) {
        const Eigen::VectorXd xi = draw_xi(basis, options.seed, d);
        const Eigen::VectorXd v = basis.eigenfunctions() * sqrt_z.cwiseProduct(xi);
        for (std::size_t j = 0; j < n; ++j) out[j] = v[static_cast<Eigen::Index>(j)];
        for (std::size_t p = 0; p < n_cov; ++p)
            out[off_cov + p] = v[static_cast<Eigen::Index>(pairs[p].first)] * v[static_cast<Eigen::Index>(pairs[p].second)];
        const Eigen::VectorXd proj = project_xi(basis, v);
        std::size_t k = off_xi;
        for (int i = 0; i < m; ++i)
            for (int jj = i; jj < m; ++jj) out[k++] = proj[i] * proj[jj];
        const double l2 = w.dot(v.cwiseAbs2());
        const double grad = w.dot(field_gradient(basis, xi).rowwise().squaredNorm());
        const double hess = w.dot(field_hessian(basis, xi).rowwise().squaredNorm());
        out[off_norm + 0] = l2;
        out[off_norm + 1] = grad;
        out[off_norm + 2] = l2 + grad;
        out[off_norm + 3] = l2 + grad + hess;
        out[off_var] = v[var_node] * v[var_node];
    });

    std::vector<Check> checks;

    {
        double worst = 0.0;
        std::size_t worst_node = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double zscore = std::abs(est.mean(j)) / est.standard_error(j);
            if (zscore > worst) {
                worst = zscore;
                worst_node = j;
            }
        }
        Check c{"node_mean_zero", worst, 0.0, 4.0, worst <= 4.0,
                "max |mean|/SE over all nodes (worst node " + std::to_string(worst_node) + ")"};
        checks.push_back(c);
    }
    {
        double worst = 0.0;
        for (std::size_t p = 0; p < n_cov; ++p) {
            const double ref = basis.mercer(pairs[p].first, pairs[p].second);
            worst = std::max(worst, std::abs(est.mean(off_cov + p) - ref) / est.standard_error(off_cov + p));
        }
        checks.push_back({"covariance_vs_mercer", worst, 0.0, 4.0, worst <= 4.0,
                          "max |cov - mercer|/SE over " + std::to_string(n_cov) + " node pairs"});
    }
    {
        double worst = 0.0;
        std::size_t k = off_xi;
        for (int i = 0; i < m; ++i)
            for (int jj = i; jj < m; ++jj, ++k)
                worst = std::max(worst, std::abs(est.mean(k) - (i == jj ? 1.0 : 0.0)) / est.standard_error(k));
        checks.push_back({"projected_xi_identity_covariance", worst, 0.0, 4.0, worst <= 4.0,
                          "max |cov(xi) - I|/SE over the upper triangle"});
    }
    {
        const auto node = static_cast<std::size_t>(var_node);
        checks.push_back(within_se("variance_p2_moment", est.mean(off_var), moment_p(basis, node, 2),
                                   est.standard_error(off_var),
                                   4.0, "E T^2 at the max-variance node"));
    }
    checks.push_back(within_se("l2_norm_expectation", est.mean(off_norm + 0), z.sum(), est.standard_error(off_norm + 0),
                               3.0, "orthonormal convention; volume-scaled value " +
                                        std::to_string(z.sum() * basis.domain().volume())));
    checks.push_back(within_se("gradient_norm_expectation", est.mean(off_norm + 1), z.dot(integrals.H_grad),
                               est.standard_error(off_norm + 1), 3.0, "int E|grad T|^2 vs sum Z H_grad"));
    checks.push_back(within_se("h1_norm_expectation", est.mean(off_norm + 2), sobolev_norm_expectation(basis, 1),
                               est.standard_error(off_norm + 2), 3.0));
    checks.push_back(within_se("h2_norm_expectation", est.mean(off_norm + 3), sobolev_norm_expectation(basis, 2),
                               est.standard_error(off_norm + 3), 3.0,
                               basis.exact_derivatives() ? "analytic second derivatives"
                                                         : "finite-difference second derivatives (lower accuracy)"));
    {
        double worst = 0.0;
        const std::uint64_t n_round = std::min<std::uint64_t>(options.draws, 1000);
        for (std::uint64_t d = 0; d < n_round; ++d) {
            const auto s = sample(basis, options.seed, d);
            worst = std::max(worst, (project_xi(basis, s.values) - s.xi).cwiseAbs().maxCoeff());
        }
        checks.push_back({"project_round_trip", worst, 0.0, 1e-8, worst <= 1e-8,
                          "max |xi - project(T)| over " + std::to_string(n_round) + " draws"});
    }
    {
        const auto vi = variance_integral(basis);
        checks.push_back({"variance_integral", vi.quadrature, vi.eigen_sum, 1e-6 * std::abs(vi.eigen_sum), vi.consistent,
                          "volume-scaled alternative " + std::to_string(vi.scaled_by_volume)});
    }
    {
        double worst = 0.0;
        for (const auto& h : integrals.H_a) worst = std::max(worst, h.cwiseAbs().maxCoeff());
        checks.push_back({"f_grad_f_integral_zero", worst, 0.0, 1e-6, worst <= 1e-6, "max_I,a |int f_I d_a f_I|"});
        const double min_grad = integrals.H_grad.minCoeff();
        checks.push_back({"grad_integral_positive", min_grad, 0.0, 0.0, min_grad > 0.0, "min_I int |grad f_I|^2"});
    }
    {
        // Fourth moment of a unit-variance node.
        std::size_t node = 0;
        var.maxCoeff(&node);
        const Eigen::VectorXd row = basis.eigenfunctions().row(static_cast<Eigen::Index>(node)).transpose().cwiseProduct(sqrt_z);
        const double sigma = std::sqrt(var[static_cast<Eigen::Index>(node)]);
        const auto m4 = run_monte_carlo(options.moment_draws, 1, options.workers, [&](std::uint64_t d, std::span<double> out) {
            Eigen::VectorXd xi(m);
            standard_normals(options.seed, Stream::gaussian_moment, d, std::span<double>(xi.data(), xi.size()));
            const double t = row.dot(xi) / sigma;
            out[0] = t * t * t * t;
        });
        const double literal = moment_p_literal(basis, node, 4) / std::pow(sigma, 4);
        Check c{"fourth_moment_unit_variance", m4.mean(0), 3.0, 0.1, m4.mean(0) >= 2.9 && m4.mean(0) <= 3.1,
                "(p-1)!! gives 3; the (p/2-1)!! form gives " + std::to_string(literal) + " here"};
        checks.push_back(c);
    }
    return checks;
}

}  // namespace klturb
