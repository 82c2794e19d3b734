#include "klturb/dissipation.hpp"

#include "klturb/errors.hpp"
#include "klturb/grf.hpp"
#include "klturb/mcstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace klturb {

namespace {

Eigen::Map<const Eigen::VectorXd> weights_of(const KLBasis& basis)
{
    const auto w = basis.domain().weights();
    return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

FlowConfig prepared(const FlowConfig& cfg, const KLBasis& basis)
{
    FlowConfig c = resolve_length(cfg, basis.domain());
    c.validate(basis.domain().dim());
    return c;
}

FlowConfig at_nu(const FlowConfig& cfg, double nu)
{
    FlowConfig c = cfg;
    c.nu = nu;
    return c;
}

double squared_speed(const FlowConfig& cfg)
{
    const double s = speed(cfg);
    return s * s;
}

}  // namespace

double scaling_factor(const FlowConfig& cfg, double nu)
{
    if (!(nu > 0.0)) throw ValidationError("nu must be positive");
    if (!(cfg.length > 0.0)) throw ValidationError("length scale must be positive");
    if (!(cfg.beta > 0.0)) throw ValidationError("beta must be positive");
    const double re = speed(cfg) * cfg.length / nu;
    if (!(re > cfg.re_star)) return 0.0;
    return nu * std::pow(re - cfg.re_star, 2.0 * cfg.beta);
}

double gradient_energy(const KLBasis& basis)
{
    return basis.eigenvalues().dot(basis_integrals(basis).H_grad);
}

double dissipation_analytic(const FlowConfig& cfg_in, const KLBasis& basis, double nu)
{
    const FlowConfig cfg = prepared(at_nu(cfg_in, nu), basis);
    return cfg.amplitude * cfg.amplitude * squared_speed(cfg) * scaling_factor(cfg, nu) * cfg.horizon *
           gradient_energy(basis);
}

double dissipation_limit(const FlowConfig& cfg_in, const KLBasis& basis)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    const double s = speed(cfg);
    return cfg.amplitude * cfg.amplitude * s * s * s * cfg.length * cfg.horizon * gradient_energy(basis);
}

std::vector<McValue> dissipation_monte_carlo(const FlowConfig& cfg_in, const KLBasis& basis,
                                             const std::vector<double>& nu_grid, std::uint64_t draws,
                                             std::uint64_t seed, unsigned workers)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (draws < 2) throw ValidationError("need at least 2 draws");
    std::vector<FlowConfig> cfgs;
    for (double nu : nu_grid) cfgs.push_back(prepared(at_nu(cfg, nu), basis));
    const auto w = weights_of(basis);

    const auto est = run_monte_carlo(draws, nu_grid.size(), workers, [&](std::uint64_t d, std::span<double> out) {
        const Eigen::VectorXd xi = draw_xi(basis, seed, d);
        for (std::size_t k = 0; k < cfgs.size(); ++k) {
            const Eigen::MatrixXd g = turbulent_gradient(cfgs[k], basis, xi);
            out[k] = cfgs[k].nu * cfgs[k].horizon * w.dot(g.rowwise().squaredNorm());
        }
    });
    std::vector<McValue> r(nu_grid.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = {est.mean(k), est.standard_error(k)};
    return r;
}

std::vector<double> log_nu_grid(double nu_min, double nu_max, int points)
{
    if (!(nu_min > 0.0) || !(nu_max > nu_min)) throw ValidationError("need 0 < nu_min < nu_max");
    if (points < 2) throw ValidationError("need at least 2 nu points");
    std::vector<double> grid(points);
    const double lo = std::log(nu_min);
    const double hi = std::log(nu_max);
    for (int i = 0; i < points; ++i) grid[i] = std::exp(hi + (lo - hi) * i / (points - 1));
    grid.front() = nu_max;
    grid.back() = nu_min;
    return grid;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::anomalous: return "anomalous";
    case Verdict::vanishing: return "vanishing";
    case Verdict::divergent: return "divergent";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs at least two points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (!(sxx > 0.0)) throw ValidationError("slope fit needs distinct nu values");
    return sxy / sxx;
}

DissipationReport sweep(const FlowConfig& cfg_in, const KLBasis& basis, const std::vector<double>& nu_grid,
                        std::uint64_t draws, std::uint64_t seed, unsigned workers)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (nu_grid.size() < 5) throw ValidationError("nu grid needs at least 5 points");
    for (std::size_t i = 0; i < nu_grid.size(); ++i) {
        if (!(nu_grid[i] > 0.0)) throw ValidationError("nu grid values must be positive");
        if (i > 0 && !(nu_grid[i] < nu_grid[i - 1])) throw ValidationError("nu grid must be strictly decreasing");
    }
    if (nu_grid.front() / nu_grid.back() < 1e3 * (1.0 - 1e-12))
        throw ValidationError("nu grid must span at least 3 decades");

    DissipationReport r;
    r.config = cfg;
    r.draws = draws;
    r.seed = seed;
    r.gradient_energy = gradient_energy(basis);
    r.limit_analytic = dissipation_limit(cfg, basis);

    const auto mc = dissipation_monte_carlo(cfg, basis, nu_grid, draws, seed, workers);
    for (std::size_t i = 0; i < nu_grid.size(); ++i) {
        DissipationPoint p;
        p.nu = nu_grid[i];
        p.re = reynolds(at_nu(cfg, p.nu), speed(cfg));
        p.laminar = !(p.re > cfg.re_star);
        p.d_mc = mc[i].mean;
        p.d_se = mc[i].standard_error;
        p.d_analytic = dissipation_analytic(cfg, basis, p.nu);
        r.points.push_back(p);
        if (p.d_se > 0.0) {
            r.max_se_deviation = std::max(r.max_se_deviation, std::abs(p.d_mc - p.d_analytic) / p.d_se);
        } else if (p.d_mc != p.d_analytic) {
            r.max_se_deviation = std::numeric_limits<double>::infinity();
        }
    }

    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> ya;
    const double nu_min = nu_grid.back();
    for (const auto& p : r.points)
        if (!p.laminar && p.nu <= 10.0 * nu_min * (1.0 + 1e-12) && p.d_mc > 0.0 && p.d_analytic > 0.0) {
            xs.push_back(p.nu);
            ys.push_back(p.d_mc);
            ya.push_back(p.d_analytic);
        }
    r.fit_points = static_cast<int>(xs.size());
    r.d_at_min = r.points.back().d_mc;
    if (r.fit_points >= 2) {
        r.slope = loglog_slope(xs, ys);
        r.slope_analytic = loglog_slope(xs, ya);
        const bool near_limit =
            r.limit_analytic > 0.0 && std::abs(r.d_at_min - r.limit_analytic) <= 0.05 * r.limit_analytic;
        if (std::abs(r.slope) < 0.05 && near_limit)
            r.verdict = Verdict::anomalous;
        else if (r.slope > 0.05)
            r.verdict = Verdict::vanishing;
        else if (r.slope < -0.05)
            r.verdict = Verdict::divergent;
    }
    return r;
}

BlowupDiagnostic gradient_blowup_diagnostic(const FlowConfig& cfg_in, const KLBasis& basis,
                                            const std::vector<double>& nu_grid, std::size_t node)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (node >= basis.node_count()) throw ValidationError("node index out of range");
    const auto j = static_cast<Eigen::Index>(node);
    double grad2 = 0.0;
    for (int b = 0; b < basis.domain().dim(); ++b)
        grad2 += basis.eigenvalues().dot(basis.gradient(b).row(j).transpose().cwiseAbs2());

    BlowupDiagnostic d;
    d.strictly_increasing = true;
    for (std::size_t i = 0; i < nu_grid.size(); ++i) {
        const FlowConfig c = prepared(at_nu(cfg, nu_grid[i]), basis);
        const double m = std::abs(c.amplitude) * speed(c) * flow_weight(c) * std::sqrt(grad2);
        d.magnitude.push_back(m);
        d.rescaled.push_back(m * std::sqrt(nu_grid[i]));
        if (i > 0 && !(nu_grid[i] < nu_grid[i - 1] && m > d.magnitude[i - 1])) d.strictly_increasing = false;
    }
    return d;
}

NSResidual ns_residual(const FlowConfig& cfg_in, const KLBasis& basis)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    const auto& domain = basis.domain();
    const int dim = domain.dim();
    const auto n = static_cast<Eigen::Index>(basis.node_count());
    const double w = flow_weight(cfg);
    const double a2w2 = cfg.amplitude * cfg.amplitude * w * w;

    // sum_I Z_I f_I d_b f_I per node.
    Eigen::MatrixXd half_grad_var(n, dim);
    for (int b = 0; b < dim; ++b)
        half_grad_var.col(b) = basis.eigenfunctions().cwiseProduct(basis.gradient(b)) * basis.eigenvalues();

    NSResidual r;
    r.expected = Eigen::MatrixXd::Zero(n, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) r.expected.col(a) += a2w2 * cfg.u[a] * cfg.u[b] * half_grad_var.col(b);
    r.scale = a2w2 * squared_speed(cfg) * basis.variance().maxCoeff();

    double margin = 0.0;
    for (int a = 0; a < dim; ++a) margin = std::max(margin, domain.side_lengths()[a] / (domain.nodes_per_axis() - 1));
    if (basis.kernel().stationary()) margin = std::max(margin, basis.kernel().lambda());
    for (Eigen::Index j = 0; j < n; ++j)
        if (domain.boundary_distance(static_cast<std::size_t>(j)) >= margin) r.interior.push_back(static_cast<std::size_t>(j));
    return r;
}

std::vector<McValue> ns_residual_monte_carlo(const FlowConfig& cfg_in, const KLBasis& basis, std::uint64_t draws,
                                             std::uint64_t seed, unsigned workers)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    const int dim = basis.domain().dim();
    const auto n = static_cast<Eigen::Index>(basis.node_count());
    const auto est = run_monte_carlo(draws, static_cast<std::size_t>(n) * dim, workers,
                                     [&](std::uint64_t d, std::span<double> out) {
                                         const Eigen::VectorXd xi = draw_xi(basis, seed, d);
                                         const Eigen::MatrixXd v = turbulent_field(cfg, basis, xi);
                                         const Eigen::MatrixXd g = turbulent_gradient(cfg, basis, xi);
                                         for (Eigen::Index j = 0; j < n; ++j)
                                             for (int a = 0; a < dim; ++a) {
                                                 double s = 0.0;
                                                 for (int b = 0; b < dim; ++b) s += v(j, b) * g(j, a * dim + b);
                                                 out[j * dim + a] = s;
                                             }
                                     });
    std::vector<McValue> r(est.width());
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = {est.mean(k), est.has_standard_error() ? est.standard_error(k) : 0.0};
    return r;
}

BinomialSeries binomial_consistency(const FlowConfig& cfg, double nu, int terms)
{
    if (terms < 1) throw ValidationError("binomial series needs at least one term");
    if (!(nu > 0.0)) throw ValidationError("nu must be positive");
    if (!(cfg.length > 0.0)) throw ValidationError("length scale must be positive");
    const double base = speed(cfg) * cfg.length / nu;
    if (!(base > cfg.re_star)) throw ValidationError("binomial series requires RE > RE_* (ratio RE_*/RE < 1)");

    BinomialSeries s;
    s.direct = scaling_factor(cfg, nu);
    s.ratio_limit = cfg.re_star / base;
    const double x = -s.ratio_limit;
    const double e = 2.0 * cfg.beta;
    const double lead = nu * std::pow(base, e);
    double coeff = 1.0;  // C(e, n)
    double power = 1.0;  // x^n
    double sum = 0.0;
    double previous_term = 0.0;
    for (int k = 0; k < terms; ++k) {
        const double term = lead * coeff * power;
        sum += term;
        s.partial_sums.push_back(sum);
        if (k > 0 && previous_term != 0.0 && term != 0.0) s.ratios.push_back(std::abs(term / previous_term));
        previous_term = term;
        coeff *= (e - k) / (k + 1.0);
        power *= x;
    }
    return s;
}

CrossTermLedger cross_term_ledger(const FlowConfig& cfg_in, const KLBasis& basis, double nu)
{
    const FlowConfig cfg = prepared(at_nu(cfg_in, nu), basis);
    const auto& domain = basis.domain();
    const int dim = domain.dim();
    const auto n = static_cast<Eigen::Index>(basis.node_count());
    const auto w = weights_of(basis);
    const double big_w = flow_weight(cfg);
    const double amp = cfg.amplitude;
    const double pre = cfg.nu * cfg.horizon;
    const auto& z = basis.eigenvalues();
    const auto& f = basis.eigenfunctions();

    // Exact first and second moments of the normals.
    const Eigen::VectorXd e_xi = Eigen::VectorXd::Zero(basis.size());
    const Eigen::VectorXd sqrt_z = z.cwiseSqrt();

    const Eigen::VectorXd mean_t = f * sqrt_z.cwiseProduct(e_xi);  // E[T]
    const Eigen::VectorXd var = basis.variance();                   // E[T^2]

    // Grid derivatives of the constant fields u_a and W.
    const std::vector<double> w_field(static_cast<std::size_t>(n), big_w);
    std::vector<Eigen::VectorXd> grad_w(dim);
    std::vector<std::vector<Eigen::VectorXd>> grad_u(dim, std::vector<Eigen::VectorXd>(dim));
    for (int b = 0; b < dim; ++b) {
        const auto gw = domain.differentiate(w_field, b);
        grad_w[b] = Eigen::Map<const Eigen::VectorXd>(gw.data(), n);
    }
    for (int a = 0; a < dim; ++a) {
        const std::vector<double> u_field(static_cast<std::size_t>(n), cfg.u[a]);
        for (int b = 0; b < dim; ++b) {
            const auto gu = domain.differentiate(u_field, b);
            grad_u[a][b] = Eigen::Map<const Eigen::VectorXd>(gu.data(), n);
        }
    }

    double grad_u_sq = 0.0, grad_u_mean = 0.0, grad_u_var = 0.0, grad_w_var = 0.0, grad_w_mean = 0.0;
    double grad_u_grad_w = 0.0, grad_u_mean_grad = 0.0, grad_u_f_grad_f = 0.0, grad_w_f_grad_f = 0.0;
    double convective_f_grad_f = 0.0, surviving = 0.0;

    for (int b = 0; b < dim; ++b) {
        const Eigen::VectorXd mean_grad_t = basis.gradient(b) * sqrt_z.cwiseProduct(e_xi);  // E[d_b T]
        const Eigen::VectorXd f_grad_f = f.cwiseProduct(basis.gradient(b)) * z;             // E[T d_b T]
        const Eigen::VectorXd grad_sq = basis.gradient(b).cwiseAbs2() * z;                  // E[(d_b T)^2]
        const double int_f_grad_f = w.dot(f_grad_f);
        for (int a = 0; a < dim; ++a) {
            const double ua = cfg.u[a];
            const Eigen::VectorXd& g = grad_u[a][b];
            const Eigen::VectorXd& gw = grad_w[b];
            // d_b U_a = g (1 + A W T) + A u_a gw T + A u_a W d_b T
            grad_u_sq += w.dot(g.cwiseAbs2());
            grad_u_mean += 2.0 * amp * big_w * w.dot(g.cwiseAbs2().cwiseProduct(mean_t));
            grad_u_var += amp * amp * big_w * big_w * w.dot(g.cwiseAbs2().cwiseProduct(var));
            grad_w_var += amp * amp * ua * ua * w.dot(gw.cwiseAbs2().cwiseProduct(var));
            grad_w_mean += 2.0 * amp * ua * w.dot(g.cwiseProduct(gw).cwiseProduct(mean_t));
            grad_u_grad_w += 2.0 * amp * amp * ua * big_w * w.dot(g.cwiseProduct(gw).cwiseProduct(var));
            grad_u_mean_grad += 2.0 * amp * ua * big_w * w.dot(g.cwiseProduct(mean_grad_t));
            grad_u_f_grad_f += 2.0 * amp * amp * ua * big_w * big_w * w.dot(g.cwiseProduct(f_grad_f));
            grad_w_f_grad_f += 2.0 * amp * amp * ua * ua * big_w * w.dot(gw.cwiseProduct(f_grad_f));
            surviving += amp * amp * ua * ua * big_w * big_w * w.dot(grad_sq);
            for (int c = 0; c < dim; ++c)
                convective_f_grad_f += amp * amp * big_w * big_w * std::abs(ua * cfg.u[c]) * std::abs(int_f_grad_f);
        }
    }

    CrossTermLedger led;
    led.surviving = pre * amp * amp * squared_speed(cfg) * big_w * big_w * gradient_energy(basis);
    // Route 2: integrate the pointwise sum instead of summing per-mode integrals.
    Eigen::VectorXd pointwise = Eigen::VectorXd::Zero(n);
    for (int b = 0; b < dim; ++b) pointwise += basis.gradient(b).cwiseAbs2() * z;
    led.route2 = pre * amp * amp * squared_speed(cfg) * big_w * big_w * w.dot(pointwise);
    led.cross = {
        {"grad_u_squared", pre * grad_u_sq},
        {"grad_u_times_mean_xi", pre * grad_u_mean},
        {"grad_u_times_variance", pre * grad_u_var},
        {"grad_w_times_variance", pre * grad_w_var},
        {"grad_u_grad_w_times_mean_xi", pre * grad_w_mean},
        {"grad_u_grad_w_times_variance", pre * grad_u_grad_w},
        {"grad_u_times_mean_grad_xi", pre * grad_u_mean_grad},
        {"grad_u_times_f_grad_f", pre * grad_u_f_grad_f},
        {"grad_w_times_f_grad_f", pre * grad_w_f_grad_f},
        {"convective_f_grad_f", pre * convective_f_grad_f},
    };
    for (const auto& c : led.cross) led.cross_total += std::abs(c.value);
    // The expansion's surviving term, accumulated independently, must equal the closed form.
    led.cross.push_back({"expansion_minus_closed_form", pre * surviving - led.surviving});
    led.cross_total += std::abs(led.cross.back().value);
    return led;
}

}  // namespace klturb
