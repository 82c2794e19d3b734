#include "klturb/flow.hpp"

#include "klturb/errors.hpp"
#include "klturb/mcstats.hpp"
#include "klturb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace klturb {

void FlowConfig::validate(int dim) const
{
    if (dim >= 0 && static_cast<int>(u.size()) != dim)
        throw ValidationError("flow velocity u has " + std::to_string(u.size()) + " components, domain has dim " +
                              std::to_string(dim));
    for (double c : u)
        if (!std::isfinite(c)) throw ValidationError("flow velocity must be finite");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ValidationError("nu must be positive");
    if (!std::isfinite(amplitude)) throw ValidationError("amplitude A must be finite");
    if (!(beta > 0.0 && beta <= 0.5)) throw ValidationError("beta must lie in (0, 0.5]");
    if (!(re_star > 0.0) || !std::isfinite(re_star)) throw ValidationError("re_star must be positive");
    if (length < 0.0 || !std::isfinite(length)) throw ValidationError("length scale must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("time horizon T must be positive");
}

FlowConfig resolve_length(const FlowConfig& cfg, const BoxDomain& domain)
{
    FlowConfig out = cfg;
    if (out.length <= 0.0) out.length = domain.length_scale();
    return out;
}

double speed(const FlowConfig& cfg)
{
    double s = 0.0;
    for (double c : cfg.u) s += c * c;
    return std::sqrt(s);
}

double reynolds(const FlowConfig& cfg, double speed)
{
    if (!(cfg.nu > 0.0)) throw ValidationError("nu must be positive");
    if (!(cfg.length > 0.0)) throw ValidationError("length scale must be positive");
    if (speed < 0.0) throw ValidationError("speed must be nonnegative");
    return speed * cfg.length / cfg.nu;
}

double weighting(const FlowConfig& cfg, double re)
{
    return re > cfg.re_star ? std::pow(re - cfg.re_star, cfg.beta) : 0.0;
}

double flow_weight(const FlowConfig& cfg)
{
    return weighting(cfg, reynolds(cfg, speed(cfg)));
}

namespace {

FlowConfig prepared(const FlowConfig& cfg, const KLBasis& basis)
{
    FlowConfig c = resolve_length(cfg, basis.domain());
    c.validate(basis.domain().dim());
    return c;
}

Eigen::Map<const Eigen::VectorXd> weights_of(const KLBasis& basis)
{
    const auto w = basis.domain().weights();
    return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

double squared_speed(const FlowConfig& cfg)
{
    const double s = speed(cfg);
    return s * s;
}

}  // namespace

Eigen::MatrixXd turbulent_field(const FlowConfig& cfg_in, const KLBasis& basis, const Eigen::VectorXd& xi)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    const int dim = basis.domain().dim();
    const auto n = static_cast<Eigen::Index>(basis.node_count());
    const double w = flow_weight(cfg);
    Eigen::MatrixXd out(n, dim);
    if (w == 0.0 || cfg.amplitude == 0.0) {
        for (int a = 0; a < dim; ++a) out.col(a).setConstant(cfg.u[a]);
        return out;
    }
    const Eigen::VectorXd t = field_values(basis, xi);
    for (int a = 0; a < dim; ++a) out.col(a) = cfg.u[a] * (1.0 + cfg.amplitude * w * t.array()).matrix();
    return out;
}

Eigen::MatrixXd turbulent_field(const FlowConfig& cfg_in, const KLBasis& basis, const Eigen::VectorXd& xi,
                                const Eigen::MatrixXd& u_grid)
{
    FlowConfig cfg = resolve_length(cfg_in, basis.domain());
    const int dim = basis.domain().dim();
    const auto n = static_cast<Eigen::Index>(basis.node_count());
    if (u_grid.rows() != n || u_grid.cols() != dim) throw ValidationError("u grid must be node_count x dim");
    cfg.u.assign(dim, 0.0);
    cfg.validate(dim);
    const Eigen::VectorXd t = field_values(basis, xi);
    Eigen::MatrixXd out(n, dim);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = weighting(cfg, reynolds(cfg, u_grid.row(j).norm()));
        for (int a = 0; a < dim; ++a) out(j, a) = w == 0.0 ? u_grid(j, a) : u_grid(j, a) * (1.0 + cfg.amplitude * w * t[j]);
    }
    return out;
}

TurbulentSample sample_turbulent(const FlowConfig& cfg, const KLBasis& basis, std::uint64_t seed, std::uint64_t draw)
{
    TurbulentSample s;
    s.grf = sample(basis, seed, draw);
    s.values = turbulent_field(cfg, basis, s.grf.xi);
    return s;
}

Eigen::MatrixXd turbulent_gradient(const FlowConfig& cfg_in, const KLBasis& basis, const Eigen::VectorXd& xi)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    const int dim = basis.domain().dim();
    const double aw = cfg.amplitude * flow_weight(cfg);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(basis.node_count(), dim * dim);
    if (aw == 0.0) return out;
    const Eigen::MatrixXd g = field_gradient(basis, xi);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) out.col(a * dim + b) = cfg.u[a] * aw * g.col(b);
    return out;
}

Eigen::MatrixXd covariance(const FlowConfig& cfg_in, const KLBasis& basis, std::size_t j, std::size_t k)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (j >= basis.node_count() || k >= basis.node_count()) throw ValidationError("node index out of range");
    const int dim = basis.domain().dim();
    const double w = flow_weight(cfg);
    const double scalar = cfg.amplitude * cfg.amplitude * w * w * basis.mercer(j, k);
    Eigen::MatrixXd c(dim, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) c(a, b) = cfg.u[a] * cfg.u[b] * scalar;
    return c;
}

std::size_t offset_node(const BoxDomain& domain, std::size_t node, const std::array<int, 3>& offset)
{
    auto idx = domain.multi_index(node);
    for (int a = 0; a < domain.dim(); ++a) {
        idx[a] += offset[a];
        if (idx[a] < 0 || idx[a] >= domain.nodes_per_axis())
            throw ValidationError("separation leaves the domain");
    }
    return domain.flat_index(idx);
}

double structure_function(const FlowConfig& cfg_in, const KLBasis& basis, std::size_t node,
                          const std::array<int, 3>& offset)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    const std::size_t other = offset_node(basis.domain(), node, offset);
    if (other == node) return 0.0;
    const double w = flow_weight(cfg);
    const double metric = basis.mercer(node, node) + basis.mercer(other, other) - 2.0 * basis.mercer(node, other);
    return cfg.amplitude * cfg.amplitude * squared_speed(cfg) * w * w * metric;
}

Eigen::VectorXd mean_difference(const FlowConfig& cfg_in, const KLBasis& basis, std::size_t j, std::size_t k)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (j >= basis.node_count() || k >= basis.node_count()) throw ValidationError("node index out of range");
    // Constant u: E[U(x)] = u at every node.
    return Eigen::VectorXd::Zero(basis.domain().dim());
}

MomentBound moment_bound_check(const FlowConfig& cfg_in, const KLBasis& basis, std::size_t node, int axis, int p,
                               std::uint64_t draws, std::uint64_t seed, unsigned workers)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (p < 2 || p % 2 != 0) throw ValidationError("moment order p must be even and >= 2");
    if (node >= basis.node_count()) throw ValidationError("node index out of range");
    if (axis < 0 || axis >= basis.domain().dim()) throw ValidationError("axis out of range");

    const double ua = cfg.u[axis];
    const double w = flow_weight(cfg);
    const double c = ua * cfg.amplitude * w;
    const double var = basis.variance()[static_cast<Eigen::Index>(node)];
    const double sigma = std::sqrt(var);

    MomentBound r;
    // E (u + c T)^p with T ~ N(0, var): only even powers of T survive.
    double binom = 1.0;
    for (int k = 0; k <= p; ++k) {
        if (k > 0) binom = binom * (p - k + 1) / k;
        if (k % 2 == 0) r.exact += binom * std::pow(ua, p - k) * std::pow(c, k) * double_factorial(k - 1) * std::pow(sigma, k);
    }
    const double two = std::pow(2.0, p - 1);
    r.bound = two * std::pow(std::abs(ua), p) + two * std::pow(std::abs(c), p) * double_factorial(p - 1) * std::pow(sigma, p);
    r.literal = two * std::pow(std::abs(ua), p) + two * std::pow(std::abs(c), p) * moment_p_literal(basis, node, p);

    const Eigen::VectorXd row = basis.eigenfunctions().row(static_cast<Eigen::Index>(node)).transpose().cwiseProduct(
        basis.eigenvalues().cwiseSqrt());
    const auto est = run_monte_carlo(draws, 1, workers, [&](std::uint64_t d, std::span<double> out) {
        const double t = w == 0.0 ? 0.0 : row.dot(draw_xi(basis, seed, d));
        const double value = w == 0.0 || cfg.amplitude == 0.0 ? ua : ua * (1.0 + cfg.amplitude * w * t);
        out[0] = std::pow(std::abs(value), p);
    });
    r.estimate = est.mean(0);
    r.standard_error = est.has_standard_error() ? est.standard_error(0) : 0.0;
    r.holds = r.estimate <= r.bound;
    return r;
}

GradientMoment gradient_moment(const FlowConfig& cfg_in, const KLBasis& basis, std::size_t node, int a, int b, int p,
                               std::uint64_t draws, std::uint64_t seed, unsigned workers)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (p < 2 || p % 2 != 0) throw ValidationError("moment order p must be even and >= 2");
    const int dim = basis.domain().dim();
    if (a < 0 || a >= dim || b < 0 || b >= dim) throw ValidationError("component index out of range");
    if (node >= basis.node_count()) throw ValidationError("node index out of range");

    const double w = flow_weight(cfg);
    const double scale = cfg.u[a] * cfg.amplitude * w;
    const auto j = static_cast<Eigen::Index>(node);
    const Eigen::VectorXd grad_row = basis.gradient(b).row(j).transpose();
    const auto& z = basis.eigenvalues();

    GradientMoment r;
    r.analytic_p2 = scale * scale * z.dot(grad_row.cwiseAbs2());
    const Eigen::VectorXd coeff = grad_row.cwiseProduct(z.cwiseSqrt());
    const auto est = run_monte_carlo(draws, 1, workers, [&](std::uint64_t d, std::span<double> out) {
        const double g = scale == 0.0 ? 0.0 : scale * coeff.dot(draw_xi(basis, seed, d));
        out[0] = std::pow(std::abs(g), p);
    });
    r.estimate = est.mean(0);
    r.standard_error = est.has_standard_error() ? est.standard_error(0) : 0.0;
    return r;
}

double vector_sobolev_expectation(const FlowConfig& cfg_in, const KLBasis& basis, int s)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (s != 1 && s != 2) throw ValidationError("sobolev order must be 1 or 2");
    const double w = flow_weight(cfg);
    const double u2 = squared_speed(cfg);
    const auto integrals = basis_integrals(basis);
    const auto& z = basis.eigenvalues();
    double random = z.dot(integrals.H) + z.dot(integrals.H_grad);
    if (s == 2) random += z.dot(integrals.H_hess);
    return u2 * basis.domain().volume() + cfg.amplitude * cfg.amplitude * u2 * w * w * random;
}

double vector_sobolev_norm(const FlowConfig& cfg_in, const KLBasis& basis, const Eigen::VectorXd& xi, int s)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (s != 1 && s != 2) throw ValidationError("sobolev order must be 1 or 2");
    const auto w = weights_of(basis);
    const Eigen::MatrixXd v = turbulent_field(cfg, basis, xi);
    double total = w.dot(v.rowwise().squaredNorm()) + w.dot(turbulent_gradient(cfg, basis, xi).rowwise().squaredNorm());
    if (s == 2) {
        const double aw = cfg.amplitude * flow_weight(cfg);
        if (aw != 0.0) total += aw * aw * squared_speed(cfg) * w.dot(field_hessian(basis, xi).rowwise().squaredNorm());
    }
    return total;
}

namespace {

Check se_check(std::string name, double value, double reference, double se, double n_se, std::string note = {})
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

/// Interior node with the largest variance: a well-conditioned probe point.
std::size_t probe_node(const KLBasis& basis)
{
    const Eigen::VectorXd var = basis.variance();
    std::size_t node = 0;
    var.maxCoeff(&node);
    return node;
}

}  // namespace

std::vector<Check> verify_flow(const FlowConfig& cfg_in, const KLBasis& basis, const FlowVerifyOptions& options)
{
    const FlowConfig cfg = prepared(cfg_in, basis);
    if (options.draws < 2) throw ValidationError("flow verification needs at least 2 draws");
    for (const auto& name : options.checks)
        if (name != "mean" && name != "cov" && name != "structure" && name != "moments" && name != "sobolev")
            throw ValidationError("unknown flow check '" + name + "' (expected mean|cov|structure|moments|sobolev)");

    const auto& domain = basis.domain();
    const int dim = domain.dim();
    const auto n = basis.node_count();
    const double w = flow_weight(cfg);
    const double a2w2 = cfg.amplitude * cfg.amplitude * w * w;
    const std::size_t probe = probe_node(basis);
    std::vector<Check> checks;

    {
        // Laminar gate: RE = RE_*/2 and RE = RE_* must both reproduce u bit-exactly.
        int violations = 0;
        for (double frac : {0.5, 1.0}) {
            FlowConfig lam = cfg;
            lam.nu = speed(cfg) * cfg.length / (frac * cfg.re_star);
            if (!(lam.nu > 0.0)) continue;
            for (std::uint64_t s = 0; s < 100; ++s) {
                const auto t = sample_turbulent(lam, basis, options.seed + s, 0);
                for (int a = 0; a < dim; ++a)
                    for (std::size_t j = 0; j < n; ++j)
                        if (t.values(static_cast<Eigen::Index>(j), a) != cfg.u[a]) ++violations;
            }
        }
        checks.push_back({"laminar_gate_exact", static_cast<double>(violations), 0.0, 0.0, violations == 0,
                          "nodes differing from u over 100 seeds at RE = RE*/2 and RE = RE*"});
    }
    {
        // Viscosity suppression: for a fixed draw the perturbation shrinks as nu grows.
        const Eigen::VectorXd xi = draw_xi(basis, options.seed, 0);
        double previous = std::numeric_limits<double>::infinity();
        bool monotone = true;
        double last = 0.0;
        for (double factor : {1.0, 10.0, 100.0, 1e3, 1e4, 1e5}) {
            FlowConfig v = cfg;
            v.nu = cfg.nu * factor;
            Eigen::MatrixXd f = turbulent_field(v, basis, xi);
            for (int a = 0; a < dim; ++a) f.col(a).array() -= cfg.u[a];
            last = f.cwiseAbs().maxCoeff();
            if (last > previous) monotone = false;
            previous = last;
        }
        checks.push_back({"viscosity_suppression", last, 0.0, 0.0, monotone,
                          "max |U - u| is nonincreasing as nu grows by 1e5"});
    }

    const bool want_mean = options.checks.count("mean") > 0;
    const bool want_cov = options.checks.count("cov") > 0;
    const bool want_structure = options.checks.count("structure") > 0;
    const bool want_sobolev = options.checks.count("sobolev") > 0;

    // Probe node pairs for covariance and structure checks along axis 0.
    const int np = domain.nodes_per_axis();
    std::vector<std::array<int, 3>> offsets;
    for (int step : {1, np / 8, np / 4, np / 2})
        if (step > 0) offsets.push_back({step, 0, 0});
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    {
        auto base = domain.multi_index(probe);
        for (const auto& off : offsets) {
            auto i = base;
            i[0] = (base[0] + off[0] < np) ? base[0] + off[0] : base[0] - off[0];
            if (i[0] < 0) continue;
            pairs.emplace_back(probe, domain.flat_index(i));
        }
    }

    const std::size_t off_mean = 0;
    const std::size_t n_mean = want_mean ? n * dim : 0;
    const std::size_t off_cov = off_mean + n_mean;
    const std::size_t n_cov = want_cov ? pairs.size() * dim * dim : 0;
    const std::size_t off_s2 = off_cov + n_cov;
    const std::size_t n_s2 = want_structure ? pairs.size() + 1 : 0;
    const std::size_t off_sob = off_s2 + n_s2;
    const std::size_t n_sob = want_sobolev ? 2 : 0;
    const std::size_t width = off_sob + n_sob;

    if (width > 0) {
        const auto est = run_monte_carlo(options.draws, width, options.workers, [&](std::uint64_t d, std::span<double> out) {
            const Eigen::VectorXd xi = draw_xi(basis, options.seed, d);
            const Eigen::MatrixXd v = turbulent_field(cfg, basis, xi);
            if (want_mean)
                for (int a = 0; a < dim; ++a)
                    for (std::size_t j = 0; j < n; ++j) out[off_mean + a * n + j] = v(static_cast<Eigen::Index>(j), a);
            if (want_cov) {
                std::size_t k = off_cov;
                for (const auto& [x, y] : pairs)
                    for (int a = 0; a < dim; ++a)
                        for (int b = 0; b < dim; ++b)
                            out[k++] = (v(static_cast<Eigen::Index>(x), a) - cfg.u[a]) *
                                       (v(static_cast<Eigen::Index>(y), b) - cfg.u[b]);
            }
            if (want_structure) {
                out[off_s2] = (v.row(static_cast<Eigen::Index>(probe)) - v.row(static_cast<Eigen::Index>(probe))).squaredNorm();
                for (std::size_t p = 0; p < pairs.size(); ++p)
                    out[off_s2 + 1 + p] =
                        (v.row(static_cast<Eigen::Index>(pairs[p].second)) - v.row(static_cast<Eigen::Index>(pairs[p].first)))
                            .squaredNorm();
            }
            if (want_sobolev) {
                out[off_sob] = vector_sobolev_norm(cfg, basis, xi, 1);
                out[off_sob + 1] = vector_sobolev_norm(cfg, basis, xi, 2);
            }
        });

        if (want_mean) {
            double worst = 0.0;
            bool ok = true;
            for (int a = 0; a < dim; ++a)
                for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t k = off_mean + a * n + j;
                    const double diff = std::abs(est.mean(k) - cfg.u[a]);
                    const double se = est.standard_error(k);
                    if (se > 0.0) {
                        worst = std::max(worst, diff / se);
                    } else if (diff != 0.0) {
                        ok = false;
                    }
                }
            checks.push_back({"mean_equals_u", worst, 0.0, 4.0, ok && worst <= 4.0,
                              "max |mean(U_a) - u_a|/SE over nodes and components"});
            double zero_diff = 0.0;
            for (const auto& [x, y] : pairs)
                zero_diff = std::max(zero_diff, mean_difference(cfg, basis, x, y).cwiseAbs().maxCoeff());
            checks.push_back({"mean_difference_zero", zero_diff, 0.0, 0.0, zero_diff == 0.0,
                              "E[U(x) - U(y)] for constant u"});
        }
        if (want_cov) {
            // Factorization of the analytic covariance across component pairs.
            double spread = 0.0;
            for (const auto& [x, y] : pairs) {
                const Eigen::MatrixXd c = covariance(cfg, basis, x, y);
                const double scalar = basis.mercer(x, y);
                for (int a = 0; a < dim; ++a)
                    for (int b = 0; b < dim; ++b) {
                        const double denom = a2w2 * cfg.u[a] * cfg.u[b];
                        if (denom == 0.0) continue;
                        spread = std::max(spread, std::abs(c(a, b) / denom - scalar) / std::max(std::abs(scalar), 1e-300));
                    }
            }
            checks.push_back({"covariance_factorization", spread, 0.0, 1e-10, spread <= 1e-10,
                              "max relative spread of Cov_ab / (A^2 u_a u_b W^2) around the Mercer scalar"});
            double worst = 0.0;
            std::size_t k = off_cov;
            for (const auto& [x, y] : pairs)
                for (int a = 0; a < dim; ++a)
                    for (int b = 0; b < dim; ++b, ++k) {
                        const double denom = a2w2 * cfg.u[a] * cfg.u[b];
                        if (denom == 0.0) continue;
                        const double se = est.standard_error(k) / std::abs(denom);
                        worst = std::max(worst, std::abs(est.mean(k) / denom - basis.mercer(x, y)) / se);
                    }
            checks.push_back({"covariance_vs_mercer", worst, 0.0, 3.0, worst <= 3.0,
                              "max |Cov_ab/(A^2 u_a u_b W^2) - Mercer|/SE"});
            if (basis.kernel().stationary() && np >= 8) {
                // Homogeneity of the analytic covariance under a grid translation, limited by Mercer truncation.
                const auto ref = domain.multi_index(probe);
                std::array<int, 3> i0 = ref;
                std::array<int, 3> i1 = ref;
                i1[0] = std::min(np - 1, ref[0] + 1);
                std::array<int, 3> s0 = i0;
                std::array<int, 3> s1 = i1;
                const int shift = i1[0] + 1 < np ? 1 : -1;
                s0[0] += shift;
                s1[0] += shift;
                const double c0 = basis.mercer(domain.flat_index(i0), domain.flat_index(i1));
                const double c1 = basis.mercer(domain.flat_index(s0), domain.flat_index(s1));
                const double k0 = basis.kernel().eval(
                    std::span<const double>(domain.point(domain.flat_index(i0)).coords.data(), dim),
                    std::span<const double>(domain.point(domain.flat_index(i1)).coords.data(), dim));
                const double k1 = basis.kernel().eval(
                    std::span<const double>(domain.point(domain.flat_index(s0)).coords.data(), dim),
                    std::span<const double>(domain.point(domain.flat_index(s1)).coords.data(), dim));
                // Nonuniform grids change the separation, so each Mercer value is compared to its own kernel
                // value. The dropped modes form a positive semidefinite remainder r, which bounds the
                // truncation error by sqrt(r(x) r(y)).
                const auto remainder = [&](const std::array<int, 3>& i) {
                    const std::size_t j = domain.flat_index(i);
                    const auto p = std::span<const double>(domain.point(j).coords.data(), dim);
                    return std::max(0.0, basis.kernel().eval(p, p) - basis.mercer(j, j));
                };
                const double b0 = std::sqrt(remainder(i0) * remainder(i1));
                const double b1 = std::sqrt(remainder(s0) * remainder(s1));
                const double slack = 1e-10 * basis.variance().maxCoeff();
                const double dev = std::max(std::abs(c0 - k0), std::abs(c1 - k1));
                const bool ok = std::abs(c0 - k0) <= b0 + slack && std::abs(c1 - k1) <= b1 + slack;
                checks.push_back({"covariance_homogeneity", dev, 0.0, std::max(b0, b1) + slack, ok,
                                  "Mercer covariance tracks the stationary kernel under translation within the "
                                  "truncation bound sqrt(r(x) r(y))"});
            }
        }
        if (want_structure) {
            checks.push_back({"structure_zero_separation", est.mean(off_s2),
                              structure_function(cfg, basis, probe, {0, 0, 0}), 0.0,
                              est.mean(off_s2) == 0.0 && structure_function(cfg, basis, probe, {0, 0, 0}) == 0.0,
                              "S2(0) analytic and sampled"});
            double worst = 0.0;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const auto& [x, y] = pairs[p];
                auto ix = domain.multi_index(x);
                auto iy = domain.multi_index(y);
                const std::array<int, 3> off{iy[0] - ix[0], iy[1] - ix[1], iy[2] - ix[2]};
                const double ref = structure_function(cfg, basis, x, off);
                const double se = est.standard_error(off_s2 + 1 + p);
                if (se > 0.0) worst = std::max(worst, std::abs(est.mean(off_s2 + 1 + p) - ref) / se);
            }
            checks.push_back({"structure_vs_analytic", worst, 0.0, 3.0, worst <= 3.0, "max |S2_mc - S2|/SE"});
        }
        if (want_sobolev) {
            checks.push_back(se_check("vector_h1_expectation", est.mean(off_sob), vector_sobolev_expectation(cfg, basis, 1),
                                      est.standard_error(off_sob), 3.0));
            checks.push_back(se_check("vector_h2_expectation", est.mean(off_sob + 1),
                                      vector_sobolev_expectation(cfg, basis, 2), est.standard_error(off_sob + 1), 3.0,
                                      basis.exact_derivatives() ? "analytic second derivatives"
                                                                : "finite-difference second derivatives"));
        }
    }

    if (options.checks.count("moments") > 0) {
        for (int p : {2, 4}) {
            bool holds = true;
            double worst_ratio = 0.0;
            double worst_z = 0.0;
            std::string literal_note;
            for (int a = 0; a < dim; ++a) {
                if (cfg.u[a] == 0.0) continue;
                const auto m = moment_bound_check(cfg, basis, probe, a, p, options.draws, options.seed, options.workers);
                holds = holds && m.holds;
                worst_ratio = std::max(worst_ratio, m.estimate / m.bound);
                if (m.standard_error > 0.0) worst_z = std::max(worst_z, std::abs(m.estimate - m.exact) / m.standard_error);
                if (literal_note.empty())
                    literal_note = "component " + std::to_string(a) + ": literal-form bound " +
                                   std::to_string(m.literal) + (m.estimate <= m.literal ? " holds" : " is violated") +
                                   " (estimate " + std::to_string(m.estimate) + ")";
            }
            checks.push_back({"moment_bound_p" + std::to_string(p), worst_ratio, 1.0, 0.0, holds,
                              "max estimate/bound; " + literal_note});
            checks.push_back({"moment_exact_p" + std::to_string(p), worst_z, 0.0, 4.0, worst_z <= 4.0,
                              "max |MC - Gaussian closed form|/SE"});
        }
        double worst = 0.0;
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) {
                const auto g = gradient_moment(cfg, basis, probe, a, b, 2, options.draws, options.seed, options.workers);
                if (g.standard_error > 0.0) worst = std::max(worst, std::abs(g.estimate - g.analytic_p2) / g.standard_error);
                else if (g.estimate != g.analytic_p2) worst = std::numeric_limits<double>::infinity();
            }
        checks.push_back({"gradient_moment_p2", worst, 0.0, 3.0, worst <= 3.0,
                          "max |E|d_b U_a|^2 - analytic|/SE at the probe node"});
    }
    return checks;
}

}  // namespace klturb
