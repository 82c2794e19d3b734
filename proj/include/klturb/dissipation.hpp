#pragma once

#include "klturb/flow.hpp"
#include "klturb/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace klturb {

/// nu (|u| L / nu - RE_*)^{2 beta} when RE > RE_*, else 0. Any beta > 0 is accepted here.
double scaling_factor(const FlowConfig& cfg, double nu);

/// sum_I Z_I H_grad,I.
double gradient_energy(const KLBasis& basis);

/// D(nu) = nu A^2 |u|^2 (RE - RE_*)^{2 beta} T sum_I Z_I H_grad,I for constant u.
double dissipation_analytic(const FlowConfig& cfg, const KLBasis& basis, double nu);

/// A^2 |u|^3 L T sum_I Z_I H_grad,I, the beta = 1/2 inviscid limit.
double dissipation_limit(const FlowConfig& cfg, const KLBasis& basis);

struct McValue {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Per-nu estimate of nu T int |grad U|^2 dV. Every nu reuses the same (seed, draw)
/// normals, so the curve is a smooth function of nu for a fixed seed.
std::vector<McValue> dissipation_monte_carlo(const FlowConfig& cfg, const KLBasis& basis,
                                             const std::vector<double>& nu_grid, std::uint64_t draws,
                                             std::uint64_t seed, unsigned workers = 0);

/// Log-spaced grid from nu_max down to nu_min, strictly decreasing.
std::vector<double> log_nu_grid(double nu_min, double nu_max, int points);

enum class Verdict { anomalous, vanishing, divergent, inconclusive };
std::string to_string(Verdict v);

struct DissipationPoint {
    double nu = 0.0;
    double re = 0.0;
    double d_mc = 0.0;
    double d_se = 0.0;
    double d_analytic = 0.0;
    bool laminar = false;
};

struct DissipationReport {
    FlowConfig config;
    std::uint64_t draws = 0;
    std::uint64_t seed = 0;
    std::vector<DissipationPoint> points;
    double gradient_energy = 0.0;  ///< sum Z H_grad
    double limit_analytic = 0.0;
    double slope = 0.0;            ///< fitted on the Monte Carlo curve
    double slope_analytic = 0.0;   ///< same fit on the closed form
    int fit_points = 0;
    double d_at_min = 0.0;
    double max_se_deviation = 0.0; ///< max_nu |D_mc - D_analytic| / SE
    Verdict verdict = Verdict::inconclusive;
};

/// Runs the sweep and classifies the small-nu behaviour. The slope is a least-squares
/// fit of log D against log nu over the smallest decade of non-laminar points.
DissipationReport sweep(const FlowConfig& cfg, const KLBasis& basis, const std::vector<double>& nu_grid,
                        std::uint64_t draws, std::uint64_t seed, unsigned workers = 0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct BlowupDiagnostic {
    std::vector<double> magnitude;  ///< E[|grad U(x)|^2]^{1/2} per nu
    std::vector<double> rescaled;   ///< magnitude * sqrt(nu)
    bool strictly_increasing = false;
};

BlowupDiagnostic gradient_blowup_diagnostic(const FlowConfig& cfg, const KLBasis& basis,
                                            const std::vector<double>& nu_grid, std::size_t node);

struct NSResidual {
    /// node_count x dim expected residual A^2 W^2 u_a sum_b u_b sum_I Z_I f_I d_b f_I.
    Eigen::MatrixXd expected;
    /// A^2 |u|^2 W^2 max_j sigma^2(x_j), the natural magnitude of the residual.
    double scale = 0.0;
    /// Nodes at least one correlation length (or one grid cell) from the boundary.
    std::vector<std::size_t> interior;
};

NSResidual ns_residual(const FlowConfig& cfg, const KLBasis& basis);

/// Monte Carlo estimate of E[U . grad U_a] per node and component (node-major, component-minor).
std::vector<McValue> ns_residual_monte_carlo(const FlowConfig& cfg, const KLBasis& basis, std::uint64_t draws,
                                             std::uint64_t seed, unsigned workers = 0);

struct BinomialSeries {
    double direct = 0.0;
    std::vector<double> partial_sums;  ///< after 1, 2, ..., terms terms
    std::vector<double> ratios;        ///< |t_{n+1} / t_n| where t_n != 0
    double ratio_limit = 0.0;          ///< RE_* / RE
};

/// Truncated binomial expansion of nu (RE - RE_*)^{2 beta}. Throws ValidationError if RE <= RE_*.
BinomialSeries binomial_consistency(const FlowConfig& cfg, double nu, int terms);

struct CrossTerm {
    std::string name;
    double value = 0.0;
};

struct CrossTermLedger {
    double surviving = 0.0;  ///< nu T A^2 |u|^2 W^2 sum_I Z_I H_grad,I
    double route2 = 0.0;     ///< nu T A^2 |u|^2 W^2 int sum_I Z_I |grad f_I|^2 dV
    std::vector<CrossTerm> cross;
    double cross_total = 0.0;  ///< sum of |cross term|
};

/// Expands E|d_b U_a|^2 for U_a = u_a (1 + A W T) term by term, with grad u and grad W taken
/// by grid differentiation of the (constant) fields and E[xi] = 0, E[xi xi^T] = I.
CrossTermLedger cross_term_ledger(const FlowConfig& cfg, const KLBasis& basis, double nu);

}  // namespace klturb
