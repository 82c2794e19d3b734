#pragma once

#include "klturb/checks.hpp"
#include "klturb/grf.hpp"
#include "klturb/spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace klturb {

/// Constant underlying flow plus the Reynolds weighting parameters.
struct FlowConfig {
    std::vector<double> u{1.0};  ///< one component per axis
    double nu = 1e-3;
    double amplitude = 1.0;      ///< A
    double beta = 0.5;
    double re_star = 2000.0;
    double length = 0.0;         ///< L; 0 means vol^(1/dim) of the basis domain
    double horizon = 1.0;        ///< T, the time-integration window

    /// Throws ValidationError on nu <= 0, beta outside (0, 0.5], re_star <= 0,
    /// non-finite A, or (when dim >= 0) a u of the wrong length.
    void validate(int dim = -1) const;
};

/// Copy of cfg with `length` filled in from the domain when unset.
FlowConfig resolve_length(const FlowConfig& cfg, const BoxDomain& domain);

double speed(const FlowConfig& cfg);

/// speed * L / nu.
double reynolds(const FlowConfig& cfg, double speed);

/// (re - re_star)^beta for re > re_star, else 0 (the boundary belongs to the laminar branch).
double weighting(const FlowConfig& cfg, double re);

/// W at the configured speed and viscosity.
double flow_weight(const FlowConfig& cfg);

struct TurbulentSample {
    GRFSample grf;
    Eigen::MatrixXd values;  ///< node_count x dim
};

/// U_a(x_j) = u_a (1 + A W T(x_j)). When W = 0 the result is u exactly.
Eigen::MatrixXd turbulent_field(const FlowConfig& cfg, const KLBasis& basis, const Eigen::VectorXd& xi);

/// Same construction for a grid-specified u (node_count x dim), W evaluated per node from
/// the local speed. Formula-level quantities are not available for this path.
Eigen::MatrixXd turbulent_field(const FlowConfig& cfg, const KLBasis& basis, const Eigen::VectorXd& xi,
                                const Eigen::MatrixXd& u_grid);

TurbulentSample sample_turbulent(const FlowConfig& cfg, const KLBasis& basis, std::uint64_t seed,
                                 std::uint64_t draw = 0);

/// (node_count x dim*dim) gradient d_b U_a in column a*dim + b, for constant u.
Eigen::MatrixXd turbulent_gradient(const FlowConfig& cfg, const KLBasis& basis, const Eigen::VectorXd& xi);

/// Cov_ab(x_j, x_k) = A^2 u_a u_b W^2 sum_I Z_I f_I(x_j) f_I(x_k).
Eigen::MatrixXd covariance(const FlowConfig& cfg, const KLBasis& basis, std::size_t j, std::size_t k);

/// Node reached from `node` by an integer grid offset; throws if it leaves the grid.
std::size_t offset_node(const BoxDomain& domain, std::size_t node, const std::array<int, 3>& offset);

/// S_2 = E|U(x+l) - U(x)|^2 = A^2 |u|^2 W^2 [sigma^2(x) + sigma^2(x+l) - 2 Mercer(x, x+l)].
double structure_function(const FlowConfig& cfg, const KLBasis& basis, std::size_t node,
                          const std::array<int, 3>& offset);

/// E[U(x) - U(y)] per component, which is u(x) - u(y) = 0 for constant u.
Eigen::VectorXd mean_difference(const FlowConfig& cfg, const KLBasis& basis, std::size_t j, std::size_t k);

struct MomentBound {
    double estimate = 0.0;   ///< Monte Carlo E|U_a(x)|^p
    double standard_error = 0.0;
    double exact = 0.0;      ///< closed-form Gaussian value
    double bound = 0.0;      ///< 2^{p-1}|u_a|^p + 2^{p-1}|A u_a W|^p (p-1)!! sigma^p
    double literal = 0.0;    ///< same bound with sum Z^{p/2} f^p (p/2-1)!! in place of the Gaussian moment
    bool holds = false;      ///< estimate <= bound
};

MomentBound moment_bound_check(const FlowConfig& cfg, const KLBasis& basis, std::size_t node, int axis, int p,
                               std::uint64_t draws, std::uint64_t seed, unsigned workers = 0);

struct GradientMoment {
    double estimate = 0.0;
    double standard_error = 0.0;
    double analytic_p2 = 0.0;  ///< A^2 u_a^2 W^2 sum_I Z_I (d_b f_I(x))^2
};

GradientMoment gradient_moment(const FlowConfig& cfg, const KLBasis& basis, std::size_t node, int a, int b, int p,
                               std::uint64_t draws, std::uint64_t seed, unsigned workers = 0);

/// E||U||^2_{H^s}: |u|^2 vol + A^2 |u|^2 W^2 [sum Z + sum Z H_grad (+ sum Z H_hess)].
double vector_sobolev_expectation(const FlowConfig& cfg, const KLBasis& basis, int s);

/// ||U||^2_{H^s} of one realization by quadrature.
double vector_sobolev_norm(const FlowConfig& cfg, const KLBasis& basis, const Eigen::VectorXd& xi, int s);

struct FlowVerifyOptions {
    std::uint64_t draws = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::set<std::string> checks{"mean", "cov", "structure", "moments", "sobolev"};
};

std::vector<Check> verify_flow(const FlowConfig& cfg, const KLBasis& basis, const FlowVerifyOptions& options);

}  // namespace klturb
