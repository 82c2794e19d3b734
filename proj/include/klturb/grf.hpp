#pragma once

#include "klturb/checks.hpp"
#include "klturb/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace klturb {

/// One realization T(x_j) = sum_I sqrt(Z_I) f_I(x_j) xi_I.
struct GRFSample {
    std::uint64_t seed = 0;
    std::uint64_t draw = 0;
    Eigen::VectorXd xi;
    Eigen::VectorXd values;
};

/// The i.i.d. standard normals for (seed, draw), one per basis mode.
Eigen::VectorXd draw_xi(const KLBasis& basis, std::uint64_t seed, std::uint64_t draw);

GRFSample sample(const KLBasis& basis, std::uint64_t seed, std::uint64_t draw = 0);

Eigen::VectorXd field_values(const KLBasis& basis, const Eigen::VectorXd& xi);

/// (node_count x dim) gradient sum_I sqrt(Z_I) grad f_I(x_j) xi_I.
Eigen::MatrixXd field_gradient(const KLBasis& basis, const Eigen::VectorXd& xi);

/// (node_count x dim*dim) second derivatives, column a*dim + b.
Eigen::MatrixXd field_hessian(const KLBasis& basis, const Eigen::VectorXd& xi);

/// E|T(x_j)|^p = (p-1)!! sigma^p(x_j) for even p >= 2.
double moment_p(const KLBasis& basis, std::size_t node, int p);

/// sum_I Z_I^{p/2} f_I^p(x_j) (p/2 - 1)!!, kept only as a comparison value.
double moment_p_literal(const KLBasis& basis, std::size_t node, int p);

double double_factorial(int n);

/// E ||T||^2_{H^s}: s=1 gives sum Z + sum Z H_grad, s=2 adds sum Z H_hess.
double sobolev_norm_expectation(const KLBasis& basis, int s);

/// ||T||^2_{H^s} of one realization, by quadrature.
double sobolev_norm(const KLBasis& basis, const Eigen::VectorXd& xi, int s);

struct VarianceIntegral {
    double quadrature = 0.0;  ///< int sum_I Z_I f_I^2 dV
    double eigen_sum = 0.0;   ///< sum_I Z_I
    double scaled_by_volume = 0.0;  ///< sum_I Z_I * vol, the alternative normalization
    bool consistent = false;  ///< relative agreement within 1e-6
};

VarianceIntegral variance_integral(const KLBasis& basis);

/// xi_I = Z_I^{-1/2} sum_j w_j T(x_j) f_I(x_j).
Eigen::VectorXd project_xi(const KLBasis& basis, const Eigen::VectorXd& values);

struct GRFVerifyOptions {
    std::uint64_t draws = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::uint64_t moment_draws = 1000000;  ///< for the fourth-moment arbitration
    int covariance_pairs = 20;
};

/// Monte Carlo and identity checks for the scalar field. All checks are deterministic
/// functions of (basis, options) excluding `workers`.
std::vector<Check> verify_grf(const KLBasis& basis, const GRFVerifyOptions& options);

}  // namespace klturb
