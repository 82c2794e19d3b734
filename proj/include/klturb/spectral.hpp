#pragma once

#include "klturb/geometry.hpp"
#include "klturb/kernels.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace klturb {

enum class BasisKind { nystrom, dirichlet_analytic };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// Truncated KL eigenpairs on a tensor grid.
///
/// Eigenfunctions are stored node-major: eigenfunctions()(j, I) = f_I(x_j), with
/// sum_j w_j f_I(x_j) f_J(x_j) = delta_IJ. Immutable once built.
class KLBasis {
public:
    /// Assemble from stored eigenpairs and rebuild derivative tables. Used by the
    /// solvers and by the basis file loader.
    static KLBasis assemble(BoxDomain domain, Kernel kernel, BasisKind kind, Eigen::VectorXd eigenvalues,
                            Eigen::MatrixXd eigenfunctions, std::vector<std::array<int, 3>> dirichlet_modes,
                            bool truncated);

    const BoxDomain& domain() const { return domain_; }
    const Kernel& kernel() const { return kernel_; }
    BasisKind kind() const { return kind_; }
    int size() const { return static_cast<int>(z_.size()); }
    std::size_t node_count() const { return domain_.node_count(); }

    const Eigen::VectorXd& eigenvalues() const { return z_; }
    const Eigen::MatrixXd& eigenfunctions() const { return f_; }
    /// (node_count x N) table of d f_I / d x_axis.
    const Eigen::MatrixXd& gradient(int axis) const { return grad_.at(axis); }
    /// (node_count x N) table of d^2 f_I / d x_a d x_b.
    const Eigen::MatrixXd& hessian(int a, int b) const { return hess_.at(a * domain_.dim() + b); }

    /// True when fewer modes than requested survived the eigenvalue floor.
    bool truncated() const { return truncated_; }
    /// Analytic derivatives (Dirichlet) vs. grid finite differences (Nystrom).
    bool exact_derivatives() const { return kind_ == BasisKind::dirichlet_analytic; }
    const std::vector<std::array<int, 3>>& dirichlet_modes() const { return modes_; }

    /// sigma^2(x_j) = sum_I Z_I f_I(x_j)^2.
    Eigen::VectorXd variance() const;
    /// sum_I Z_I f_I(x_j) f_I(x_k).
    double mercer(std::size_t j, std::size_t k) const;

    /// f_I at an arbitrary point (Dirichlet basis only).
    double evaluate_mode(int mode, std::span<const double> x) const;

private:
    KLBasis() = default;

    BoxDomain domain_ = BoxDomain::build(1, {1.0}, 2);
    Kernel kernel_ = Kernel::gaussian(1.0);
    BasisKind kind_ = BasisKind::nystrom;
    Eigen::VectorXd z_;
    Eigen::MatrixXd f_;
    std::vector<Eigen::MatrixXd> grad_;
    std::vector<Eigen::MatrixXd> hess_;
    std::vector<std::array<int, 3>> modes_;
    bool truncated_ = false;
};

/// Relative eigenvalue floor: modes with Z <= floor * Z_1 are dropped.
inline constexpr double eigenvalue_floor = 1e-12;

/// Symmetrized Nystrom discretization of the Fredholm problem int K(x,y) f(y) dV = Z f(x).
/// Eigenvalues descending.
KLBasis solve_nystrom(const BoxDomain& domain, const Kernel& kernel, int n_modes);

/// Analytic eigenpairs of -Laplacian with zero boundary values, eigenvalues ascending.
KLBasis dirichlet_basis(const BoxDomain& domain, int n_modes);

/// (node_count x dim) gradient of f_I.
Eigen::MatrixXd eigenfunction_gradient(const KLBasis& basis, int mode);

struct BasisIntegrals {
    Eigen::VectorXd H;                 ///< int f_I^2
    std::vector<Eigen::VectorXd> H_a;  ///< int f_I d_a f_I, per axis
    Eigen::VectorXd H_grad;            ///< int |grad f_I|^2
    Eigen::VectorXd H_hess;            ///< int grad grad f_I : grad grad f_I
};

BasisIntegrals basis_integrals(const KLBasis& basis);

struct MercerDiagnostics {
    double trace_error = 0.0;          ///< |sum Z - N vol|
    double max_pointwise_error = 0.0;  ///< max_{j,k} |sum_I Z_I f_I(x_j) f_I(x_k) - K(x_j, x_k)|
    double kl_l2_tail = 0.0;           ///< N vol - sum Z
};

/// Nystrom bases only.
MercerDiagnostics mercer_diagnostics(const KLBasis& basis);

/// max_{I,J} |sum_j w_j f_I f_J - delta_IJ|.
double orthonormality_error(const KLBasis& basis);

/// max_{I,j} |sum_k w_k K(x_j, x_k) f_I(x_k) - Z_I f_I(x_j)| against the basis kernel.
double fredholm_residual(const KLBasis& basis);

/// Dense kernel matrix on the grid nodes.
Eigen::MatrixXd kernel_matrix(const BoxDomain& domain, const Kernel& kernel);

}  // namespace klturb
