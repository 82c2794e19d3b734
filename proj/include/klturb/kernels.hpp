#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace klturb {

enum class KernelType { gaussian, rational_quadratic, analytic_dirichlet };

std::string to_string(KernelType type);
KernelType kernel_type_from_string(const std::string& name);

/// Dirichlet-Laplacian mode indices on a box, ordered by ascending eigenvalue
/// pi^2 * sum (n_a / S_a)^2, ties broken lexicographically. Entries past dim are 0.
std::vector<std::array<int, 3>> dirichlet_mode_indices(const std::vector<double>& sides, int count);
double dirichlet_eigenvalue(const std::vector<double>& sides, const std::array<int, 3>& mode);
double dirichlet_mode_value(const std::vector<double>& sides, const std::array<int, 3>& mode,
                            std::span<const double> x);

/// Covariance kernel K(x, y). Points are spans of length dim.
class Kernel {
public:
    static Kernel gaussian(double lambda, double normalization = 1.0);
    static Kernel rational_quadratic(double lambda, double alpha, double normalization = 1.0);
    /// Truncated Mercer sum of the first M Dirichlet modes of the box with the given sides.
    static Kernel analytic_dirichlet(int truncation, std::vector<double> sides,
                                     double normalization = 1.0);

    KernelType type() const { return type_; }
    double lambda() const { return lambda_; }
    double alpha() const { return alpha_; }
    int truncation() const { return truncation_; }
    double normalization() const { return norm_; }
    const std::vector<double>& sides() const { return sides_; }
    bool stationary() const { return type_ != KernelType::analytic_dirichlet; }

    double eval(std::span<const double> x, std::span<const double> y) const;

    /// dK/dx_a. Throws ValidationError for the analytic Dirichlet kernel.
    Eigen::VectorXd grad_x(std::span<const double> x, std::span<const double> y) const;
    Eigen::VectorXd grad_y(std::span<const double> x, std::span<const double> y) const;

    /// d^2 K / dx_a dy_b.
    Eigen::MatrixXd mixed_grad(std::span<const double> x, std::span<const double> y) const;

    bool operator==(const Kernel& other) const = default;

private:
    Kernel() = default;
    void check_stationary(const char* op) const;

    KernelType type_ = KernelType::gaussian;
    double lambda_ = 1.0;
    double alpha_ = 1.0;
    int truncation_ = 0;
    double norm_ = 1.0;
    std::vector<double> sides_;
    std::vector<std::array<int, 3>> modes_;
};

struct SpectralOptions {
    double cutoff = 0.0;              ///< integrate xi over [-cutoff, cutoff]
    int panels = 512;                 ///< composite Gauss-Legendre panels on [0, cutoff]
    int order = 16;                   ///< nodes per panel
    bool require_convergence = true;  ///< reject densities whose tail mass has not decayed
    bool normalize = false;           ///< divide by K_hat(0)
};

/// 1D kernel reconstructed from a spectral density:
/// K_hat(r) = int_{-c}^{c} S(xi) cos(xi r) dxi.
class SpectralKernel {
public:
    double operator()(double x, double y) const;
    double at_lag(double r) const;
    double zero_lag() const { return k0_; }
    /// Fraction of int |S| carried by the outer half of the wavenumber range.
    double tail_fraction() const { return tail_fraction_; }

private:
    friend SpectralKernel kernel_from_spectral_density(const std::function<double(double)>&,
                                                       const SpectralOptions&);
    std::vector<double> xi_;
    std::vector<double> weighted_density_;
    double k0_ = 0.0;
    double scale_ = 1.0;
    double tail_fraction_ = 0.0;
};

SpectralKernel kernel_from_spectral_density(const std::function<double(double)>& density,
                                            const SpectralOptions& options);

/// S(xi) = lambda / (2 sqrt(pi)) exp(-lambda^2 xi^2 / 4), whose transform is exp(-r^2/lambda^2).
double gaussian_spectral_density(double lambda, double xi);

}  // namespace klturb
