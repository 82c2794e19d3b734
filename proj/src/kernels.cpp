#include "klturb/kernels.hpp"

#include "klturb/errors.hpp"
#include "klturb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace klturb {

std::string to_string(KernelType type)
{
    switch (type) {
    case KernelType::gaussian: return "gaussian";
    case KernelType::rational_quadratic: return "rq";
    case KernelType::analytic_dirichlet: return "dirichlet";
    }
    return "unknown";
}

KernelType kernel_type_from_string(const std::string& name)
{
    if (name == "gaussian") return KernelType::gaussian;
    if (name == "rq" || name == "rational-quadratic" || name == "rational_quadratic")
        return KernelType::rational_quadratic;
    if (name == "dirichlet") return KernelType::analytic_dirichlet;
    throw ValidationError("unknown kernel '" + name + "' (expected gaussian|rq|dirichlet)");
}

double dirichlet_eigenvalue(const std::vector<double>& sides, const std::array<int, 3>& mode)
{
    double z = 0.0;
    for (std::size_t a = 0; a < sides.size(); ++a) {
        const double k = mode[a] / sides[a];
        z += k * k;
    }
    return std::numbers::pi * std::numbers::pi * z;
}

std::vector<std::array<int, 3>> dirichlet_mode_indices(const std::vector<double>& sides, int count)
{
    if (count < 1) throw ValidationError("dirichlet mode count must be >= 1");
    const int dim = static_cast<int>(sides.size());
    if (dim < 1 || dim > 3) throw ValidationError("dirichlet modes need dim in {1,2,3}");

    // The count smallest modes never use an index above count on any axis.
    std::vector<std::array<int, 3>> all;
    std::array<int, 3> m{1, dim > 1 ? 1 : 0, dim > 2 ? 1 : 0};
    const int hi1 = dim > 1 ? count : 0;
    const int hi2 = dim > 2 ? count : 0;
    for (m[2] = dim > 2 ? 1 : 0; m[2] <= hi2; ++m[2])
        for (m[1] = dim > 1 ? 1 : 0; m[1] <= hi1; ++m[1])
            for (m[0] = 1; m[0] <= count; ++m[0]) all.push_back(m);

    std::vector<std::pair<double, std::array<int, 3>>> keyed;
    keyed.reserve(all.size());
    for (const auto& mode : all) keyed.emplace_back(dirichlet_eigenvalue(sides, mode), mode);
    const auto less = [](const auto& l, const auto& r) {
        return std::tie(l.first, l.second) < std::tie(r.first, r.second);
    };
    std::partial_sort(keyed.begin(), keyed.begin() + std::min<std::size_t>(count, keyed.size()),
                      keyed.end(), less);
    std::vector<std::array<int, 3>> out;
    for (int i = 0; i < count && i < static_cast<int>(keyed.size()); ++i) out.push_back(keyed[i].second);
    return out;
}

double dirichlet_mode_value(const std::vector<double>& sides, const std::array<int, 3>& mode,
                            std::span<const double> x)
{
    double v = 1.0;
    for (std::size_t a = 0; a < sides.size(); ++a)
        v *= std::sqrt(2.0 / sides[a]) * std::sin(mode[a] * std::numbers::pi * x[a] / sides[a]);
    return v;
}

Kernel Kernel::gaussian(double lambda, double normalization)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
    if (!(normalization > 0.0)) throw ValidationError("kernel normalization must be positive");
    Kernel k;
    k.type_ = KernelType::gaussian;
    k.lambda_ = lambda;
    k.norm_ = normalization;
    return k;
}

Kernel Kernel::rational_quadratic(double lambda, double alpha, double normalization)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be positive");
    if (!(normalization > 0.0)) throw ValidationError("kernel normalization must be positive");
    Kernel k;
    k.type_ = KernelType::rational_quadratic;
    k.lambda_ = lambda;
    k.alpha_ = alpha;
    k.norm_ = normalization;
    return k;
}

Kernel Kernel::analytic_dirichlet(int truncation, std::vector<double> sides, double normalization)
{
    if (truncation < 1) throw ValidationError("dirichlet kernel truncation must be >= 1");
    if (!(normalization > 0.0)) throw ValidationError("kernel normalization must be positive");
    Kernel k;
    k.type_ = KernelType::analytic_dirichlet;
    k.truncation_ = truncation;
    k.norm_ = normalization;
    k.modes_ = dirichlet_mode_indices(sides, truncation);
    k.sides_ = std::move(sides);
    return k;
}

void Kernel::check_stationary(const char* op) const
{
    if (!stationary())
        throw ValidationError(std::string(op) +
                              " is not available for the analytic Dirichlet kernel; use the basis gradients");
}

namespace {

double squared_distance(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ValidationError("kernel points have different dimensions");
    double r2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double d = x[a] - y[a];
        r2 += d * d;
    }
    return r2;
}

}  // namespace

double Kernel::eval(std::span<const double> x, std::span<const double> y) const
{
    switch (type_) {
    case KernelType::gaussian:
        return norm_ * std::exp(-squared_distance(x, y) / (lambda_ * lambda_));
    case KernelType::rational_quadratic: {
        const double q = 1.0 + squared_distance(x, y) / (2.0 * alpha_ * lambda_ * lambda_);
        return norm_ * std::pow(q, -alpha_);
    }
    case KernelType::analytic_dirichlet: {
        if (x.size() != sides_.size() || y.size() != sides_.size())
            throw ValidationError("kernel points do not match the Dirichlet box dimension");
        double s = 0.0;
        for (const auto& m : modes_)
            s += dirichlet_eigenvalue(sides_, m) * dirichlet_mode_value(sides_, m, x) *
                 dirichlet_mode_value(sides_, m, y);
        return norm_ * s;
    }
    }
    return 0.0;
}

Eigen::VectorXd Kernel::grad_x(std::span<const double> x, std::span<const double> y) const
{
    check_stationary("grad_x");
    const double r2 = squared_distance(x, y);
    const int dim = static_cast<int>(x.size());
    Eigen::VectorXd g(dim);
    double factor = 0.0;
    if (type_ == KernelType::gaussian) {
        factor = -2.0 / (lambda_ * lambda_) * norm_ * std::exp(-r2 / (lambda_ * lambda_));
    } else {
        const double q = 1.0 + r2 / (2.0 * alpha_ * lambda_ * lambda_);
        factor = -norm_ * std::pow(q, -alpha_ - 1.0) / (lambda_ * lambda_);
    }
    for (int a = 0; a < dim; ++a) g[a] = factor * (x[a] - y[a]);
    return g;
}

Eigen::VectorXd Kernel::grad_y(std::span<const double> x, std::span<const double> y) const
{
    return -grad_x(x, y);
}

Eigen::MatrixXd Kernel::mixed_grad(std::span<const double> x, std::span<const double> y) const
{
    check_stationary("mixed_grad");
    const double r2 = squared_distance(x, y);
    const int dim = static_cast<int>(x.size());
    Eigen::MatrixXd h(dim, dim);
    const double l2 = lambda_ * lambda_;
    double diag = 0.0;
    double outer = 0.0;
    if (type_ == KernelType::gaussian) {
        const double k = norm_ * std::exp(-r2 / l2);
        diag = 2.0 / l2 * k;
        outer = -4.0 / (l2 * l2) * k;
    } else {
        const double q = 1.0 + r2 / (2.0 * alpha_ * l2);
        diag = norm_ / l2 * std::pow(q, -alpha_ - 1.0);
        outer = -norm_ / l2 * (alpha_ + 1.0) / (alpha_ * l2) * std::pow(q, -alpha_ - 2.0);
    }
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            h(a, b) = (a == b ? diag : 0.0) + outer * (x[a] - y[a]) * (x[b] - y[b]);
    return h;
}

double gaussian_spectral_density(double lambda, double xi)
{
    return lambda / (2.0 * std::sqrt(std::numbers::pi)) * std::exp(-0.25 * lambda * lambda * xi * xi);
}

SpectralKernel kernel_from_spectral_density(const std::function<double(double)>& density,
                                            const SpectralOptions& options)
{
    if (!(options.cutoff > 0.0) || !std::isfinite(options.cutoff))
        throw ValidationError("spectral cutoff must be positive");
    if (options.panels < 2 || options.order < 1) throw ValidationError("spectral quadrature too coarse");

    SpectralKernel k;
    const auto [gx, gw] = gauss_legendre_rule(options.order, 0.0, 1.0);
    const double h = options.cutoff / options.panels;
    double total = 0.0;
    double outer = 0.0;
    for (int p = 0; p < options.panels; ++p) {
        for (int i = 0; i < options.order; ++i) {
            const double xi = (p + gx[i]) * h;
            const double s = density(xi);
            if (!std::isfinite(s)) throw ValidationError("spectral density is not finite at xi = " + std::to_string(xi));
            // The integrand is even in xi, so [-c, c] folds onto 2 * [0, c].
            const double ws = 2.0 * gw[i] * h * s;
            k.xi_.push_back(xi);
            k.weighted_density_.push_back(ws);
            total += std::abs(ws);
            if (2 * p >= options.panels) outer += std::abs(ws);
        }
    }
    if (!(total > 0.0)) throw ValidationError("spectral density integrates to zero");
    k.tail_fraction_ = outer / total;
    if (options.require_convergence && k.tail_fraction_ > 1e-6)
        throw ValidationError("spectral density is not integrable on the truncated range: outer half carries " +
                              std::to_string(k.tail_fraction_) + " of the mass");

    double k0 = 0.0;
    for (double ws : k.weighted_density_) k0 += ws;
    k.k0_ = k0;
    if (options.normalize) {
        if (!(k0 > 0.0)) throw ValidationError("cannot normalize a kernel with K(0) <= 0");
        k.scale_ = 1.0 / k0;
        k.k0_ = 1.0;
    }
    return k;
}

double SpectralKernel::at_lag(double r) const
{
    double s = 0.0;
    for (std::size_t i = 0; i < xi_.size(); ++i) s += weighted_density_[i] * std::cos(xi_[i] * r);
    return scale_ * s;
}

double SpectralKernel::operator()(double x, double y) const
{
    return at_lag(x - y);
}

}  // namespace klturb
