#include "klturb/geometry.hpp"

#include "klturb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace klturb {

std::string to_string(QuadratureRule rule)
{
    return rule == QuadratureRule::trapezoid ? "trapezoid" : "gauss-legendre";
}

QuadratureRule quadrature_rule_from_string(const std::string& name)
{
    if (name == "trapezoid") return QuadratureRule::trapezoid;
    if (name == "gauss-legendre" || name == "gauss_legendre") return QuadratureRule::gauss_legendre;
    throw ValidationError("unknown quadrature rule '" + name + "' (expected trapezoid|gauss-legendre)");
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule(int n, double a, double b)
{
    if (n < 1) throw ValidationError("gauss-legendre rule needs at least one node");
    std::vector<double> x(n), w(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton on P_n starting from the Tricomi-style guess.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0;
        double p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double wi = 2.0 * half / ((1.0 - z * z) * dp * dp);
        // Mirror the upper node exactly so the grid is reflection symmetric to the last bit.
        x[n - 1 - i] = mid + half * z;
        x[i] = (a + b) - x[n - 1 - i];
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if (n % 2 == 1) x[n / 2] = mid;
    return {x, w};
}

std::pair<std::vector<double>, std::vector<double>> trapezoid_rule(int n, double a, double b)
{
    if (n < 2) throw ValidationError("trapezoid rule needs at least two nodes");
    std::vector<double> x(n), w(n);
    const double h = (b - a) / (n - 1);
    for (int i = n - 1; i >= n / 2; --i) {
        x[i] = (i == n - 1) ? b : a + i * h;
        x[n - 1 - i] = (a + b) - x[i];
    }
    if (n % 2 == 1) x[n / 2] = 0.5 * (a + b);
    std::fill(w.begin(), w.end(), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return {x, w};
}

BoxDomain BoxDomain::build(int dim, std::vector<double> side_lengths, int nodes_per_axis,
                           QuadratureRule rule)
{
    if (dim < 1 || dim > 3) throw ValidationError("dim must be 1, 2 or 3");
    if (side_lengths.size() == 1 && dim > 1) side_lengths.assign(dim, side_lengths.front());
    if (static_cast<int>(side_lengths.size()) != dim)
        throw ValidationError("expected " + std::to_string(dim) + " side lengths, got " +
                              std::to_string(side_lengths.size()));
    for (double s : side_lengths)
        if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("side lengths must be positive");
    if (nodes_per_axis < 2) throw ValidationError("nodes_per_axis must be >= 2");

    BoxDomain d;
    d.dim_ = dim;
    d.sides_ = std::move(side_lengths);
    d.n_ = nodes_per_axis;
    d.rule_ = rule;
    d.volume_ = 1.0;
    for (double s : d.sides_) d.volume_ *= s;

    for (int a = 0; a < dim; ++a) {
        auto [x, w] = rule == QuadratureRule::trapezoid ? trapezoid_rule(d.n_, 0.0, d.sides_[a])
                                                        : gauss_legendre_rule(d.n_, 0.0, d.sides_[a]);
        // Lagrange derivative weights for the stencil nodes evaluated at x[i].
        std::vector<Stencil> st(d.n_);
        for (int i = 0; i < d.n_; ++i) {
            Stencil s;
            if (d.n_ == 2) {
                s.width = 2;
                s.at = {0, 1, 1};
                const double inv = 1.0 / (x[1] - x[0]);
                s.w = {-inv, inv, 0.0};
            } else {
                const int c = std::clamp(i, 1, d.n_ - 2);
                s.at = {c - 1, c, c + 1};
                const double xi = x[i];
                for (int k = 0; k < 3; ++k) {
                    const double xk = x[s.at[k]];
                    const double xa = x[s.at[(k + 1) % 3]];
                    const double xb = x[s.at[(k + 2) % 3]];
                    s.w[k] = ((xi - xa) + (xi - xb)) / ((xk - xa) * (xk - xb));
                }
            }
            st[i] = s;
        }
        d.axis_nodes_.push_back(std::move(x));
        d.axis_weights_.push_back(std::move(w));
        d.stencils_.push_back(std::move(st));
    }

    std::size_t count = 1;
    for (int a = 0; a < dim; ++a) count *= static_cast<std::size_t>(d.n_);
    d.weights_.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        const auto mi = d.multi_index(j);
        double w = 1.0;
        for (int a = 0; a < dim; ++a) w *= d.axis_weights_[a][mi[a]];
        d.weights_[j] = w;
    }
    return d;
}

double BoxDomain::length_scale() const
{
    return std::pow(volume_, 1.0 / dim_);
}

std::array<int, 3> BoxDomain::multi_index(std::size_t node) const
{
    std::array<int, 3> mi{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
        mi[a] = static_cast<int>(node % n_);
        node /= n_;
    }
    return mi;
}

std::size_t BoxDomain::flat_index(const std::array<int, 3>& idx) const
{
    std::size_t flat = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
        if (idx[a] < 0 || idx[a] >= n_) throw ValidationError("grid index outside the domain");
        flat = flat * n_ + static_cast<std::size_t>(idx[a]);
    }
    return flat;
}

double BoxDomain::coord(std::size_t node, int axis) const
{
    return axis_nodes_[axis][multi_index(node)[axis]];
}

GridPoint BoxDomain::point(std::size_t node) const
{
    GridPoint p;
    p.index = node;
    p.weight = weights_.at(node);
    const auto mi = multi_index(node);
    for (int a = 0; a < dim_; ++a) p.coords[a] = axis_nodes_[a][mi[a]];
    return p;
}

double BoxDomain::integrate(std::span<const double> values_at_nodes) const
{
    if (values_at_nodes.size() != weights_.size())
        throw ValidationError("integrate: expected " + std::to_string(weights_.size()) +
                              " nodal values, got " + std::to_string(values_at_nodes.size()));
    double sum = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) sum += weights_[j] * values_at_nodes[j];
    return sum;
}

std::vector<double> BoxDomain::differentiate(std::span<const double> values_at_nodes, int axis) const
{
    if (values_at_nodes.size() != weights_.size())
        throw ValidationError("differentiate: nodal value count mismatch");
    if (axis < 0 || axis >= dim_) throw ValidationError("differentiate: axis out of range");

    std::size_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= n_;
    const auto& st = stencils_[axis];

    std::vector<double> out(values_at_nodes.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const int i = multi_index(j)[axis];
        const std::size_t base = j - static_cast<std::size_t>(i) * stride;
        const Stencil& s = st[i];
        double acc = 0.0;
        for (int k = 0; k < s.width; ++k) acc += s.w[k] * values_at_nodes[base + s.at[k] * stride];
        out[j] = acc;
    }
    return out;
}

double BoxDomain::boundary_distance(std::size_t node) const
{
    const auto p = point(node);
    double d = sides_[0];
    for (int a = 0; a < dim_; ++a) d = std::min({d, p.coords[a], sides_[a] - p.coords[a]});
    return d;
}

bool BoxDomain::same_grid(const BoxDomain& other) const
{
    return dim_ == other.dim_ && sides_ == other.sides_ && n_ == other.n_ && rule_ == other.rule_;
}

}  // namespace klturb
