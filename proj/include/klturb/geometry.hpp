#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace klturb {

enum class QuadratureRule { trapezoid, gauss_legendre };

std::string to_string(QuadratureRule rule);
QuadratureRule quadrature_rule_from_string(const std::string& name);

/// One node of the tensor grid.
struct GridPoint {
    std::array<double, 3> coords{};  ///< only the first dim() entries are meaningful
    std::size_t index = 0;
    double weight = 0.0;
};

/// 1D rule on [a, b]: nodes ascending, weights summing to b - a.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule(int n, double a, double b);
std::pair<std::vector<double>, std::vector<double>> trapezoid_rule(int n, double a, double b);

/// Axis-aligned box [0, S_1] x ... x [0, S_d] with a tensor-product quadrature grid.
///
/// Flat node index runs fastest along axis 0: index = i0 + n*(i1 + n*i2).
/// Immutable after construction.
class BoxDomain {
public:
    static BoxDomain build(int dim, std::vector<double> side_lengths, int nodes_per_axis,
                           QuadratureRule rule = QuadratureRule::gauss_legendre);

    int dim() const { return dim_; }
    const std::vector<double>& side_lengths() const { return sides_; }
    int nodes_per_axis() const { return n_; }
    QuadratureRule rule() const { return rule_; }
    std::size_t node_count() const { return weights_.size(); }

    double volume() const { return volume_; }
    /// L = vol^(1/dim), used as the single flow length scale even for anisotropic boxes.
    double length_scale() const;

    const std::vector<double>& axis_nodes(int axis) const { return axis_nodes_.at(axis); }
    const std::vector<double>& axis_weights(int axis) const { return axis_weights_.at(axis); }

    double coord(std::size_t node, int axis) const;
    double weight(std::size_t node) const { return weights_[node]; }
    std::span<const double> weights() const { return weights_; }
    GridPoint point(std::size_t node) const;

    std::array<int, 3> multi_index(std::size_t node) const;
    std::size_t flat_index(const std::array<int, 3>& idx) const;

    /// Sum_j w_j v_j.
    double integrate(std::span<const double> values_at_nodes) const;

    /// d/dx_axis of nodal values: 3-point Lagrange stencils on the (possibly nonuniform)
    /// axis nodes, central in the interior and one-sided at the two ends.
    std::vector<double> differentiate(std::span<const double> values_at_nodes, int axis) const;

    /// Minimum distance from node to the box boundary.
    double boundary_distance(std::size_t node) const;

    bool same_grid(const BoxDomain& other) const;

private:
    struct Stencil {
        std::array<int, 3> at{};
        std::array<double, 3> w{};
        int width = 3;
    };

    BoxDomain() = default;

    int dim_ = 1;
    std::vector<double> sides_;
    int n_ = 2;
    QuadratureRule rule_ = QuadratureRule::gauss_legendre;
    double volume_ = 0.0;
    std::vector<std::vector<double>> axis_nodes_;
    std::vector<std::vector<double>> axis_weights_;
    std::vector<std::vector<Stencil>> stencils_;
    std::vector<double> weights_;
};

}  // namespace klturb
