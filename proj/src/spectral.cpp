#include "klturb/spectral.hpp"

#include "klturb/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace klturb {

std::string to_string(BasisKind kind)
{
    return kind == BasisKind::nystrom ? "nystrom" : "dirichlet-analytic";
}

BasisKind basis_kind_from_string(const std::string& name)
{
    if (name == "nystrom") return BasisKind::nystrom;
    if (name == "dirichlet-analytic" || name == "dirichlet") return BasisKind::dirichlet_analytic;
    throw ValidationError("unknown basis kind '" + name + "'");
}

namespace {

std::span<const double> coords_of(const GridPoint& p, int dim)
{
    return std::span<const double>(p.coords.data(), static_cast<std::size_t>(dim));
}

Eigen::MatrixXd differentiate_columns(const BoxDomain& domain, const Eigen::MatrixXd& m, int axis)
{
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const auto col = domain.differentiate(std::span<const double>(m.col(c).data(), m.rows()), axis);
        out.col(c) = Eigen::Map<const Eigen::VectorXd>(col.data(), m.rows());
    }
    return out;
}

/// d/dx of sqrt(2/S) sin(n pi x / S) taken `order` times.
double dirichlet_factor(double side, int n, double x, int order)
{
    const double k = n * std::numbers::pi / side;
    const double amp = std::sqrt(2.0 / side);
    switch (order) {
    case 0: return amp * std::sin(k * x);
    case 1: return amp * k * std::cos(k * x);
    default: return -amp * k * k * std::sin(k * x);
    }
}

}  // namespace

KLBasis KLBasis::assemble(BoxDomain domain, Kernel kernel, BasisKind kind, Eigen::VectorXd eigenvalues,
                          Eigen::MatrixXd eigenfunctions, std::vector<std::array<int, 3>> dirichlet_modes,
                          bool truncated)
{
    if (eigenfunctions.rows() != static_cast<Eigen::Index>(domain.node_count()) ||
        eigenfunctions.cols() != eigenvalues.size())
        throw ValidationError("eigenfunction table does not match the grid and eigenvalue count");
    if (eigenvalues.size() == 0) throw ValidationError("basis has no modes");
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (!(eigenvalues[i] > 0.0)) throw ValidationError("basis eigenvalues must be positive");
    if (kind == BasisKind::dirichlet_analytic &&
        dirichlet_modes.size() != static_cast<std::size_t>(eigenvalues.size()))
        throw ValidationError("dirichlet basis needs one mode index per eigenvalue");

    KLBasis b;
    b.domain_ = std::move(domain);
    b.kernel_ = std::move(kernel);
    b.kind_ = kind;
    b.z_ = std::move(eigenvalues);
    b.f_ = std::move(eigenfunctions);
    b.modes_ = std::move(dirichlet_modes);
    b.truncated_ = truncated;

    const int dim = b.domain_.dim();
    const auto n = static_cast<Eigen::Index>(b.domain_.node_count());
    const Eigen::Index m = b.z_.size();
    if (kind == BasisKind::nystrom) {
        for (int a = 0; a < dim; ++a) b.grad_.push_back(differentiate_columns(b.domain_, b.f_, a));
        for (int a = 0; a < dim; ++a)
            for (int c = 0; c < dim; ++c) b.hess_.push_back(differentiate_columns(b.domain_, b.grad_[a], c));
    } else {
        const auto& sides = b.domain_.side_lengths();
        // Per-axis order of differentiation for each derivative table.
        auto table = [&](std::array<int, 3> order) {
            Eigen::MatrixXd t(n, m);
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto p = b.domain_.point(static_cast<std::size_t>(j));
                for (Eigen::Index i = 0; i < m; ++i) {
                    double v = 1.0;
                    for (int a = 0; a < dim; ++a)
                        v *= dirichlet_factor(sides[a], b.modes_[i][a], p.coords[a], order[a]);
                    t(j, i) = v;
                }
            }
            return t;
        };
        for (int a = 0; a < dim; ++a) {
            std::array<int, 3> o{0, 0, 0};
            o[a] = 1;
            b.grad_.push_back(table(o));
        }
        for (int a = 0; a < dim; ++a)
            for (int c = 0; c < dim; ++c) {
                std::array<int, 3> o{0, 0, 0};
                o[a] += 1;
                o[c] += 1;
                b.hess_.push_back(table(o));
            }
    }
    return b;
}

Eigen::VectorXd KLBasis::variance() const
{
    return f_.array().square().matrix() * z_;
}

double KLBasis::mercer(std::size_t j, std::size_t k) const
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < z_.size(); ++i)
        s += z_[i] * f_(static_cast<Eigen::Index>(j), i) * f_(static_cast<Eigen::Index>(k), i);
    return s;
}

double KLBasis::evaluate_mode(int mode, std::span<const double> x) const
{
    if (kind_ != BasisKind::dirichlet_analytic)
        throw ValidationError("pointwise evaluation is only available for the Dirichlet basis");
    if (mode < 0 || mode >= size()) throw ValidationError("mode index out of range");
    return dirichlet_mode_value(domain_.side_lengths(), modes_[mode], x);
}

Eigen::MatrixXd kernel_matrix(const BoxDomain& domain, const Kernel& kernel)
{
    const auto n = static_cast<Eigen::Index>(domain.node_count());
    const int dim = domain.dim();
    std::vector<GridPoint> pts;
    pts.reserve(n);
    for (Eigen::Index j = 0; j < n; ++j) pts.push_back(domain.point(static_cast<std::size_t>(j)));
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) k(r, c) = kernel.eval(coords_of(pts[r], dim), coords_of(pts[c], dim));
    return k;
}

namespace {

struct EigenPair {
    double value;
    int block;
    Eigen::Index column;
};

/// Reflection of every node across the box mid-plane normal to `axis`.
std::vector<std::size_t> reflection(const BoxDomain& domain, int axis)
{
    const int n = domain.nodes_per_axis();
    std::vector<std::size_t> perm(domain.node_count());
    for (std::size_t j = 0; j < perm.size(); ++j) {
        auto idx = domain.multi_index(j);
        idx[axis] = n - 1 - idx[axis];
        perm[j] = domain.flat_index(idx);
    }
    return perm;
}

/// Orthonormal bases of the 2^dim reflection-parity subspaces. Column entries are +-1/sqrt(orbit size),
/// so a vector built from them has its parity exactly, independent of round-off in the eigensolver.
std::vector<Eigen::SparseMatrix<double>> parity_blocks(const BoxDomain& domain,
                                                       const std::vector<std::vector<std::size_t>>& refl)
{
    const int dim = domain.dim();
    const int n_classes = 1 << dim;
    const auto n = domain.node_count();
    std::vector<std::vector<Eigen::Triplet<double>>> trip(n_classes);
    std::vector<Eigen::Index> cols(n_classes, 0);
    for (std::size_t j = 0; j < n; ++j) {
        // Orbit image of j under each group element g (bit a set = reflect axis a).
        std::vector<std::size_t> image(n_classes);
        for (int g = 0; g < n_classes; ++g) {
            std::size_t t = j;
            for (int a = 0; a < dim; ++a)
                if (g & (1 << a)) t = refl[a][t];
            image[g] = t;
        }
        if (*std::min_element(image.begin(), image.end()) != j) continue;
        std::vector<std::size_t> distinct(image);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        const double amp = 1.0 / std::sqrt(static_cast<double>(distinct.size()));
        for (int c = 0; c < n_classes; ++c) {
            bool vanishes = false;
            for (int a = 0; a < dim; ++a)
                if ((c & (1 << a)) && refl[a][j] == j) vanishes = true;
            if (vanishes) continue;
            for (std::size_t t : distinct) {
                int g = 0;
                while (image[g] != t) ++g;
                const double sign = (std::popcount(static_cast<unsigned>(g & c)) % 2) ? -1.0 : 1.0;
                trip[c].emplace_back(static_cast<Eigen::Index>(t), cols[c], sign * amp);
            }
            ++cols[c];
        }
    }
    std::vector<Eigen::SparseMatrix<double>> q;
    for (int c = 0; c < n_classes; ++c) {
        Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n), cols[c]);
        m.setFromTriplets(trip[c].begin(), trip[c].end());
        q.push_back(std::move(m));
    }
    return q;
}

double reflection_deviation(const Eigen::MatrixXd& m, const std::vector<std::size_t>& perm)
{
    double dev = 0.0;
    const auto n = m.rows();
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r)
            dev = std::max(dev, std::abs(m(static_cast<Eigen::Index>(perm[r]), static_cast<Eigen::Index>(perm[c])) -
                                         m(r, c)));
    return dev;
}

}  // namespace

KLBasis solve_nystrom(const BoxDomain& domain, const Kernel& kernel, int n_modes)
{
    const auto n = static_cast<Eigen::Index>(domain.node_count());
    if (n_modes < 1) throw ValidationError("truncation N must be >= 1");
    if (n_modes > n) throw ValidationError("truncation N exceeds the node count");
    if (kernel.type() == KernelType::analytic_dirichlet && kernel.sides() != domain.side_lengths())
        throw ValidationError("dirichlet kernel was built for a different box");

    const Eigen::MatrixXd k = kernel_matrix(domain, kernel);
    const double scale = k.cwiseAbs().maxCoeff();
    const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1.0))
        throw NumericalError("kernel matrix is not symmetric (max deviation " + std::to_string(asym) + ")");

    Eigen::VectorXd sqrt_w(n);
    for (Eigen::Index j = 0; j < n; ++j) sqrt_w[j] = std::sqrt(domain.weight(static_cast<std::size_t>(j)));
    Eigen::MatrixXd m = sqrt_w.asDiagonal() * (0.5 * (k + k.transpose())) * sqrt_w.asDiagonal();

    // Reflection-invariant problems (symmetric kernel on a mirrored grid) split into parity blocks,
    // which are smaller and give eigenvectors of exact parity; otherwise solve the full matrix.
    const int dim = domain.dim();
    const double m_scale = m.cwiseAbs().maxCoeff();
    std::vector<std::vector<std::size_t>> refl;
    bool invariant = true;
    for (int a = 0; a < dim; ++a) {
        refl.push_back(reflection(domain, a));
        if (reflection_deviation(m, refl.back()) > 1e-14 * m_scale) invariant = false;
    }
    std::vector<Eigen::SparseMatrix<double>> blocks;
    if (invariant) {
        blocks = parity_blocks(domain, refl);
    } else {
        Eigen::SparseMatrix<double> id(n, n);
        id.setIdentity();
        blocks.push_back(std::move(id));
    }

    std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> solvers;
    std::vector<EigenPair> pairs;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& q = blocks[b];
        if (q.cols() == 0) {
            solvers.emplace_back();
            continue;
        }
        const Eigen::MatrixXd mq = m * q;
        Eigen::MatrixXd mb = q.transpose() * mq;
        mb = 0.5 * (mb + mb.transpose()).eval();
        solvers.emplace_back(mb);
        if (solvers.back().info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
        const auto& ev = solvers.back().eigenvalues();
        for (Eigen::Index c = 0; c < ev.size(); ++c) pairs.push_back({ev[c], static_cast<int>(b), c});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const EigenPair& x, const EigenPair& y) { return x.value > y.value; });

    const double z1 = pairs.front().value;
    if (!(z1 > 0.0)) throw NumericalError("kernel matrix has no positive eigenvalue");

    int kept = 0;
    while (kept < n_modes && pairs[kept].value > eigenvalue_floor * z1) ++kept;

    Eigen::VectorXd z(kept);
    Eigen::MatrixXd f(n, kept);
    for (int i = 0; i < kept; ++i) {
        const auto& p = pairs[i];
        z[i] = p.value;
        const Eigen::VectorXd vec = blocks[p.block] * solvers[p.block].eigenvectors().col(p.column);
        Eigen::VectorXd col = vec.cwiseQuotient(sqrt_w);
        // Fix the arbitrary sign: nonnegative nodal sum, else first significant entry positive.
        const double sum = col.sum();
        const double abs_sum = col.cwiseAbs().sum();
        double sign = 1.0;
        if (std::abs(sum) > 1e-10 * abs_sum) {
            sign = sum < 0.0 ? -1.0 : 1.0;
        } else {
            const double cut = 1e-10 * col.cwiseAbs().maxCoeff();
            for (Eigen::Index j = 0; j < n; ++j)
                if (std::abs(col[j]) > cut) {
                    sign = col[j] < 0.0 ? -1.0 : 1.0;
                    break;
                }
        }
        f.col(i) = sign * col;
    }
    return KLBasis::assemble(domain, kernel, BasisKind::nystrom, std::move(z), std::move(f), {}, kept < n_modes);
}

KLBasis dirichlet_basis(const BoxDomain& domain, int n_modes)
{
    if (n_modes < 1) throw ValidationError("truncation N must be >= 1");
    const auto& sides = domain.side_lengths();
    auto modes = dirichlet_mode_indices(sides, n_modes);
    const auto n = static_cast<Eigen::Index>(domain.node_count());
    Eigen::VectorXd z(n_modes);
    Eigen::MatrixXd f(n, n_modes);
    for (int i = 0; i < n_modes; ++i) {
        z[i] = dirichlet_eigenvalue(sides, modes[i]);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto p = domain.point(static_cast<std::size_t>(j));
            f(j, i) = dirichlet_mode_value(sides, modes[i], coords_of(p, domain.dim()));
        }
    }
    Kernel kernel = Kernel::analytic_dirichlet(n_modes, sides);
    return KLBasis::assemble(domain, std::move(kernel), BasisKind::dirichlet_analytic, std::move(z), std::move(f),
                             std::move(modes), false);
}

Eigen::MatrixXd eigenfunction_gradient(const KLBasis& basis, int mode)
{
    if (mode < 0 || mode >= basis.size())
        throw ValidationError("mode index " + std::to_string(mode) + " out of range [0, " +
                              std::to_string(basis.size()) + ")");
    const int dim = basis.domain().dim();
    Eigen::MatrixXd g(basis.node_count(), dim);
    for (int a = 0; a < dim; ++a) g.col(a) = basis.gradient(a).col(mode);
    return g;
}

BasisIntegrals basis_integrals(const KLBasis& basis)
{
    const auto& d = basis.domain();
    const int dim = d.dim();
    const Eigen::Map<const Eigen::VectorXd> w(d.weights().data(), static_cast<Eigen::Index>(d.node_count()));
    const auto& f = basis.eigenfunctions();

    BasisIntegrals out;
    out.H = f.array().square().matrix().transpose() * w;
    out.H_grad = Eigen::VectorXd::Zero(basis.size());
    out.H_hess = Eigen::VectorXd::Zero(basis.size());
    for (int a = 0; a < dim; ++a) {
        const auto& g = basis.gradient(a);
        out.H_a.push_back(f.cwiseProduct(g).transpose() * w);
        out.H_grad += g.array().square().matrix().transpose() * w;
        for (int b = 0; b < dim; ++b) out.H_hess += basis.hessian(a, b).array().square().matrix().transpose() * w;
    }
    return out;
}

MercerDiagnostics mercer_diagnostics(const KLBasis& basis)
{
    if (basis.kind() != BasisKind::nystrom)
        throw ValidationError("mercer diagnostics need a kernel-derived (nystrom) basis");
    const auto& d = basis.domain();
    const Eigen::MatrixXd k = kernel_matrix(d, basis.kernel());
    const auto& f = basis.eigenfunctions();
    const Eigen::MatrixXd recon = f * basis.eigenvalues().asDiagonal() * f.transpose();

    MercerDiagnostics m;
    const double total = basis.kernel().normalization() * d.volume();
    const double sum_z = basis.eigenvalues().sum();
    m.trace_error = std::abs(sum_z - total);
    m.kl_l2_tail = total - sum_z;
    m.max_pointwise_error = (recon - k).cwiseAbs().maxCoeff();
    return m;
}

double orthonormality_error(const KLBasis& basis)
{
    const auto& d = basis.domain();
    const Eigen::Map<const Eigen::VectorXd> w(d.weights().data(), static_cast<Eigen::Index>(d.node_count()));
    const auto& f = basis.eigenfunctions();
    const Eigen::MatrixXd gram = f.transpose() * w.asDiagonal() * f;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double fredholm_residual(const KLBasis& basis)
{
    const auto& d = basis.domain();
    const Eigen::MatrixXd k = kernel_matrix(d, basis.kernel());
    const Eigen::Map<const Eigen::VectorXd> w(d.weights().data(), static_cast<Eigen::Index>(d.node_count()));
    const auto& f = basis.eigenfunctions();
    const Eigen::MatrixXd applied = k * w.asDiagonal() * f;
    return (applied - f * basis.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff();
}

}  // namespace klturb
