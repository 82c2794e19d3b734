#include "klturb/basis_io.hpp"

#include "klturb/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace klturb {

static_assert(std::endian::native == std::endian::little, "basis files assume a little-endian host");

namespace {

constexpr char magic[8] = {'K', 'L', 'T', 'B', 'A', 'S', 'I', 'S'};

class Writer {
public:
    template <class T>
    void put(const T& v)
    {
        const char* p = reinterpret_cast<const char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put_doubles(const double* p, std::size_t n)
    {
        const char* c = reinterpret_cast<const char*>(p);
        bytes.insert(bytes.end(), c, c + n * sizeof(double));
    }
    std::vector<char> bytes;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& b) : bytes(b) {}
    template <class T>
    T get()
    {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    void get_doubles(double* p, std::size_t n)
    {
        need(n * sizeof(double));
        std::memcpy(p, bytes.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
    }
    bool at_end() const { return pos == bytes.size(); }

private:
    void need(std::size_t n) const
    {
        if (pos + n > bytes.size()) throw ValidationError("basis file is truncated");
    }
    const std::vector<char>& bytes;
    std::size_t pos = 0;
};

}  // namespace

std::vector<char> serialize_basis(const KLBasis& basis)
{
    const auto& d = basis.domain();
    const auto& k = basis.kernel();
    Writer w;
    w.bytes.insert(w.bytes.end(), std::begin(magic), std::end(magic));
    w.put(basis_format_version);

    w.put(static_cast<std::int32_t>(d.dim()));
    w.put(static_cast<std::int32_t>(d.nodes_per_axis()));
    w.put(static_cast<std::int32_t>(d.rule()));
    w.put_doubles(d.side_lengths().data(), d.side_lengths().size());

    w.put(static_cast<std::int32_t>(k.type()));
    w.put(k.lambda());
    w.put(k.alpha());
    w.put(static_cast<std::int32_t>(k.truncation()));
    w.put(k.normalization());

    w.put(static_cast<std::int32_t>(basis.kind()));
    w.put(static_cast<std::uint64_t>(basis.size()));
    w.put(static_cast<std::uint64_t>(basis.node_count()));
    w.put(static_cast<std::uint8_t>(basis.truncated() ? 1 : 0));
    w.put_doubles(basis.eigenvalues().data(), static_cast<std::size_t>(basis.size()));
    w.put_doubles(basis.eigenfunctions().data(), basis.node_count() * static_cast<std::size_t>(basis.size()));
    w.put_doubles(d.weights().data(), d.node_count());
    w.put(static_cast<std::uint64_t>(basis.dirichlet_modes().size()));
    for (const auto& m : basis.dirichlet_modes())
        for (int a = 0; a < 3; ++a) w.put(static_cast<std::int32_t>(m[a]));
    return w.bytes;
}

KLBasis deserialize_basis(const std::vector<char>& bytes)
{
    if (bytes.size() < sizeof(magic) || std::memcmp(bytes.data(), magic, sizeof(magic)) != 0)
        throw ValidationError("not a basis file (bad magic)");
    std::vector<char> body(bytes.begin() + sizeof(magic), bytes.end());
    Reader r(body);
    const auto version = r.get<std::uint32_t>();
    if (version != basis_format_version)
        throw ValidationError("unsupported basis file version " + std::to_string(version));

    const int dim = r.get<std::int32_t>();
    const int nodes = r.get<std::int32_t>();
    const auto rule = static_cast<QuadratureRule>(r.get<std::int32_t>());
    if (dim < 1 || dim > 3) throw ValidationError("basis file has invalid dimension");
    std::vector<double> sides(dim);
    r.get_doubles(sides.data(), sides.size());
    BoxDomain domain = BoxDomain::build(dim, sides, nodes, rule);

    const auto ktype = static_cast<KernelType>(r.get<std::int32_t>());
    const double lambda = r.get<double>();
    const double alpha = r.get<double>();
    const int trunc = r.get<std::int32_t>();
    const double norm = r.get<double>();
    Kernel kernel = ktype == KernelType::gaussian             ? Kernel::gaussian(lambda, norm)
                    : ktype == KernelType::rational_quadratic ? Kernel::rational_quadratic(lambda, alpha, norm)
                                                              : Kernel::analytic_dirichlet(trunc, sides, norm);

    const auto kind = static_cast<BasisKind>(r.get<std::int32_t>());
    const auto n_modes = r.get<std::uint64_t>();
    const auto n_nodes = r.get<std::uint64_t>();
    if (n_nodes != domain.node_count()) throw ValidationError("basis file node count does not match its grid");
    if (n_modes == 0 || n_modes > n_nodes) throw ValidationError("basis file has an invalid mode count");
    const bool truncated = r.get<std::uint8_t>() != 0;

    Eigen::VectorXd z(static_cast<Eigen::Index>(n_modes));
    r.get_doubles(z.data(), n_modes);
    Eigen::MatrixXd f(static_cast<Eigen::Index>(n_nodes), static_cast<Eigen::Index>(n_modes));
    r.get_doubles(f.data(), n_nodes * n_modes);
    std::vector<double> weights(n_nodes);
    r.get_doubles(weights.data(), n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j)
        if (weights[j] != domain.weight(j))
            throw ValidationError("basis file quadrature weights do not match the rebuilt grid");

    const auto n_dirichlet = r.get<std::uint64_t>();
    if (n_dirichlet > n_modes) throw ValidationError("basis file has too many Dirichlet mode indices");
    std::vector<std::array<int, 3>> modes(n_dirichlet);
    for (auto& m : modes)
        for (int a = 0; a < 3; ++a) m[a] = r.get<std::int32_t>();
    if (!r.at_end()) throw ValidationError("basis file has trailing bytes");

    return KLBasis::assemble(std::move(domain), std::move(kernel), kind, std::move(z), std::move(f), std::move(modes),
                             truncated);
}

void save_basis(const KLBasis& basis, const std::string& path)
{
    const auto bytes = serialize_basis(basis);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("failed writing '" + path + "'");
}

KLBasis load_basis(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open basis file '" + path + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_basis(bytes);
}

std::string basis_digest(const KLBasis& basis)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : serialize_basis(basis)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace klturb
