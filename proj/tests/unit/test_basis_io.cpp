#include "klturb/basis_io.hpp"
#include "klturb/errors.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace klturb;

namespace {

void check_same(const KLBasis& a, const KLBasis& b)
{
    CHECK(a.kind() == b.kind());
    CHECK(a.kernel() == b.kernel());
    CHECK(a.truncated() == b.truncated());
    CHECK(a.domain().same_grid(b.domain()));
    CHECK(a.eigenvalues() == b.eigenvalues());
    CHECK(a.eigenfunctions() == b.eigenfunctions());
    CHECK(a.dirichlet_modes() == b.dirichlet_modes());
    for (int axis = 0; axis < a.domain().dim(); ++axis) CHECK(a.gradient(axis) == b.gradient(axis));
}

}  // namespace

TEST_CASE("round trip is bit exact for both basis kinds")
{
    const auto nys = solve_nystrom(BoxDomain::build(2, {1.0, 2.0}, 6, QuadratureRule::trapezoid),
                                   Kernel::rational_quadratic(0.3, 2.0, 1.5), 10);
    const auto dir = dirichlet_basis(BoxDomain::build(3, {1.0}, 4), 5);
    for (const auto* b : {&nys, &dir}) {
        const auto bytes = serialize_basis(*b);
        const auto back = deserialize_basis(bytes);
        check_same(*b, back);
        CHECK(serialize_basis(back) == bytes);
        CHECK(basis_digest(back) == basis_digest(*b));
    }
    CHECK(basis_digest(nys) != basis_digest(dir));
    CHECK(basis_digest(nys).size() == 16);
}

TEST_CASE("save and load through a file")
{
    const auto path = (std::filesystem::temp_directory_path() / "klturb_io_test.klb").string();
    const auto b = solve_nystrom(BoxDomain::build(1, {1.0}, 40), Kernel::gaussian(0.2), 40);
    save_basis(b, path);
    check_same(b, load_basis(path));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_basis(path), ValidationError);
}

TEST_CASE("corrupt files are rejected")
{
    const auto bytes = serialize_basis(dirichlet_basis(BoxDomain::build(1, {1.0}, 8), 2));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_basis(bad_magic), ValidationError);

    auto bad_version = bytes;
    bad_version[8] = 99;
    CHECK_THROWS_AS(deserialize_basis(bad_version), ValidationError);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_basis(trailing), ValidationError);

    for (std::size_t cut : {std::size_t{4}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<char> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        CHECK_THROWS_AS(deserialize_basis(truncated), ValidationError);
    }
}
