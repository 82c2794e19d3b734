#pragma once

#include "klturb/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace klturb {

/// Versioned little-endian binary layout: magic "KLTBASIS", u32 version, domain,
/// kernel descriptor, basis kind, eigenvalues, eigenfunctions, weights and Dirichlet
/// mode indices. Derivative tables are rebuilt on load. Round trip is bit-exact.
inline constexpr std::uint32_t basis_format_version = 1;

std::vector<char> serialize_basis(const KLBasis& basis);
KLBasis deserialize_basis(const std::vector<char>& bytes);

void save_basis(const KLBasis& basis, const std::string& path);
KLBasis load_basis(const std::string& path);

/// FNV-1a 64 over the serialized bytes, printed in reports to tie results to a basis file.
std::string basis_digest(const KLBasis& basis);

}  // namespace klturb
