#pragma once

#include "klturb/checks.hpp"
#include "klturb/cli/config.hpp"
#include "klturb/dissipation.hpp"
#include "klturb/spectral.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace klturb::cli {

inline constexpr int schema_version = 1;

/// Report skeleton: schema_version, command, resolved config.
nlohmann::ordered_json report_envelope(const std::string& command, const RunConfig& cfg);

nlohmann::ordered_json checks_json(const std::vector<Check>& checks);
nlohmann::ordered_json basis_summary_json(const KLBasis& basis);
nlohmann::ordered_json basis_diagnostics_json(const KLBasis& basis);
nlohmann::ordered_json dissipation_json(const DissipationReport& report);

/// Header nu,RE,D_mc,D_se,D_analytic then one CRLF-terminated row per grid point.
std::string dissipation_csv(const DissipationReport& report);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// JSON text with a trailing newline; non-finite numbers become null.
std::string dump(const nlohmann::ordered_json& j);

void write_text(const std::string& path, const std::string& text);

}  // namespace klturb::cli
