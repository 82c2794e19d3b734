#include "klturb/cli/reports.hpp"

#include "klturb/basis_io.hpp"
#include "klturb/errors.hpp"
#include "klturb/grf.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace klturb::cli {

using nlohmann::ordered_json;

ordered_json report_envelope(const std::string& command, const RunConfig& cfg)
{
    ordered_json j;
    j["schema_version"] = schema_version;
    j["command"] = command;
    j["config"] = to_json(cfg);
    return j;
}

ordered_json checks_json(const std::vector<Check>& checks)
{
    ordered_json arr = ordered_json::array();
    for (const auto& c : checks) {
        ordered_json e;
        e["name"] = c.name;
        e["passed"] = c.passed;
        e["value"] = c.value;
        e["reference"] = c.reference;
        e["tolerance"] = c.tolerance;
        if (!c.note.empty()) e["note"] = c.note;
        arr.push_back(std::move(e));
    }
    return arr;
}

ordered_json basis_summary_json(const KLBasis& basis)
{
    ordered_json j;
    j["kind"] = to_string(basis.kind());
    j["kernel"] = to_string(basis.kernel().type());
    j["modes"] = basis.size();
    j["nodes"] = basis.node_count();
    j["truncated"] = basis.truncated();
    j["digest"] = basis_digest(basis);
    return j;
}

ordered_json basis_diagnostics_json(const KLBasis& basis)
{
    ordered_json j = basis_summary_json(basis);
    const auto& z = basis.eigenvalues();
    j["eigenvalues"] = std::vector<double>(z.data(), z.data() + z.size());
    j["sum_eigenvalues"] = z.sum();
    j["volume"] = basis.domain().volume();
    j["orthonormality_error"] = orthonormality_error(basis);
    j["fredholm_residual"] = fredholm_residual(basis);
    j["fredholm_residual_relative"] = fredholm_residual(basis) / z.maxCoeff();
    const auto vi = variance_integral(basis);
    j["variance_integral"] = {{"quadrature", vi.quadrature},
                              {"eigen_sum", vi.eigen_sum},
                              {"volume_scaled", vi.scaled_by_volume},
                              {"consistent", vi.consistent}};
    const auto bi = basis_integrals(basis);
    double max_fgf = 0.0;
    for (const auto& h : bi.H_a) max_fgf = std::max(max_fgf, h.cwiseAbs().maxCoeff());
    j["integrals"] = {{"max_abs_H_minus_1", (bi.H.array() - 1.0).abs().maxCoeff()},
                      {"max_abs_f_grad_f", max_fgf},
                      {"min_H_grad", bi.H_grad.minCoeff()},
                      {"sum_Z_H_grad", z.dot(bi.H_grad)},
                      {"exact_derivatives", basis.exact_derivatives()}};
    if (basis.kind() == BasisKind::nystrom) {
        const auto m = mercer_diagnostics(basis);
        j["mercer"] = {{"trace_error", m.trace_error},
                       {"max_pointwise_error", m.max_pointwise_error},
                       {"kl_l2_tail", m.kl_l2_tail}};
    }
    return j;
}

ordered_json dissipation_json(const DissipationReport& r)
{
    ordered_json j;
    j["gradient_energy"] = r.gradient_energy;
    j["limit_analytic"] = r.limit_analytic;
    j["slope"] = r.slope;
    j["slope_analytic"] = r.slope_analytic;
    j["fit_points"] = r.fit_points;
    j["D_at_nu_min"] = r.d_at_min;
    j["relative_gap_to_limit"] = r.limit_analytic > 0.0 ? (r.d_at_min - r.limit_analytic) / r.limit_analytic : 0.0;
    j["max_abs_mc_minus_analytic_over_se"] = r.max_se_deviation;
    j["verdict"] = to_string(r.verdict);
    ordered_json pts = ordered_json::array();
    for (const auto& p : r.points)
        pts.push_back({{"nu", p.nu},
                       {"RE", p.re},
                       {"laminar", p.laminar},
                       {"D_mc", p.d_mc},
                       {"D_se", p.d_se},
                       {"D_analytic", p.d_analytic}});
    j["points"] = std::move(pts);
    return j;
}

std::string format_double(double v)
{
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string dissipation_csv(const DissipationReport& r)
{
    std::string out = "nu,RE,D_mc,D_se,D_analytic\r\n";
    for (const auto& p : r.points)
        out += format_double(p.nu) + "," + format_double(p.re) + "," + format_double(p.d_mc) + "," +
               format_double(p.d_se) + "," + format_double(p.d_analytic) + "\r\n";
    return out;
}

std::string dump(const ordered_json& j)
{
    return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace klturb::cli
