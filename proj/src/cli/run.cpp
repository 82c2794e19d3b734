#include "klturb/cli/run.hpp"

#include "klturb/basis_io.hpp"
#include "klturb/cli/config.hpp"
#include "klturb/cli/reports.hpp"
#include "klturb/dissipation.hpp"
#include "klturb/errors.hpp"
#include "klturb/flow.hpp"
#include "klturb/grf.hpp"
#include "klturb/kernels.hpp"
#include "klturb/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

namespace klturb::cli {

namespace {

using nlohmann::ordered_json;

/// Flag values parsed by CLI11; each is applied on top of the config only when given.
struct Flags {
    std::string config_path;
    unsigned workers = 0;

    int dim = 1;
    std::vector<double> sides;
    int nodes = 0;
    std::string rule;
    std::string kernel;
    double lambda = 0.0;
    double alpha = 0.0;
    int trunc = 0;
    std::string out;

    std::string basis;
    std::uint64_t draws = 0;
    std::uint64_t seed = 0;
    std::string report;
    std::vector<std::string> checks;

    std::vector<double> u;
    double nu = 0.0;
    double amplitude = 0.0;
    double beta = 0.0;
    double re_star = 0.0;
    double horizon = 0.0;
    double length = 0.0;
    double nu_min = 0.0;
    double nu_max = 0.0;
    int nu_points = 0;
    std::string csv;

    double cutoff = 0.0;
};

bool given(const CLI::App* app, const std::string& name)
{
    try {
        return app->get_option(name)->count() > 0;
    } catch (const CLI::OptionNotFound&) {
        return false;
    }
}

RunConfig resolve(const CLI::App* app, const Flags& f)
{
    RunConfig c = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
    if (given(app, "--dim")) c.domain.dim = f.dim;
    if (given(app, "--sides")) c.domain.sides = f.sides;
    if (given(app, "--nodes")) c.domain.nodes = f.nodes;
    if (given(app, "--rule")) c.domain.rule = quadrature_rule_from_string(f.rule);
    if (given(app, "--kernel")) c.kernel.type = f.kernel;
    if (given(app, "--lambda")) c.kernel.lambda = f.lambda;
    if (given(app, "--alpha")) c.kernel.alpha = f.alpha;
    if (given(app, "--trunc")) c.kernel.trunc = f.trunc;
    if (given(app, "--basis")) c.basis_path = f.basis;
    if (given(app, "--draws")) c.experiment.draws = f.draws;
    if (given(app, "--seed")) c.experiment.seed = f.seed;
    if (given(app, "--checks")) c.experiment.checks = f.checks;
    if (given(app, "--u")) c.flow.u = f.u;
    if (given(app, "--nu")) c.flow.nu = f.nu;
    if (given(app, "--A")) c.flow.amplitude = f.amplitude;
    if (given(app, "--beta")) c.flow.beta = f.beta;
    if (given(app, "--re-star")) c.flow.re_star = f.re_star;
    if (given(app, "--T")) c.flow.horizon = f.horizon;
    if (given(app, "--L")) c.flow.length = f.length;
    if (given(app, "--nu-min")) c.experiment.nu_min = f.nu_min;
    if (given(app, "--nu-max")) c.experiment.nu_max = f.nu_max;
    if (given(app, "--nu-points")) c.experiment.nu_points = f.nu_points;
    return c;
}

KLBasis load_paired_basis(const RunConfig& cfg)
{
    if (cfg.basis_path.empty()) throw ValidationError("--basis is required");
    KLBasis basis = load_basis(cfg.basis_path);
    if (static_cast<int>(cfg.flow.u.size()) != basis.domain().dim())
        throw ValidationError("flow u has " + std::to_string(cfg.flow.u.size()) +
                              " components but the basis domain has dim " + std::to_string(basis.domain().dim()));
    return basis;
}

void emit(const ordered_json& report, const std::string& path, std::ostream& out)
{
    const std::string text = dump(report);
    if (!path.empty()) write_text(path, text);
    out << text;
}

int cmd_klbasis(const CLI::App* app, const Flags& f, std::ostream& out)
{
    RunConfig cfg = resolve(app, f);
    if (f.out.empty()) throw ValidationError("--out is required");
    cfg.basis_path = f.out;
    const auto& d = cfg.domain;
    const BoxDomain domain = BoxDomain::build(d.dim, d.sides, d.nodes, d.rule);
    const KernelType type = kernel_type_from_string(cfg.kernel.type);
    if (cfg.kernel.trunc < 1) throw ValidationError("--trunc must be >= 1");

    const KLBasis basis = [&] {
        switch (type) {
        case KernelType::gaussian:
            return solve_nystrom(domain, Kernel::gaussian(cfg.kernel.lambda), cfg.kernel.trunc);
        case KernelType::rational_quadratic:
            return solve_nystrom(domain, Kernel::rational_quadratic(cfg.kernel.lambda, cfg.kernel.alpha),
                                 cfg.kernel.trunc);
        case KernelType::analytic_dirichlet:
            break;
        }
        return dirichlet_basis(domain, cfg.kernel.trunc);
    }();
    save_basis(basis, f.out);

    ordered_json report = report_envelope("klbasis", cfg);
    report["basis"] = basis_diagnostics_json(basis);
    if (basis.truncated())
        report["warning"] = "only " + std::to_string(basis.size()) + " modes exceed the eigenvalue floor";
    out << dump(report);
    return exit_ok;
}

int cmd_grf_verify(const CLI::App* app, const Flags& f, std::ostream& out)
{
    const RunConfig cfg = resolve(app, f);
    if (cfg.basis_path.empty()) throw ValidationError("--basis is required");
    const KLBasis basis = load_basis(cfg.basis_path);
    GRFVerifyOptions opt;
    opt.draws = cfg.experiment.draws;
    opt.seed = cfg.experiment.seed;
    opt.workers = f.workers;
    const auto checks = verify_grf(basis, opt);

    ordered_json report = report_envelope("grf-verify", cfg);
    report["basis"] = basis_summary_json(basis);
    report["checks"] = checks_json(checks);
    report["passed"] = all_passed(checks);
    emit(report, f.report, out);
    return exit_ok;
}

int cmd_flow_verify(const CLI::App* app, const Flags& f, std::ostream& out)
{
    const RunConfig cfg = resolve(app, f);
    cfg.flow.validate();
    const KLBasis basis = load_paired_basis(cfg);
    FlowVerifyOptions opt;
    opt.draws = cfg.experiment.draws;
    opt.seed = cfg.experiment.seed;
    opt.workers = f.workers;
    opt.checks = std::set<std::string>(cfg.experiment.checks.begin(), cfg.experiment.checks.end());
    const auto checks = verify_flow(cfg.flow, basis, opt);

    const FlowConfig flow = resolve_length(cfg.flow, basis.domain());
    ordered_json report = report_envelope("flow-verify", cfg);
    report["basis"] = basis_summary_json(basis);
    report["reynolds"] = reynolds(flow, speed(flow));
    report["weight"] = flow_weight(flow);
    report["checks"] = checks_json(checks);
    report["passed"] = all_passed(checks);
    emit(report, f.report, out);
    return exit_ok;
}

int cmd_dissipation(const CLI::App* app, const Flags& f, std::ostream& out)
{
    const RunConfig cfg = resolve(app, f);
    cfg.flow.validate();
    const auto& e = cfg.experiment;
    if (e.nu_points < 5) throw ValidationError("--nu-points must be >= 5");
    if (!(e.nu_min > 0.0) || !(e.nu_max > e.nu_min)) throw ValidationError("need 0 < nu-min < nu-max");
    if (e.nu_max / e.nu_min < 1e3 * (1.0 - 1e-12)) throw ValidationError("nu range must span at least 3 decades");
    if (e.draws < 2) throw ValidationError("--draws must be >= 2");
    const KLBasis basis = load_paired_basis(cfg);

    const auto grid = log_nu_grid(e.nu_min, e.nu_max, e.nu_points);
    const DissipationReport r = sweep(cfg.flow, basis, grid, e.draws, e.seed, f.workers);

    ordered_json report = report_envelope("dissipation", cfg);
    report["basis"] = basis_summary_json(basis);
    report["results"] = dissipation_json(r);
    if (!f.csv.empty()) write_text(f.csv, dissipation_csv(r));
    emit(report, f.out, out);
    return exit_ok;
}

int cmd_spectral_check(const CLI::App* app, const Flags& f, std::ostream& out)
{
    const RunConfig cfg = resolve(app, f);
    const double lambda = cfg.kernel.lambda;
    if (!(lambda > 0.0)) throw ValidationError("--lambda must be positive");
    const double cutoff = f.cutoff > 0.0 ? f.cutoff : 16.0 / lambda;

    SpectralOptions opt;
    opt.cutoff = cutoff;
    const auto gauss = kernel_from_spectral_density([&](double xi) { return gaussian_spectral_density(lambda, xi); }, opt);
    double max_err = 0.0;
    double max_asym = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = 0.01 * i;
        max_err = std::max(max_err, std::abs(gauss.at_lag(r) - std::exp(-r * r / (lambda * lambda))));
        max_asym = std::max(max_asym, std::abs(gauss(0.3, 0.3 + r) - gauss(0.3 + r, 0.3)));
    }

    SpectralOptions white = opt;
    white.require_convergence = false;
    white.normalize = true;
    const auto spike = kernel_from_spectral_density([](double) { return 1.0; }, white);
    bool rejected = false;
    try {
        SpectralOptions strict = opt;
        (void)kernel_from_spectral_density([](double) { return 1.0; }, strict);
    } catch (const ValidationError&) {
        rejected = true;
    }
    ordered_json lags = ordered_json::array();
    for (double r : {0.0, 0.5 * lambda, lambda, 2.0 * lambda, 5.0 * lambda})
        lags.push_back({{"lag", r}, {"K", spike.at_lag(r)}});

    ordered_json report = report_envelope("spectral-check", cfg);
    report["cutoff"] = cutoff;
    report["gaussian"] = {{"K_at_zero", gauss.zero_lag()},
                          {"max_abs_error_vs_kernel", max_err},
                          {"max_asymmetry", max_asym},
                          {"tail_fraction", gauss.tail_fraction()}};
    report["white_noise"] = {{"K_at_zero_before_normalization", 2.0 * cutoff},
                             {"normalized_lags", lags},
                             {"tail_fraction", spike.tail_fraction()},
                             {"rejected_when_convergence_required", rejected}};
    emit(report, f.out, out);
    return exit_ok;
}

void add_common(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config_path, "JSON config (or a previous report) to start from; flags override it");
    sub->add_option("--workers", f.workers, "Monte Carlo worker threads (0 = all cores); never changes results");
}

void add_flow_flags(CLI::App* sub, Flags& f)
{
    sub->add_option("--u", f.u, "Constant underlying velocity, one value per axis");
    sub->add_option("--nu", f.nu, "Viscosity");
    sub->add_option("--A", f.amplitude, "Perturbation amplitude");
    sub->add_option("--beta", f.beta, "Reynolds weighting exponent in (0, 0.5]");
    sub->add_option("--re-star", f.re_star, "Critical Reynolds number");
    sub->add_option("--T", f.horizon, "Time horizon");
    sub->add_option("--L", f.length, "Length scale (default vol^(1/dim), also for anisotropic boxes)");
}

void write_error(std::ostream& err, const char* kind, const std::string& message)
{
    ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Karhunen-Loeve random fields, Reynolds-weighted turbulent flows and dissipation checks", "klturb"};
    app.require_subcommand(1);
    Flags f;

    auto* kl = app.add_subcommand("klbasis", "Build a KL basis and write it to a file");
    add_common(kl, f);
    kl->add_option("--dim", f.dim, "Spatial dimension (1, 2 or 3)");
    kl->add_option("--sides", f.sides, "Side lengths (one value is broadcast)");
    kl->add_option("--nodes", f.nodes, "Quadrature nodes per axis");
    kl->add_option("--rule", f.rule, "gauss-legendre | trapezoid");
    kl->add_option("--kernel", f.kernel, "gaussian | rq | dirichlet");
    kl->add_option("--lambda", f.lambda, "Correlation length");
    kl->add_option("--alpha", f.alpha, "Rational-quadratic shape parameter");
    kl->add_option("--trunc", f.trunc, "Number of KL modes");
    kl->add_option("--out", f.out, "Basis file to write");

    auto* grf = app.add_subcommand("grf-verify", "Monte Carlo checks of the scalar random field");
    add_common(grf, f);
    grf->add_option("--basis", f.basis, "Basis file");
    grf->add_option("--draws", f.draws, "Number of draws");
    grf->add_option("--seed", f.seed, "Random seed");
    grf->add_option("--report", f.report, "JSON report path");

    auto* flow = app.add_subcommand("flow-verify", "Monte Carlo checks of the weighted turbulent field");
    add_common(flow, f);
    add_flow_flags(flow, f);
    flow->add_option("--basis", f.basis, "Basis file");
    flow->add_option("--draws", f.draws, "Number of draws");
    flow->add_option("--seed", f.seed, "Random seed");
    flow->add_option("--checks", f.checks, "Subset of mean,cov,structure,moments,sobolev")->delimiter(',');
    flow->add_option("--report", f.report, "JSON report path");

    auto* diss = app.add_subcommand("dissipation", "Viscosity sweep of the dissipation rate");
    add_common(diss, f);
    add_flow_flags(diss, f);
    diss->add_option("--basis", f.basis, "Basis file");
    diss->add_option("--nu-min", f.nu_min, "Smallest viscosity");
    diss->add_option("--nu-max", f.nu_max, "Largest viscosity");
    diss->add_option("--nu-points", f.nu_points, "Number of log-spaced viscosities (>= 5)");
    diss->add_option("--draws", f.draws, "Monte Carlo draws per viscosity");
    diss->add_option("--seed", f.seed, "Random seed");
    diss->add_option("--out", f.out, "JSON report path");
    diss->add_option("--csv", f.csv, "CSV curve path (nu,RE,D_mc,D_se,D_analytic)");

    auto* spec = app.add_subcommand("spectral-check", "1D spectral-density to kernel cross-check");
    add_common(spec, f);
    spec->add_option("--lambda", f.lambda, "Correlation length of the Gaussian density");
    spec->add_option("--cutoff", f.cutoff, "Wavenumber cutoff (default 16/lambda)");
    spec->add_option("--out", f.out, "JSON report path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        write_error(err, "validation", e.what());
        return exit_validation;
    }

    try {
        if (kl->parsed()) return cmd_klbasis(kl, f, out);
        if (grf->parsed()) return cmd_grf_verify(grf, f, out);
        if (flow->parsed()) return cmd_flow_verify(flow, f, out);
        if (diss->parsed()) return cmd_dissipation(diss, f, out);
        if (spec->parsed()) return cmd_spectral_check(spec, f, out);
    } catch (const ValidationError& e) {
        write_error(err, "validation", e.what());
        return exit_validation;
    } catch (const NumericalError& e) {
        write_error(err, "numerical", e.what());
        return exit_numerical;
    } catch (const std::exception& e) {
        write_error(err, "numerical", e.what());
        return exit_numerical;
    }
    write_error(err, "validation", "no subcommand given");
    return exit_validation;
}

int run(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace klturb::cli
