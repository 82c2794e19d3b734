#include "klturb/cli/config.hpp"

#include "klturb/errors.hpp"

#include <fstream>
#include <set>

namespace klturb::cli {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const RunConfig& cfg)
{
    ordered_json j;
    j["domain"] = {{"dim", cfg.domain.dim},
                   {"sides", cfg.domain.sides},
                   {"nodes", cfg.domain.nodes},
                   {"rule", to_string(cfg.domain.rule)}};
    j["kernel"] = {{"type", cfg.kernel.type},
                   {"lambda", cfg.kernel.lambda},
                   {"alpha", cfg.kernel.alpha},
                   {"trunc", cfg.kernel.trunc}};
    j["flow"] = {{"u", cfg.flow.u},
                 {"nu", cfg.flow.nu},
                 {"A", cfg.flow.amplitude},
                 {"beta", cfg.flow.beta},
                 {"re_star", cfg.flow.re_star},
                 {"L", cfg.flow.length},
                 {"T", cfg.flow.horizon}};
    j["experiment"] = {{"nu_min", cfg.experiment.nu_min},
                       {"nu_max", cfg.experiment.nu_max},
                       {"nu_points", cfg.experiment.nu_points},
                       {"draws", cfg.experiment.draws},
                       {"seed", cfg.experiment.seed},
                       {"checks", cfg.experiment.checks}};
    j["basis"] = cfg.basis_path;
    return j;
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object()) throw ValidationError("config section '" + where + "' must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ValidationError("unknown config key '" + where + "." + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key '" + where + "." + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig config_from_json(const json& in)
{
    const json& j = (in.is_object() && in.contains("schema_version") && in.contains("config")) ? in.at("config") : in;
    reject_unknown(j, {"domain", "kernel", "flow", "experiment", "basis"}, "config");
    RunConfig cfg;
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        reject_unknown(d, {"dim", "sides", "nodes", "rule"}, "domain");
        read(d, "dim", cfg.domain.dim, "domain");
        read(d, "sides", cfg.domain.sides, "domain");
        read(d, "nodes", cfg.domain.nodes, "domain");
        std::string rule = to_string(cfg.domain.rule);
        read(d, "rule", rule, "domain");
        cfg.domain.rule = quadrature_rule_from_string(rule);
    }
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        reject_unknown(k, {"type", "lambda", "alpha", "trunc"}, "kernel");
        read(k, "type", cfg.kernel.type, "kernel");
        read(k, "lambda", cfg.kernel.lambda, "kernel");
        read(k, "alpha", cfg.kernel.alpha, "kernel");
        read(k, "trunc", cfg.kernel.trunc, "kernel");
    }
    if (j.contains("flow")) {
        const auto& f = j.at("flow");
        reject_unknown(f, {"u", "nu", "A", "beta", "re_star", "L", "T"}, "flow");
        read(f, "u", cfg.flow.u, "flow");
        read(f, "nu", cfg.flow.nu, "flow");
        read(f, "A", cfg.flow.amplitude, "flow");
        read(f, "beta", cfg.flow.beta, "flow");
        read(f, "re_star", cfg.flow.re_star, "flow");
        read(f, "L", cfg.flow.length, "flow");
        read(f, "T", cfg.flow.horizon, "flow");
    }
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        reject_unknown(e, {"nu_min", "nu_max", "nu_points", "draws", "seed", "checks"}, "experiment");
        read(e, "nu_min", cfg.experiment.nu_min, "experiment");
        read(e, "nu_max", cfg.experiment.nu_max, "experiment");
        read(e, "nu_points", cfg.experiment.nu_points, "experiment");
        read(e, "draws", cfg.experiment.draws, "experiment");
        read(e, "seed", cfg.experiment.seed, "experiment");
        read(e, "checks", cfg.experiment.checks, "experiment");
    }
    read(j, "basis", cfg.basis_path, "config");
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed config file '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

}  // namespace klturb::cli
