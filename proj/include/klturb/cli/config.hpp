#pragma once

#include "klturb/flow.hpp"
#include "klturb/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace klturb::cli {

struct DomainSpec {
    int dim = 1;
    std::vector<double> sides{1.0};
    int nodes = 64;
    QuadratureRule rule = QuadratureRule::gauss_legendre;
};

struct KernelSpec {
    std::string type = "gaussian";  ///< gaussian | rq | dirichlet
    double lambda = 0.2;
    double alpha = 1.0;
    int trunc = 40;
};

struct ExperimentSpec {
    double nu_min = 1e-6;
    double nu_max = 1e-1;
    int nu_points = 21;
    std::uint64_t draws = 10000;
    std::uint64_t seed = 1;
    std::vector<std::string> checks{"mean", "cov", "structure", "moments", "sobolev"};
};

/// Everything a run depends on. Output paths and the worker count are deliberately
/// absent: they never change results, so reports stay comparable byte for byte.
struct RunConfig {
    DomainSpec domain;
    KernelSpec kernel;
    FlowConfig flow;
    ExperimentSpec experiment;
    std::string basis_path;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Reads a config object. Unknown keys are rejected. A full report is also accepted,
/// in which case its "config" member is used.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::string& path);

}  // namespace klturb::cli
