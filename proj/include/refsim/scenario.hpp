// Scenario configuration: JSON schema parsing, operator/division/state
// builders, and schema+physics validation (validation never runs dynamics).
//
// Matrices are nested arrays of [re, im] pairs. Operator builders:
//   zero | identity {scale} | diag {values} | explicit {matrix}
//   pauli {axis, scale} | gue {strength, seed} | spin_chain {strength, seed}
//   sum {terms} | scaled {factor, term}
//   block_diag_env {blocks}      H_I = sum_k |k><k| (x) B_k
//   rs_env_product {rs, env}     A (x) B on the composite space

#pragma once

#include "refsim/branching.hpp"
#include "refsim/two_level.hpp"

// vendored single-header nlohmann/json
#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace refsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    double t0 = 0.0;
    double t_max = 1.0;
    double step = 0.1;
    std::vector<double> make() const { return make_grid(t0, t_max, step); }
};

struct ScenarioConfig {
    std::string name;
    std::uint64_t seed = 0;
    Tolerances tol;
    GridSpec grid;
    SplitPolicy policy = SplitPolicy::greedy();
    nlohmann::json raw;

    bool has_system() const { return raw.contains("dims") && raw.contains("operators"); }
    bool has_two_level() const { return raw.contains("two_level"); }
    bool has_measurement() const { return raw.contains("measurement"); }
    bool has_fidelity() const { return raw.contains("fidelity"); }
    bool has_divisions() const { return raw.contains("divisions"); }
};

ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);

// dim_r/dim_e give product builders their factor dimensions; pass 0 when the
// operator is not on a composite space.
Matrix build_operator(const nlohmann::json& spec, Index dim, Index dim_r, Index dim_e, const std::string& where);

Division build_division(const nlohmann::json& spec, Index dim_r, const std::string& where);
DivisionSet build_divisions(const ScenarioConfig& cfg, Index dim_r);

TotalSystem build_system(const ScenarioConfig& cfg);
TwoLevelParams build_two_level(const ScenarioConfig& cfg);

Vector build_state(const nlohmann::json& spec, Index dim, const std::string& where);

// Everything a generic-system run needs. A top-level "windows" section
//   {"intervals": [[a,b],...], "H_I_inside": .., "H_I_outside": ..}
// makes the interaction piecewise (inside windows vs between them); a
// "reverse" section {"forward_time": T} evolves the initial state forward to
// T and restarts it under the reversed evolution.
struct SystemSetup {
    Index dim_r = 0, dim_e = 0;
    Matrix h_r, h_e;
    EvolutionPtr evolution;
    Vector initial;
    double t0 = 0.0;
    bool reversed = false;
};

SystemSetup build_setup(const ScenarioConfig& cfg);

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> errors;
    std::vector<std::string> notes;
};

ValidationReport validate_config(const nlohmann::json& doc);

Matrix parse_matrix(const nlohmann::json& m, const std::string& where);
Vector parse_vector(const nlohmann::json& v, const std::string& where);
nlohmann::json matrix_to_json(const Matrix& m);

}  // namespace refsim
