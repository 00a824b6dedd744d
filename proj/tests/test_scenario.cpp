#include "refsim/scenario.hpp"
#include "refsim/consistency.hpp"
#include "refsim/io.hpp"
#include "refsim/linalg.hpp"

#include "doctest.h"

#include <cmath>

using namespace refsim;
using nlohmann::json;

namespace {

json demo_config() {
    return json::parse(R"({
      "name": "demo",
      "seed": 5,
      "dims": {"dim_r": 2, "dim_e": 4},
      "operators": {
        "H_R": {"kind": "diag", "values": [0.0, 1.0]},
        "H_E": {"kind": "gue", "strength": 1.0, "seed": 7},
        "H_I": {"kind": "scaled", "factor": 0.3,
                "term": {"kind": "rs_env_product",
                         "rs": {"kind": "pauli", "axis": "x"},
                         "env": {"kind": "identity"}}}
      },
      "divisions": [
        {"label": "k", "kind": "basis_groups", "groups": [[0],[1]], "values": ["1","2"]}
      ],
      "tolerances": {"eps_r": 1e-3, "eps_d": 1e-2, "tau_s": 0.5, "n_samples": 8},
      "grid": {"t0": 0.0, "t_max": 2.0, "step": 0.25},
      "split_policy": {"kind": "greedy"},
      "initial_state": {"kind": "basis", "index": 0}
    })");
}

}  // namespace

TEST_CASE("parse_config reads the common sections") {
    const ScenarioConfig cfg = parse_config(demo_config());
    CHECK(cfg.name == "demo");
    CHECK(cfg.seed == 5);
    CHECK(cfg.tol.eps_r == doctest::Approx(1e-3));
    CHECK(cfg.tol.tau_s == doctest::Approx(0.5));
    CHECK(cfg.grid.make().size() == 9);
    CHECK(cfg.policy.kind == SplitPolicy::Kind::Greedy);
}

TEST_CASE("eps_p cannot be untied from eps_r") {
    json doc = demo_config();
    doc["tolerances"]["eps_p"] = 0.5;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("operator builders cover the documented kinds") {
    const ScenarioConfig cfg = parse_config(demo_config());
    const TotalSystem sys = build_system(cfg);
    CHECK(sys.dim() == 8);
    CHECK(is_hermitian(sys.h_total, 1e-12));
    // H_I = 0.3 sigma_x (x) I
    CHECK(std::abs(sys.h_i(0, 4)) == doctest::Approx(0.3));

    const json sum_spec = json::parse(R"({"kind":"sum","terms":[{"kind":"identity"},{"kind":"identity","scale":2.0}]})");
    const Matrix s = build_operator(sum_spec, 3, 0, 0, "t");
    CHECK((s - 3.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

    const json block_spec = json::parse(
        R"({"kind":"block_diag_env","blocks":[{"kind":"identity","scale":1.0},{"kind":"identity","scale":-1.0}]})");
    const Matrix b = build_operator(block_spec, 8, 2, 4, "t");
    CHECK(b(0, 0) == Complex(1, 0));
    CHECK(b(4, 4) == Complex(-1, 0));
}

TEST_CASE("gue operator built through config is deterministic") {
    const json spec = json::parse(R"({"kind":"gue","strength":0.5,"seed":9})");
    const Matrix a = build_operator(spec, 16, 0, 0, "t");
    const Matrix b = build_operator(spec, 16, 0, 0, "t");
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("division builders: explicit, eigenspaces, basis groups") {
    const json expl = json::parse(R"({
      "label": "p", "kind": "explicit",
      "projectors": [
        {"value": "up",   "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]},
        {"value": "down", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]}
      ]})");
    const Division d1 = build_division(expl, 2, "t");
    CHECK(d1.size() == 2);

    const json eig = json::parse(R"({"label":"s","kind":"eigenspaces","operator":{"kind":"pauli","axis":"z"}})");
    const Division d2 = build_division(eig, 2, "t");
    CHECK(d2.size() == 2);

    const ScenarioConfig cfg = parse_config(demo_config());
    const DivisionSet wd = build_divisions(cfg, 2);
    CHECK(wd.divisions.size() == 1);
    CHECK(wd.divisions[0].value_labels[0] == "1");
}

TEST_CASE("validate_config flags broken inputs without running dynamics") {
    json good = demo_config();
    CHECK(validate_config(good).ok);

    json bad_h = demo_config();
    bad_h["operators"]["H_R"] = json::parse(R"({"kind":"explicit","matrix":[[[0,0],[1,0]],[[0,0],[0,0]]]})");
    const ValidationReport r1 = validate_config(bad_h);
    CHECK_FALSE(r1.ok);
    REQUIRE_FALSE(r1.errors.empty());

    json bad_div = demo_config();
    bad_div["divisions"][0].erase("label");
    CHECK_FALSE(validate_config(bad_div).ok);

    json bad_proj = demo_config();
    bad_proj["divisions"][0] = json::parse(R"({
      "label": "broken", "kind": "explicit",
      "projectors": [{"value": "a", "matrix": [[[0.5,0],[0,0]],[[0,0],[0,0]]]}]})");
    CHECK_FALSE(validate_config(bad_proj).ok);
}

TEST_CASE("build_setup: plain system and windowed system agree where they should") {
    const ScenarioConfig cfg = parse_config(demo_config());
    const SystemSetup plain = build_setup(cfg);
    CHECK(plain.evolution->dim() == 8);
    CHECK_FALSE(plain.reversed);
    CHECK(std::abs(plain.initial.norm() - 1.0) < 1e-12);

    json windowed = demo_config();
    windowed["windows"] = json::parse(R"({
      "intervals": [[0.0, 1.0]],
      "H_I_inside": {"kind": "zero"},
      "H_I_outside": {"kind": "scaled", "factor": 0.3,
                      "term": {"kind": "rs_env_product",
                               "rs": {"kind": "pauli", "axis": "x"},
                               "env": {"kind": "identity"}}}
    })");
    const SystemSetup ws = build_setup(parse_config(windowed));
    // inside the window the interaction is off: evolution is the free one
    const Vector psi = ws.initial;
    const Vector in_window = ws.evolution->propagate(psi, 0.0, 0.5);
    const TotalSystem free_sys(2, 4, plain.h_r, plain.h_e, Matrix::Zero(8, 8));
    const Vector expect = free_sys.evolution()->propagate(psi, 0.0, 0.5);
    CHECK((in_window - expect).norm() < 1e-10);
}

TEST_CASE("build_setup: reversal returns to the initial state") {
    json doc = demo_config();
    doc["reverse"] = {{"forward_time", 1.5}};
    const SystemSetup setup = build_setup(parse_config(doc));
    CHECK(setup.reversed);
    const Vector back = setup.evolution->propagate(setup.initial, 0.0, 1.5);
    const Vector psi0 = build_state(demo_config().at("initial_state"), 8, "t");
    CHECK((back - psi0).norm() < 1e-9);
}

TEST_CASE("config hash is stable and seed-sensitive") {
    const json doc = demo_config();
    CHECK(config_hash_hex(doc, 1) == config_hash_hex(doc, 1));
    CHECK(config_hash_hex(doc, 1) != config_hash_hex(doc, 2));
}

TEST_CASE("csv formatting uses 12 significant digits") {
    CHECK(format_g12(1.0 / 3.0) == "0.333333333333");
    CHECK(format_g12(1.0) == "1");
}
