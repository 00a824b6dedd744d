#include "refsim/scenario.hpp"

#include "refsim/consistency.hpp"
#include "refsim/linalg.hpp"
#include "refsim/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace refsim {

using nlohmann::json;

namespace {

ConfigError err(const std::string& where, const std::string& what) {
    return ConfigError(where + ": " + what);
}

double get_num(const json& j, const char* key, const std::string& where, double fallback,
               bool required = false) {
    if (!j.contains(key)) {
        if (required) throw err(where, std::string("missing '") + key + "'");
        return fallback;
    }
    if (!j.at(key).is_number()) throw err(where, std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::uint64_t get_seed(const json& j, const char* key, const std::string& where, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer()) {
        throw err(where, std::string("'") + key + "' must be an integer seed");
    }
    return j.at(key).get<std::uint64_t>();
}

Complex parse_complex(const json& c, const std::string& where) {
    if (c.is_number()) return Complex(c.get<double>(), 0.0);
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
        throw err(where, "complex entries must be [re, im] pairs");
    }
    return Complex(c[0].get<double>(), c[1].get<double>());
}

}  // namespace

Matrix parse_matrix(const json& m, const std::string& where) {
    if (!m.is_array() || m.empty()) throw err(where, "matrix must be a non-empty array of rows");
    const auto rows = static_cast<Index>(m.size());
    const auto cols = static_cast<Index>(m[0].size());
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = m[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw err(where, "ragged matrix rows");
        for (Index j = 0; j < cols; ++j) out(i, j) = parse_complex(row[static_cast<std::size_t>(j)], where);
    }
    return out;
}

Vector parse_vector(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw err(where, "vector must be a non-empty array");
    Vector out(static_cast<Index>(v.size()));
    for (Index i = 0; i < out.size(); ++i) out(i) = parse_complex(v[static_cast<std::size_t>(i)], where);
    return out;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix build_operator(const json& spec, Index dim, Index dim_r, Index dim_e, const std::string& where) {
    if (!spec.is_object() || !spec.contains("kind")) throw err(where, "operator spec needs a 'kind'");
    const std::string kind = spec.at("kind").get<std::string>();

    if (kind == "zero") return Matrix::Zero(dim, dim);
    if (kind == "identity") {
        return get_num(spec, "scale", where, 1.0) * Matrix::Identity(dim, dim);
    }
    if (kind == "diag") {
        if (!spec.contains("values")) throw err(where, "diag needs 'values'");
        const json& vals = spec.at("values");
        if (static_cast<Index>(vals.size()) != dim) throw err(where, "diag value count must match dimension");
        Matrix out = Matrix::Zero(dim, dim);
        for (Index i = 0; i < dim; ++i) out(i, i) = vals[static_cast<std::size_t>(i)].get<double>();
        return out;
    }
    if (kind == "explicit") {
        if (!spec.contains("matrix")) throw err(where, "explicit needs 'matrix'");
        Matrix out = parse_matrix(spec.at("matrix"), where);
        require_square(out, dim, where);
        return out;
    }
    if (kind == "pauli") {
        if (dim != 2) throw err(where, "pauli operators need dimension 2");
        const std::string axis = spec.value("axis", "z");
        const double scale = get_num(spec, "scale", where, 1.0);
        Matrix out(2, 2);
        if (axis == "x") out << 0, 1, 1, 0;
        else if (axis == "y") out << 0, Complex(0, -1), Complex(0, 1), 0;
        else if (axis == "z") out << 1, 0, 0, -1;
        else throw err(where, "pauli axis must be x, y or z");
        return scale * out;
    }
    if (kind == "gue" || kind == "spin_chain") {
        const double strength = get_num(spec, "strength", where, 1.0);
        const std::uint64_t seed = get_seed(spec, "seed", where, 0);
        return build_env(kind == "gue" ? "gue" : "spin-chain", dim, strength, seed);
    }
    if (kind == "sum") {
        if (!spec.contains("terms") || !spec.at("terms").is_array()) throw err(where, "sum needs 'terms'");
        Matrix out = Matrix::Zero(dim, dim);
        int i = 0;
        for (const json& term : spec.at("terms")) {
            out += build_operator(term, dim, dim_r, dim_e, where + ".terms[" + std::to_string(i++) + "]");
        }
        return out;
    }
    if (kind == "scaled") {
        if (!spec.contains("term")) throw err(where, "scaled needs 'term'");
        return get_num(spec, "factor", where, 1.0, true) *
               build_operator(spec.at("term"), dim, dim_r, dim_e, where + ".term");
    }
    if (kind == "block_diag_env") {
        if (dim_r < 1 || dim_e < 1 || dim != dim_r * dim_e) {
            throw err(where, "block_diag_env needs a composite target dimension");
        }
        if (!spec.contains("blocks") || static_cast<Index>(spec.at("blocks").size()) != dim_r) {
            throw err(where, "block_diag_env needs one env block per reference basis state");
        }
        Matrix out = Matrix::Zero(dim, dim);
        for (Index k = 0; k < dim_r; ++k) {
            const Matrix b = build_operator(spec.at("blocks")[static_cast<std::size_t>(k)], dim_e, 0, 0,
                                            where + ".blocks[" + std::to_string(k) + "]");
            out.block(k * dim_e, k * dim_e, dim_e, dim_e) = b;
        }
        return out;
    }
    if (kind == "rs_env_product") {
        if (dim_r < 1 || dim_e < 1 || dim != dim_r * dim_e) {
            throw err(where, "rs_env_product needs a composite target dimension");
        }
        if (!spec.contains("rs") || !spec.contains("env")) throw err(where, "rs_env_product needs 'rs' and 'env'");
        const Matrix a = build_operator(spec.at("rs"), dim_r, 0, 0, where + ".rs");
        const Matrix b = build_operator(spec.at("env"), dim_e, 0, 0, where + ".env");
        return tensor(a, b);
    }
    throw err(where, "unknown operator kind '" + kind + "'");
}

Division build_division(const json& spec, Index dim_r, const std::string& where) {
    if (!spec.is_object()) throw err(where, "division must be an object");
    const std::string label = spec.value("label", "");
    if (label.empty()) throw err(where, "division needs a 'label'");
    const std::string kind = spec.value("kind", "");

    if (kind == "explicit") {
        if (!spec.contains("projectors") || !spec.at("projectors").is_array() || spec.at("projectors").empty()) {
            throw err(where, "explicit division needs 'projectors'");
        }
        Division d;
        d.label = label;
        d.space_dim = dim_r;
        int i = 0;
        for (const json& p : spec.at("projectors")) {
            const std::string pw = where + ".projectors[" + std::to_string(i++) + "]";
            if (!p.contains("value") || !p.contains("matrix")) throw err(pw, "needs 'value' and 'matrix'");
            d.value_labels.push_back(p.at("value").get<std::string>());
            Matrix m = parse_matrix(p.at("matrix"), pw);
            require_square(m, dim_r, pw);
            d.projectors.push_back(std::move(m));
        }
        d.validate();
        return d;
    }
    if (kind == "eigenspaces") {
        if (!spec.contains("operator")) throw err(where, "eigenspaces division needs 'operator'");
        const Matrix op = build_operator(spec.at("operator"), dim_r, 0, 0, where + ".operator");
        const double ctol = get_num(spec, "cluster_tol", where, 1e-8);
        Division d = eigenspace_division(label, op, ctol);
        d.validate();
        return d;
    }
    if (kind == "basis_groups") {
        if (!spec.contains("groups")) throw err(where, "basis_groups division needs 'groups'");
        std::vector<std::vector<Index>> groups;
        for (const json& g : spec.at("groups")) {
            std::vector<Index> idx;
            for (const json& v : g) idx.push_back(v.get<Index>());
            groups.push_back(std::move(idx));
        }
        std::vector<std::string> values;
        if (spec.contains("values")) {
            for (const json& v : spec.at("values")) values.push_back(v.get<std::string>());
        }
        Division d = basis_group_division(label, dim_r, groups, values);
        d.validate();
        return d;
    }
    if (kind == "trivial") {
        Division d = trivial_division(dim_r);
        d.label = label;
        return d;
    }
    throw err(where, "unknown division kind '" + kind + "'");
}

DivisionSet build_divisions(const ScenarioConfig& cfg, Index dim_r) {
    DivisionSet wd;
    if (!cfg.raw.contains("divisions")) return wd;
    int i = 0;
    for (const json& d : cfg.raw.at("divisions")) {
        wd.divisions.push_back(build_division(d, dim_r, "divisions[" + std::to_string(i++) + "]"));
    }
    wd.validate();
    return wd;
}

TotalSystem build_system(const ScenarioConfig& cfg) {
    if (!cfg.has_system()) throw ConfigError("config: missing 'dims'/'operators' sections");
    const json& dims = cfg.raw.at("dims");
    const auto dim_r = static_cast<Index>(get_num(dims, "dim_r", "dims", 0, true));
    const auto dim_e = static_cast<Index>(get_num(dims, "dim_e", "dims", 0, true));
    const json& ops = cfg.raw.at("operators");
    if (!ops.contains("H_R") || !ops.contains("H_E") || !ops.contains("H_I")) {
        throw ConfigError("operators: needs H_R, H_E and H_I");
    }
    Matrix h_r = build_operator(ops.at("H_R"), dim_r, 0, 0, "operators.H_R");
    Matrix h_e = build_operator(ops.at("H_E"), dim_e, 0, 0, "operators.H_E");
    Matrix h_i = build_operator(ops.at("H_I"), dim_r * dim_e, dim_r, dim_e, "operators.H_I");
    return TotalSystem(dim_r, dim_e, std::move(h_r), std::move(h_e), std::move(h_i));
}

TwoLevelParams build_two_level(const ScenarioConfig& cfg) {
    if (!cfg.has_two_level()) throw ConfigError("config: missing 'two_level' section");
    const json& t = cfg.raw.at("two_level");
    TwoLevelParams p;
    p.e1 = get_num(t, "e1", "two_level", 0.0);
    p.e2 = get_num(t, "e2", "two_level", 0.5);
    p.dim_e = static_cast<Index>(get_num(t, "dim_e", "two_level", 64));
    p.env_kind = t.value("env_kind", "gue");
    p.env_strength = get_num(t, "env_strength", "two_level", 1.0);
    p.env_seed = get_seed(t, "env_seed", "two_level", 11);
    p.block_strength = get_num(t, "block_strength", "two_level", 0.2);
    p.block_seed_1 = get_seed(t, "block_seed_1", "two_level", 12);
    p.block_seed_2 = get_seed(t, "block_seed_2", "two_level", 13);
    p.gap_coupling = get_num(t, "gap_coupling", "two_level", 0.5);
    if (t.contains("windows")) {
        p.windows.clear();
        for (const json& w : t.at("windows")) {
            if (!w.is_array() || w.size() != 2) throw ConfigError("two_level.windows: entries must be [t, t_end]");
            p.windows.emplace_back(w[0].get<double>(), w[1].get<double>());
        }
    }
    p.tol = cfg.tol;
    return p;
}

SystemSetup build_setup(const ScenarioConfig& cfg) {
    if (!cfg.has_system()) throw ConfigError("config: missing 'dims'/'operators' sections");
    const json& dims = cfg.raw.at("dims");
    SystemSetup setup;
    setup.dim_r = static_cast<Index>(get_num(dims, "dim_r", "dims", 0, true));
    setup.dim_e = static_cast<Index>(get_num(dims, "dim_e", "dims", 0, true));
    const Index dim = setup.dim_r * setup.dim_e;
    const json& ops = cfg.raw.at("operators");
    if (!ops.contains("H_R") || !ops.contains("H_E")) throw ConfigError("operators: needs H_R and H_E");
    setup.h_r = build_operator(ops.at("H_R"), setup.dim_r, 0, 0, "operators.H_R");
    setup.h_e = build_operator(ops.at("H_E"), setup.dim_e, 0, 0, "operators.H_E");
    setup.t0 = cfg.grid.t0;

    if (cfg.raw.contains("windows")) {
        const json& w = cfg.raw.at("windows");
        if (!w.contains("intervals") || !w.contains("H_I_inside") || !w.contains("H_I_outside")) {
            throw ConfigError("windows: needs 'intervals', 'H_I_inside' and 'H_I_outside'");
        }
        std::vector<std::pair<double, double>> intervals;
        double prev = -std::numeric_limits<double>::infinity();
        for (const json& iv : w.at("intervals")) {
            if (!iv.is_array() || iv.size() != 2) throw ConfigError("windows.intervals: entries must be [t, t_end]");
            const double a = iv[0].get<double>(), b = iv[1].get<double>();
            if (b <= a || a < prev) throw ConfigError("windows.intervals: must be sorted, disjoint, non-empty");
            intervals.emplace_back(a, b);
            prev = b;
        }
        if (intervals.empty()) throw ConfigError("windows.intervals: empty");
        const Matrix h_free = tensor(setup.h_r, Matrix::Identity(setup.dim_e, setup.dim_e)) +
                              tensor(Matrix::Identity(setup.dim_r, setup.dim_r), setup.h_e);
        const Matrix h_in =
            h_free + build_operator(w.at("H_I_inside"), dim, setup.dim_r, setup.dim_e, "windows.H_I_inside");
        const Matrix h_out =
            h_free + build_operator(w.at("H_I_outside"), dim, setup.dim_r, setup.dim_e, "windows.H_I_outside");
        require_hermitian(h_in, "windows.H_I_inside");
        require_hermitian(h_out, "windows.H_I_outside");
        auto in_form = std::make_shared<SpectralForm>(SpectralForm::decompose(h_in));
        auto out_form = std::make_shared<SpectralForm>(SpectralForm::decompose(h_out));
        std::vector<double> boundaries;
        std::vector<std::shared_ptr<const SpectralForm>> forms;
        forms.push_back(in_form);
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            boundaries.push_back(intervals[i].second);
            forms.push_back(out_form);
            if (i + 1 < intervals.size()) {
                boundaries.push_back(intervals[i + 1].first);
                forms.push_back(in_form);
            }
        }
        setup.evolution = std::make_shared<PiecewiseEvolution>(std::move(boundaries), std::move(forms));
    } else {
        setup.evolution = build_system(cfg).evolution();
    }

    if (!cfg.raw.contains("initial_state")) throw ConfigError("config: missing 'initial_state'");
    setup.initial = build_state(cfg.raw.at("initial_state"), dim, "initial_state");

    if (cfg.raw.contains("reverse")) {
        const json& r = cfg.raw.at("reverse");
        const double t_fwd = get_num(r, "forward_time", "reverse", 0.0, true);
        setup.initial = setup.evolution->propagate(setup.initial, setup.t0, t_fwd);
        setup.evolution = make_reversed(setup.evolution, t_fwd + setup.t0);
        setup.reversed = true;
    }
    return setup;
}

Vector build_state(const json& spec, Index dim, const std::string& where) {
    if (!spec.is_object() || !spec.contains("kind")) throw err(where, "state spec needs a 'kind'");
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "basis") {
        const auto i = static_cast<Index>(get_num(spec, "index", where, 0));
        return basis_state(dim, i);
    }
    if (kind == "explicit") {
        if (!spec.contains("amps")) throw err(where, "explicit state needs 'amps'");
        Vector v = parse_vector(spec.at("amps"), where);
        if (v.size() != dim) throw err(where, "state dimension mismatch");
        const double n = v.norm();
        if (n <= 0) throw err(where, "zero state");
        return v / n;
    }
    if (kind == "random") {
        SeededRng rng(get_seed(spec, "seed", where, 0));
        return random_state(dim, rng);
    }
    throw err(where, "unknown state kind '" + kind + "'");
}

ScenarioConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
    ScenarioConfig cfg;
    cfg.raw = doc;
    cfg.name = doc.value("name", "scenario");
    cfg.seed = get_seed(doc, "seed", "config", 0);

    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        cfg.tol.eps_r = get_num(t, "eps_r", "tolerances", cfg.tol.eps_r);
        cfg.tol.eps_d = get_num(t, "eps_d", "tolerances", cfg.tol.eps_d);
        cfg.tol.tau_s = get_num(t, "tau_s", "tolerances", cfg.tol.tau_s);
        cfg.tol.n_samples = static_cast<int>(get_num(t, "n_samples", "tolerances", cfg.tol.n_samples));
        if (t.contains("eps_p") && t.at("eps_p").get<double>() != cfg.tol.eps_r) {
            throw ConfigError("tolerances: eps_p is tied to eps_r and cannot differ");
        }
    }
    cfg.tol.validate();

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        cfg.grid.t0 = get_num(g, "t0", "grid", 0.0);
        cfg.grid.t_max = get_num(g, "t_max", "grid", 1.0, true);
        cfg.grid.step = get_num(g, "step", "grid", 0.1, true);
        if (cfg.grid.step <= 0) throw ConfigError("grid: step must be > 0");
        if (cfg.grid.t_max < cfg.grid.t0) throw ConfigError("grid: t_max < t0");
    }

    if (doc.contains("split_policy")) {
        const json& p = doc.at("split_policy");
        const std::string kind = p.value("kind", "greedy");
        if (kind == "greedy") cfg.policy = SplitPolicy::greedy();
        else if (kind == "none") cfg.policy = SplitPolicy::none();
        else if (kind == "scheduled") {
            std::vector<double> times;
            if (p.contains("times")) {
                for (const json& t : p.at("times")) times.push_back(t.get<double>());
            }
            cfg.policy = SplitPolicy::scheduled(std::move(times));
        } else {
            throw ConfigError("split_policy: kind must be greedy, scheduled or none");
        }
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("config: JSON parse failure in '" + path + "': " + e.what());
    }
    return parse_config(doc);
}

ValidationReport validate_config(const json& doc) {
    ValidationReport rep;
    auto fail = [&](const std::string& msg) {
        rep.ok = false;
        rep.errors.push_back(msg);
    };

    ScenarioConfig cfg;
    try {
        cfg = parse_config(doc);
    } catch (const std::exception& e) {
        fail(e.what());
        return rep;
    }

    if (cfg.has_system()) {
        try {
            TotalSystem sys = build_system(cfg);
            rep.notes.push_back("system: dim " + std::to_string(sys.dim()));
            if (cfg.has_divisions()) {
                try {
                    DivisionSet wd = build_divisions(cfg, sys.dim_r);
                    rep.notes.push_back("divisions: " + std::to_string(wd.divisions.size()) + " validated");
                    for (const Division& d : wd.divisions) {
                        const StabilityReport sr = stability_check(d, sys.h_r);
                        rep.notes.push_back("division '" + d.label +
                                            "': commutator norm with H_R = " + std::to_string(sr.max_commutator));
                    }
                } catch (const std::exception& e) {
                    fail(e.what());
                }
            }
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    if (cfg.has_two_level()) {
        try {
            TwoLevelParams p = build_two_level(cfg);
            if (p.dim_e < 2) fail("two_level: dim_e must be >= 2");
            double prev = -1e300;
            for (auto& [a, b] : p.windows) {
                if (b <= a) fail("two_level: empty window");
                if (a < prev) fail("two_level: windows must be sorted and disjoint");
                prev = b;
            }
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    if (cfg.has_measurement()) {
        const json& m = cfg.raw.at("measurement");
        if (!m.contains("amplitudes")) {
            fail("measurement: needs 'amplitudes'");
        } else {
            try {
                Vector c = parse_vector(m.at("amplitudes"), "measurement.amplitudes");
                if (std::abs(c.squaredNorm() - 1.0) > 1e-10) fail("measurement: amplitudes not normalized");
            } catch (const std::exception& e) {
                fail(e.what());
            }
        }
    }
    if (!cfg.has_system() && !cfg.has_two_level() && !cfg.has_measurement() && !cfg.has_fidelity()) {
        rep.notes.push_back("no scenario section present (system/two_level/measurement/fidelity)");
    }
    return rep;
}

}  // namespace refsim
