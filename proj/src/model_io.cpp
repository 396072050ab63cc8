#include "sgmvar/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sgmvar/error.hpp"
#include "sgmvar/model.hpp"

namespace sgmvar {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(ctx + ": missing field \"" + key + "\"");
    return j.at(key);
}

int get_int(const json& j, const std::string& what) {
    if (!j.is_number_integer()) throw ParseError(what + " must be an integer");
    return j.get<int>();
}

double get_number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ParseError(what + " must be a number");
    return j.get<double>();
}

bool get_bool(const json& j, const std::string& what) {
    if (!j.is_boolean()) throw ParseError(what + " must be true or false");
    return j.get<bool>();
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ParseError(ctx + ": unknown field \"" + it.key() + "\"");
}

LikelihoodKind kind_from_string(const std::string& s, const std::string& ctx) {
    if (s == "exact") return LikelihoodKind::Exact;
    if (s == "conditional") return LikelihoodKind::Conditional;
    throw ParseError(ctx + " must be \"exact\" or \"conditional\"");
}

// Without an explicit d1 the last shock alone is the one in question.
int infer_d1(const ConstraintPattern& p) { return p.d > 0 && p.column_has_sign(p.d - 1) ? 1 : 0; }

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ParseError(what + " must be a non-empty array of rows");
    const std::size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) throw ParseError(what + " must be a non-empty array of rows");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ParseError(what + ": row " + std::to_string(r + 1) + " has the wrong length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                get_number(j[r][c], what + "[" + std::to_string(r + 1) + "][" + std::to_string(c + 1) + "]");
    }
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = get_number(j[i], what + "[" + std::to_string(i + 1) + "]");
    return v;
}

json pattern_to_json(const ConstraintPattern& p) {
    json grid = json::array();
    for (int r = 0; r < p.d; ++r) {
        json row = json::array();
        for (int c = 0; c < p.d; ++c) row.push_back(std::string(1, cell_symbol(p.at(r, c))));
        grid.push_back(std::move(row));
    }
    return grid;
}

ConstraintPattern pattern_from_json(const json& grid, int d1) {
    if (!grid.is_array() || grid.empty()) throw ParseError("pattern must be a non-empty array of rows");
    std::vector<std::string> rows;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        const json& row = grid[r];
        std::string s;
        if (row.is_string()) {
            s = row.get<std::string>();
        } else if (row.is_array()) {
            for (const auto& cell : row) {
                if (!cell.is_string() || cell.get<std::string>().size() != 1)
                    throw ParseError("pattern row " + std::to_string(r + 1) + ": cells must be one of \"*\", \"+\", \"-\", \"0\"");
                s += cell.get<std::string>();
            }
        } else {
            throw ParseError("pattern row " + std::to_string(r + 1) + " must be an array or a string");
        }
        rows.push_back(std::move(s));
    }
    try {
        ConstraintPattern p = ConstraintPattern::from_rows(rows, 0);
        p.d1 = d1 >= 0 ? d1 : infer_d1(p);
        if (p.d1 > p.d) throw ParseError("pattern: d1 exceeds d");
        return p;
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("pattern: ") + e.what());
    }
}

json model_to_json(const ModelParameters& model) {
    json j;
    j["d"] = model.dims.d;
    j["p"] = model.dims.p;
    j["M"] = model.dims.M;
    if (!model.names.empty()) j["names"] = model.names;
    json regimes = json::array();
    for (const auto& r : model.regimes) {
        json jr;
        jr["phi0"] = std::vector<double>(r.phi0.data(), r.phi0.data() + r.phi0.size());
        json A = json::array();
        for (const auto& a : r.A) A.push_back(matrix_to_json(a));
        jr["A"] = std::move(A);
        jr["omega"] = matrix_to_json(r.omega);
        regimes.push_back(std::move(jr));
    }
    j["regimes"] = std::move(regimes);
    j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
    if (model.ordering_waived) j["ordering_waived"] = true;
    if (model.structural) {
        const auto& s = *model.structural;
        json js;
        js["W"] = matrix_to_json(s.W);
        json lams = json::array();
        for (const auto& l : s.lambdas) lams.push_back(std::vector<double>(l.data(), l.data() + l.size()));
        js["lambdas"] = std::move(lams);
        if (s.pattern.d > 0) {
            js["pattern"] = pattern_to_json(s.pattern);
            js["d1"] = s.pattern.d1;
        }
        j["structural"] = std::move(js);
    }
    return j;
}

ModelParameters model_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("model: expected a JSON object");
    reject_unknown(j, {"d", "p", "M", "names", "regimes", "alpha", "ordering_waived", "structural"}, "model");
    ModelParameters model;
    model.dims.d = get_int(require(j, "d", "model"), "model.d");
    model.dims.p = get_int(require(j, "p", "model"), "model.p");
    model.dims.M = get_int(require(j, "M", "model"), "model.M");
    const auto& dm = model.dims;
    if (dm.d < 1 || dm.p < 1 || dm.M < 1) throw ParseError("model: d, p and M must be positive");
    if (j.contains("names")) {
        if (!j["names"].is_array()) throw ParseError("model.names must be an array of strings");
        for (const auto& n : j["names"]) {
            if (!n.is_string()) throw ParseError("model.names must be an array of strings");
            model.names.push_back(n.get<std::string>());
        }
    }
    if (j.contains("ordering_waived")) model.ordering_waived = get_bool(j["ordering_waived"], "model.ordering_waived");

    if (j.contains("structural")) {
        const json& js = j["structural"];
        reject_unknown(js, {"W", "lambdas", "pattern", "d1"}, "model.structural");
        StructuralParams s;
        s.W = matrix_from_json(require(js, "W", "model.structural"), "structural.W");
        const json& lams = require(js, "lambdas", "model.structural");
        if (!lams.is_array()) throw ParseError("structural.lambdas must be an array of vectors");
        for (std::size_t k = 0; k < lams.size(); ++k)
            s.lambdas.push_back(vector_from_json(lams[k], "structural.lambdas[" + std::to_string(k + 1) + "]"));
        const int d1 = js.contains("d1") ? get_int(js["d1"], "structural.d1") : -1;
        if (js.contains("pattern")) s.pattern = pattern_from_json(js["pattern"], d1);
        model.structural = std::move(s);
    }

    const json& regimes = require(j, "regimes", "model");
    if (!regimes.is_array() || static_cast<int>(regimes.size()) != dm.M)
        throw ParseError("model.regimes must be an array of M regimes");
    for (int m = 0; m < dm.M; ++m) {
        const json& jr = regimes[static_cast<std::size_t>(m)];
        const std::string ctx = "regimes[" + std::to_string(m + 1) + "]";
        reject_unknown(jr, {"phi0", "A", "omega"}, ctx);
        Regime r;
        r.phi0 = vector_from_json(require(jr, "phi0", ctx), ctx + ".phi0");
        const json& A = require(jr, "A", ctx);
        if (!A.is_array() || static_cast<int>(A.size()) != dm.p)
            throw ParseError(ctx + ".A must be an array of p matrices");
        for (int i = 0; i < dm.p; ++i)
            r.A.push_back(matrix_from_json(A[static_cast<std::size_t>(i)], ctx + ".A[" + std::to_string(i + 1) + "]"));
        if (jr.contains("omega")) {
            r.omega = matrix_from_json(jr["omega"], ctx + ".omega");
        } else if (model.structural) {
            if (m > 0 && static_cast<int>(model.structural->lambdas.size()) < m)
                throw ParseError(ctx + ": omega missing and structural.lambdas too short");
            r.omega = model.structural->omega(m);
        } else {
            throw ParseError(ctx + ": missing field \"omega\"");
        }
        model.regimes.push_back(std::move(r));
    }
    model.alpha = vector_from_json(require(j, "alpha", "model"), "model.alpha");
    validate_model(model);
    return model;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw ParseError("failed writing '" + path + "'");
}

ModelParameters load_model(const std::string& path) {
    const json j = read_json_file(path);
    try {
        return model_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_model(const ModelParameters& model, const std::string& path) { write_json_file(model_to_json(model), path); }

EstimationJob estimation_job_from_json(const json& j, int d) {
    if (!j.is_object()) throw ParseError("estimation config: expected a JSON object");
    reject_unknown(j,
                   {"p", "M", "rounds", "seed", "threads", "likelihood", "ga", "refine", "constraints", "std_errors",
                    "std_error_likelihood"},
                   "estimation config");
    EstimationJob job;
    job.dims.d = d;
    job.dims.p = get_int(require(j, "p", "estimation config"), "p");
    job.dims.M = get_int(require(j, "M", "estimation config"), "M");
    if (job.dims.p < 1 || job.dims.M < 1) throw ParseError("estimation config: p and M must be positive");
    auto& c = job.config;
    if (j.contains("rounds")) c.rounds = get_int(j["rounds"], "rounds");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ParseError("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("threads")) c.threads = get_int(j["threads"], "threads");
    if (j.contains("likelihood")) {
        if (!j["likelihood"].is_string()) throw ParseError("likelihood must be a string");
        c.likelihood_kind = kind_from_string(j["likelihood"].get<std::string>(), "likelihood");
    }
    if (j.contains("std_errors")) c.compute_std_errors = get_bool(j["std_errors"], "std_errors");
    if (j.contains("std_error_likelihood")) {
        if (!j["std_error_likelihood"].is_string()) throw ParseError("std_error_likelihood must be a string");
        c.std_error_likelihood = kind_from_string(j["std_error_likelihood"].get<std::string>(), "std_error_likelihood");
    }
    if (j.contains("ga")) {
        const json& g = j["ga"];
        reject_unknown(g, {"population_size", "generations", "mutation_rate", "crossover_rate", "elitism_count"}, "ga");
        if (g.contains("population_size")) c.ga.population_size = get_int(g["population_size"], "ga.population_size");
        if (g.contains("generations")) c.ga.generations = get_int(g["generations"], "ga.generations");
        if (g.contains("mutation_rate")) c.ga.mutation_rate = get_number(g["mutation_rate"], "ga.mutation_rate");
        if (g.contains("crossover_rate")) c.ga.crossover_rate = get_number(g["crossover_rate"], "ga.crossover_rate");
        if (g.contains("elitism_count")) c.ga.elitism_count = get_int(g["elitism_count"], "ga.elitism_count");
    }
    if (j.contains("refine")) {
        const json& r = j["refine"];
        reject_unknown(r, {"max_iterations", "gradient_step", "convergence_tol"}, "refine");
        if (r.contains("max_iterations")) c.refine.max_iterations = get_int(r["max_iterations"], "refine.max_iterations");
        if (r.contains("gradient_step")) c.refine.gradient_step = get_number(r["gradient_step"], "refine.gradient_step");
        if (r.contains("convergence_tol"))
            c.refine.convergence_tol = get_number(r["convergence_tol"], "refine.convergence_tol");
    }
    if (j.contains("constraints")) {
        const json& k = j["constraints"];
        reject_unknown(k, {"same_AR_all_regimes", "same_AR_and_intercept", "structural_pattern", "d1"}, "constraints");
        if (k.contains("same_AR_all_regimes"))
            c.constraints.same_AR_all_regimes = get_bool(k["same_AR_all_regimes"], "constraints.same_AR_all_regimes");
        if (k.contains("same_AR_and_intercept"))
            c.constraints.same_AR_and_intercept =
                get_bool(k["same_AR_and_intercept"], "constraints.same_AR_and_intercept");
        if (k.contains("structural_pattern")) {
            const int d1 = k.contains("d1") ? get_int(k["d1"], "constraints.d1") : -1;
            c.constraints.structural_pattern = pattern_from_json(k["structural_pattern"], d1);
            if (c.constraints.structural_pattern->d != d)
                throw ParseError("constraints.structural_pattern must be d x d (d = " + std::to_string(d) + ")");
        }
    }
    validate_config(c);
    return job;
}

GirfSpec girf_spec_from_json(const json& j, const Dimensions& dims) {
    if (!j.is_object()) throw ParseError("girf spec: expected a JSON object");
    reject_unknown(j,
                   {"shock", "magnitude", "horizon", "R1", "R2", "inner_reps", "outer_reps", "init", "quantiles",
                    "scaling", "accumulate", "antithetic", "seed", "threads"},
                   "girf spec");
    GirfSpec s;
    s.shock = get_int(require(j, "shock", "girf spec"), "shock");
    if (j.contains("magnitude")) s.magnitude = get_number(j["magnitude"], "magnitude");
    if (j.contains("horizon")) s.horizon = get_int(j["horizon"], "horizon");
    if (j.contains("R1")) s.inner_reps = get_int(j["R1"], "R1");
    if (j.contains("inner_reps")) s.inner_reps = get_int(j["inner_reps"], "inner_reps");
    if (j.contains("R2")) s.outer_reps = get_int(j["R2"], "R2");
    if (j.contains("outer_reps")) s.outer_reps = get_int(j["outer_reps"], "outer_reps");
    if (j.contains("init")) {
        const json& in = j["init"];
        if (in.is_string() && in.get<std::string>() == "stationary") {
            s.init = InitialCondition::stationary();
        } else if (in.is_object() && in.contains("regime")) {
            s.init = InitialCondition::regime_stationary(get_int(in["regime"], "init.regime") - 1);
        } else if (in.is_object() && in.contains("history")) {
            const Eigen::MatrixXd chron = matrix_from_json(in["history"], "init.history");
            s.init = InitialCondition::fixed(chron.colwise().reverse());
        } else {
            throw ParseError("init must be \"stationary\", {\"regime\": m} or {\"history\": [[...], ...]}");
        }
    }
    if (j.contains("quantiles")) {
        s.quantiles.clear();
        const Eigen::VectorXd q = vector_from_json(j["quantiles"], "quantiles");
        s.quantiles.assign(q.data(), q.data() + q.size());
    }
    if (j.contains("scaling")) {
        const json& sc = j["scaling"];
        reject_unknown(sc, {"variable", "target", "window"}, "scaling");
        GirfScaling g;
        g.variable = get_int(require(sc, "variable", "scaling"), "scaling.variable");
        g.target = get_number(require(sc, "target", "scaling"), "scaling.target");
        if (sc.contains("window")) g.window = get_int(sc["window"], "scaling.window");
        s.scaling = g;
    }
    if (j.contains("accumulate")) {
        if (!j["accumulate"].is_array()) throw ParseError("accumulate must be an array of variable indices");
        for (const auto& v : j["accumulate"]) s.accumulate.push_back(get_int(v, "accumulate entry"));
    }
    if (j.contains("antithetic")) s.antithetic = get_bool(j["antithetic"], "antithetic");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ParseError("seed must be a non-negative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("threads")) s.threads = get_int(j["threads"], "threads");
    validate_girf_spec(s, dims);
    return s;
}

}  // namespace sgmvar
