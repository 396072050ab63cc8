#include "sgmvar/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgmvar/diagnostics.hpp"
#include "sgmvar/error.hpp"
#include "sgmvar/estimation.hpp"
#include "sgmvar/girf.hpp"
#include "sgmvar/likelihood.hpp"
#include "sgmvar/model.hpp"
#include "sgmvar/model_io.hpp"
#include "sgmvar/series.hpp"
#include "sgmvar/structural.hpp"

namespace sgmvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string data;
    std::string model;
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool quiet = false;
    int length = 0;
    std::string init = "stationary";
    int lags = 20;
    double rel_tol = 1e-8;
    std::optional<int> d1;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> variable_names(const ModelParameters& model) {
    if (static_cast<int>(model.names.size()) == model.dims.d) return model.names;
    std::vector<std::string> names;
    for (int i = 0; i < model.dims.d; ++i) names.push_back("y" + std::to_string(i + 1));
    return names;
}

const char* kind_name(LikelihoodKind k) { return k == LikelihoodKind::Exact ? "exact" : "conditional"; }

class Runner {
public:
    Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

    void log(const std::string& msg) const {
        if (!o_.quiet) err_ << msg << '\n';
    }

    fs::path output(const std::string& name) const {
        const fs::path dir(o_.out);
        fs::create_directories(dir);
        const fs::path target = dir / name;
        for (const std::string& in : {o_.data, o_.model, o_.config}) {
            if (in.empty()) continue;
            std::error_code ec;
            if (fs::exists(target) && fs::equivalent(target, fs::path(in), ec))
                throw UsageError("refusing to overwrite input file '" + in + "'; choose another --out directory");
        }
        return target;
    }

    void need(const std::string& value, const std::string& flag) const {
        if (value.empty()) throw UsageError(flag + " is required for this command");
    }

    int estimate() const {
        need(o_.data, "--data");
        need(o_.config, "--config");
        const SeriesFrame frame = load_csv(o_.data);
        EstimationJob job = estimation_job_from_json(read_json_file(o_.config), frame.d());
        if (o_.seed) job.config.seed = *o_.seed;
        if (o_.threads > 0) job.config.threads = o_.threads;
        log("estimating GMVAR(" + std::to_string(job.dims.p) + "," + std::to_string(job.dims.M) + ") with " +
            std::to_string(job.config.rounds) + " rounds on " + std::to_string(frame.T()) + " observations");
        EstimationResult res = fit(frame.values, job.dims, job.config);
        res.theta_hat.names = frame.names;
        for (const auto& w : res.warnings) log("warning: " + w);

        const fs::path model_path = output("model.json");
        const fs::path report_path = output("report.json");
        save_model(res.theta_hat, model_path.string());

        json report;
        report["loglik"] = {{"total", res.loglik.total},
                            {"initial_term", res.loglik.initial_term},
                            {"kind", kind_name(job.config.likelihood_kind)}};
        report["parameter_count"] = res.parameter_count;
        report["observations"] = res.observations;
        const InformationCriteria ic = information_criteria(res.loglik.total, res.parameter_count, res.observations);
        report["criteria"] = {{"aic", ic.aic}, {"bic", ic.bic}, {"hqic", ic.hqic}};
        report["best_round"] = res.best_round;
        report["converged"] = res.converged;
        report["seed"] = job.config.seed;
        json rounds = json::array();
        for (const auto& r : res.rounds_table)
            rounds.push_back({{"round", r.round}, {"ga_loglik", r.ga_loglik}, {"loglik", r.loglik}, {"converged", r.converged}});
        report["rounds"] = std::move(rounds);
        if (res.std_errors) {
            const ParameterLayout layout(job.dims, job.config.constraints);
            const Eigen::VectorXd theta = layout.pack(res.theta_hat);
            json values = json::array();
            for (int i = 0; i < layout.size(); ++i) {
                json row{{"parameter", layout.labels()[static_cast<std::size_t>(i)]}, {"estimate", theta[i]}};
                const double se = res.std_errors->values[i];
                row["std_error"] = std::isfinite(se) ? json(se) : json(nullptr);
                values.push_back(std::move(row));
            }
            report["std_errors"] = {{"likelihood", kind_name(res.std_errors->kind)},
                                    {"hessian_pd", res.std_errors->hessian_pd},
                                    {"values", std::move(values)}};
        }
        report["warnings"] = res.warnings;
        write_json_file(report, report_path.string());
        log("log-likelihood " + format_double(res.loglik.total) + " (round " + std::to_string(res.best_round) + ")");
        out_ << model_path.string() << '\n' << report_path.string() << '\n';
        return kExitOk;
    }

    int simulate() const {
        need(o_.model, "--model");
        if (o_.length < 1) throw UsageError("--length must be a positive integer");
        const ModelParameters model = load_model(o_.model);
        const auto& dm = model.dims;
        InitialCondition init;
        if (o_.init == "stationary") {
            init = InitialCondition::stationary();
        } else if (o_.init.rfind("regime:", 0) == 0) {
            int m = 0;
            try {
                m = std::stoi(o_.init.substr(7));
            } catch (const std::exception&) {
                throw UsageError("--init regime:<m> needs an integer regime");
            }
            if (m < 1 || m > dm.M) throw UsageError("--init regime index must lie in 1..M");
            init = InitialCondition::regime_stationary(m - 1);
        } else if (o_.init == "history") {
            need(o_.data, "--data (for --init history)");
            const SeriesFrame frame = load_csv(o_.data);
            if (frame.d() != dm.d || frame.T() < dm.p) throw UsageError("--data must have d columns and at least p rows");
            init = InitialCondition::fixed(frame.values.bottomRows(dm.p).colwise().reverse());
        } else {
            throw UsageError("--init must be stationary, regime:<m> or history");
        }
        const std::uint64_t seed = o_.seed.value_or(1);
        const SimulatedPath path = sgmvar::simulate(model, o_.length, init, seed);

        SeriesFrame frame;
        frame.index_name = "t";
        frame.names = variable_names(model);
        frame.values = path.full_data();
        for (int t = 1 - dm.p; t <= o_.length; ++t) frame.index.push_back(std::to_string(t));
        const fs::path path_csv = output("path.csv");
        save_csv(frame, path_csv.string());

        SeriesFrame reg;
        reg.index_name = "t";
        reg.names.push_back("regime");
        for (int m = 0; m < dm.M; ++m) reg.names.push_back("alpha_" + std::to_string(m + 1));
        reg.values.resize(o_.length, dm.M + 1);
        reg.values.col(0) = path.regimes.cast<double>();
        reg.values.rightCols(dm.M) = path.weights;
        for (int t = 1; t <= o_.length; ++t) reg.index.push_back(std::to_string(t));
        const fs::path reg_csv = output("regimes.csv");
        save_csv(reg, reg_csv.string());
        out_ << path_csv.string() << '\n' << reg_csv.string() << '\n';
        return kExitOk;
    }

    int girf() const {
        need(o_.model, "--model");
        need(o_.config, "--spec");
        const ModelParameters model = load_model(o_.model);
        GirfSpec spec = girf_spec_from_json(read_json_file(o_.config), model.dims);
        if (o_.seed) spec.seed = *o_.seed;
        if (o_.threads > 0) spec.threads = o_.threads;
        log("estimating GIRF of shock " + std::to_string(spec.shock) + " with R1 = " + std::to_string(spec.inner_reps) +
            ", R2 = " + std::to_string(spec.outer_reps));
        const GirfResult res = sgmvar::estimate_girf(model, spec);

        std::vector<std::string> series = variable_names(model);
        for (int m = 0; m < model.dims.M; ++m) series.push_back("alpha_" + std::to_string(m + 1));
        const int d = model.dims.d;
        const fs::path target = output("girf.csv");
        std::ofstream f(target, std::ios::binary);
        if (!f) throw ParseError("cannot write '" + target.string() + "'");
        f << "horizon,series,statistic,value\n";
        for (int h = 0; h < res.point.rows(); ++h)
            for (std::size_t c = 0; c < series.size(); ++c) {
                const int ci = static_cast<int>(c);
                const double point = ci < d ? res.point(h, ci) : res.weights_point(h, ci - d);
                f << h << ',' << series[c] << ",mean," << format_double(point) << '\n';
                for (const auto& b : res.bands)
                    f << h << ',' << series[c] << ",q" << format_double(b.quantile) << ','
                      << format_double(b.values(h, ci)) << '\n';
                f << h << ',' << series[c] << ",mc_se," << format_double(res.mc_std_error(h, ci)) << '\n';
            }
        if (!f) throw ParseError("failed writing '" + target.string() + "'");
        out_ << target.string() << '\n';
        return kExitOk;
    }

    int diagnose() const {
        need(o_.model, "--model");
        need(o_.data, "--data");
        const ModelParameters model = load_model(o_.model);
        const SeriesFrame frame = load_csv(o_.data);
        if (frame.d() != model.dims.d) throw DimensionError("data have " + std::to_string(frame.d()) + " columns, model has d = " +
                                                            std::to_string(model.dims.d));
        const QuantileResidualMatrix qr = quantile_residuals(model, frame.values);
        const int p = model.dims.p;

        SeriesFrame res;
        res.index_name = frame.index_name;
        res.names = frame.names;
        res.index.assign(frame.index.begin() + p, frame.index.end());
        res.values = qr.values;
        const fs::path res_csv = output("residuals.csv");
        save_csv(res, res_csv.string());

        const CorrelogramSet plain = correlogram(qr.values, o_.lags, false);
        const CorrelogramSet sq = correlogram(qr.values, o_.lags, true);
        const fs::path cor_csv = output("correlograms.csv");
        std::ofstream f(cor_csv, std::ios::binary);
        if (!f) throw ParseError("cannot write '" + cor_csv.string() + "'");
        f << "kind,lag,row,col,value\n";
        auto coverage = [&](const CorrelogramSet& c, const char* kind) {
            int inside = 0;
            int total = 0;
            for (int k = 0; k <= c.max_lag; ++k)
                for (int i = 0; i < frame.d(); ++i)
                    for (int j = 0; j < frame.d(); ++j) {
                        const double v = c.acf_ccf[static_cast<std::size_t>(k)](i, j);
                        f << kind << ',' << k << ',' << frame.names[static_cast<std::size_t>(i)] << ','
                          << frame.names[static_cast<std::size_t>(j)] << ',' << format_double(v) << '\n';
                        if (k >= 1) {
                            ++total;
                            if (std::abs(v) <= c.bounds95) ++inside;
                        }
                    }
            return total > 0 ? static_cast<double>(inside) / total : 1.0;
        };
        const double cov_plain = coverage(plain, "residual");
        const double cov_sq = coverage(sq, "squared");
        if (!f) throw ParseError("failed writing '" + cor_csv.string() + "'");

        json summary;
        const LogLikelihood ll = exact_loglik(model, frame.values);
        summary["loglik"] = {{"exact", ll.total}, {"conditional", ll.total - ll.initial_term}};
        summary["observations"] = qr.values.rows();
        summary["clamped_cdf_values"] = qr.clamped;
        summary["bounds95"] = plain.bounds95;
        summary["bounds99"] = plain.bounds99;
        summary["coverage95"] = {{"residual", cov_plain}, {"squared", cov_sq}};
        json shape = json::array();
        const auto ss = shape_summary(qr.values);
        for (std::size_t i = 0; i < ss.size(); ++i)
            shape.push_back({{"variable", frame.names[i]},
                             {"mean", ss[i].mean},
                             {"variance", ss[i].variance},
                             {"skewness", ss[i].skewness},
                             {"excess_kurtosis", ss[i].excess_kurtosis}});
        summary["shape"] = std::move(shape);
        json regimes = json::array();
        for (const auto& row : regime_summary(model))
            regimes.push_back({{"regime", row.regime},
                               {"alpha", row.alpha},
                               {"means", std::vector<double>(row.means.data(), row.means.data() + row.means.size())},
                               {"variances",
                                std::vector<double>(row.variances.data(), row.variances.data() + row.variances.size())}});
        summary["regimes"] = std::move(regimes);
        const fs::path sum_json = output("summary.json");
        write_json_file(summary, sum_json.string());
        out_ << res_csv.string() << '\n' << cor_csv.string() << '\n' << sum_json.string() << '\n';
        return kExitOk;
    }

    int decompose() const {
        need(o_.model, "--model");
        ModelParameters model = load_model(o_.model);
        if (model.dims.M != 2) throw InvalidParameters("decompose needs a two-regime model (M = 2)");
        model.structural = normalize_W(decompose_two_regime(model.regimes[0].omega, model.regimes[1].omega));
        validate_model(model);
        const fs::path target = output("model.json");
        save_model(model, target.string());
        const auto report = check_assumption1(model.structural->lambdas);
        if (!report.assumption1_holds) log("warning: some eigenvalues lambda_2i coincide; columns are not unique");
        out_ << target.string() << '\n';
        return kExitOk;
    }

    int transform() const {
        need(o_.data, "--data");
        need(o_.config, "--config");
        const SeriesFrame frame = load_csv(o_.data);
        const TransformManifest manifest = TransformManifest::load(o_.config);
        const SeriesFrame result = apply_transforms(frame, manifest);
        const fs::path target = output("data_out.csv");
        save_csv(result, target.string());
        out_ << target.string() << '\n';
        return kExitOk;
    }

    int check_id() const {
        need(o_.model, "--model");
        const ModelParameters model = load_model(o_.model);
        if (!model.structural) throw InvalidParameters("check-id needs a model with a structural block");
        ConstraintPattern pattern = model.structural->pattern;
        if (pattern.d == 0) throw InvalidParameters("check-id needs a constraint pattern in the structural block");
        if (o_.d1) pattern.d1 = *o_.d1;
        const DistinctnessReport report = check_assumption1(model.structural->lambdas, o_.rel_tol);
        const IdentificationResult res = check_identification(pattern, report);

        json j;
        j["verdict"] = to_string(res.verdict);
        j["failed_condition"] = res.failed_condition ? json(*res.failed_condition) : json(nullptr);
        j["tied_pair"] = res.tied_pair ? json({res.tied_pair->first, res.tied_pair->second}) : json(nullptr);
        j["message"] = res.message;
        j["d1"] = pattern.d1;
        j["assumption1_holds"] = report.assumption1_holds;
        json cols = json::array();
        for (const auto& c : res.columns)
            cols.push_back({{"column", c.column},
                            {"distinct", c.distinct},
                            {"has_sign", c.has_sign},
                            {"indistinguishable_from", c.indistinguishable_from}});
        j["columns"] = std::move(cols);
        const fs::path target = output("identification.json");
        write_json_file(j, target.string());
        out_ << to_string(res.verdict) << ": " << res.message << '\n';
        return kExitOk;
    }

private:
    const Options& o_;
    std::ostream& out_;
    std::ostream& err_;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
}

void add_seed(CLI::App* sub, Options& o) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&o](const std::uint64_t& s) { o.seed = s; }, "Random seed");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Structural Gaussian mixture VAR toolkit", "sgmvar"};
    app.require_subcommand(1);

    auto* est = app.add_subcommand("estimate", "Fit a GMVAR model (writes model.json, report.json)");
    est->add_option("--data", o.data, "Data CSV")->check(CLI::ExistingFile)->required();
    est->add_option("--config,--spec", o.config, "Estimation config JSON")->check(CLI::ExistingFile)->required();
    add_seed(est, o);
    add_common(est, o);

    auto* sim = app.add_subcommand("simulate", "Simulate a path (writes path.csv, regimes.csv)");
    sim->add_option("--model", o.model, "Model JSON")->check(CLI::ExistingFile)->required();
    sim->add_option("--length", o.length, "Number of observations")->required()->check(CLI::PositiveNumber);
    sim->add_option("--init", o.init, "stationary | regime:<m> | history (last p rows of --data)")->capture_default_str();
    sim->add_option("--data", o.data, "Data CSV for --init history")->check(CLI::ExistingFile);
    add_seed(sim, o);
    add_common(sim, o);

    auto* gi = app.add_subcommand("girf", "Generalized impulse responses (writes girf.csv)");
    gi->add_option("--model", o.model, "Model JSON with structural block")->check(CLI::ExistingFile)->required();
    gi->add_option("--spec,--config", o.config, "GIRF spec JSON")->check(CLI::ExistingFile)->required();
    add_seed(gi, o);
    add_common(gi, o);

    auto* dg = app.add_subcommand("diagnose", "Quantile residual diagnostics");
    dg->add_option("--model", o.model, "Model JSON")->check(CLI::ExistingFile)->required();
    dg->add_option("--data", o.data, "Data CSV")->check(CLI::ExistingFile)->required();
    dg->add_option("--lags", o.lags, "Largest correlogram lag")->capture_default_str()->check(CLI::NonNegativeNumber);
    add_common(dg, o);

    auto* dc = app.add_subcommand("decompose", "Add the W/lambda decomposition to a two-regime model");
    dc->add_option("--model", o.model, "Reduced-form model JSON (M = 2)")->check(CLI::ExistingFile)->required();
    add_common(dc, o);

    auto* tr = app.add_subcommand("transform", "Apply a transform manifest (writes data_out.csv)");
    tr->add_option("--data", o.data, "Data CSV")->check(CLI::ExistingFile)->required();
    tr->add_option("--config,--spec", o.config, "Transform manifest JSON")->check(CLI::ExistingFile)->required();
    add_common(tr, o);

    auto* ci = app.add_subcommand("check-id", "Check shock identification (writes identification.json)");
    ci->add_option("--model", o.model, "Model JSON with structural pattern")->check(CLI::ExistingFile)->required();
    ci->add_option("--rel-tol", o.rel_tol, "Relative eigenvalue tie tolerance")->capture_default_str();
    ci->add_option_function<int>("--d1", [&o](const int& v) { o.d1 = v; }, "Number of identified shocks");
    add_common(ci, o);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const Runner runner(o, out, err);
    try {
        if (est->parsed()) return runner.estimate();
        if (sim->parsed()) return runner.simulate();
        if (gi->parsed()) return runner.girf();
        if (dg->parsed()) return runner.diagnose();
        if (dc->parsed()) return runner.decompose();
        if (tr->parsed()) return runner.transform();
        if (ci->parsed()) return runner.check_id();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    err << app.help();
    return kExitUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace sgmvar::cli
