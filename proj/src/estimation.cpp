#include "sgmvar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <boost/math/distributions/chi_squared.hpp>

#include "sgmvar/error.hpp"
#include "sgmvar/model.hpp"
#include "sgmvar/parallel.hpp"
#include "sgmvar/rng.hpp"
#include "sgmvar/structural.hpp"

namespace sgmvar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool shared_intercept(const EstimationConstraints& c) { return c.same_AR_and_intercept; }
bool shared_ar(const EstimationConstraints& c) { return c.same_AR_and_intercept || c.same_AR_all_regimes; }

std::string idx(int i) { return std::to_string(i + 1); }

struct DataStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

DataStats data_stats(const Eigen::MatrixXd& data) {
    DataStats s;
    s.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - s.mean.transpose();
    const double denom = std::max<double>(1.0, static_cast<double>(data.rows() - 1));
    s.sd = (centered.colwise().squaredNorm().array() / denom).sqrt().transpose();
    for (Eigen::Index i = 0; i < s.sd.size(); ++i)
        if (!(s.sd[i] > 0.0)) s.sd[i] = 1.0;
    return s;
}

Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
    Eigen::MatrixXd G(d, d);
    for (int c = 0; c < d; ++c) G.col(c) = standard_normal(rng, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

std::vector<Eigen::MatrixXd> random_stable_ar(const Dimensions& dm, Rng& rng) {
    std::vector<Eigen::MatrixXd> A(static_cast<std::size_t>(dm.p));
    const double scale = 0.6 / (dm.p * std::sqrt(static_cast<double>(dm.d)));
    for (auto& a : A) {
        a.resize(dm.d, dm.d);
        for (int c = 0; c < dm.d; ++c) a.col(c) = scale * standard_normal(rng, dm.d);
    }
    for (int attempt = 0; attempt < 30 && !validate_stability(A).stable; ++attempt)
        for (auto& a : A) a *= 0.7;
    return A;
}

ModelParameters random_individual(const ParameterLayout& layout, const DataStats& stats, Rng& rng) {
    const Dimensions& dm = layout.dims();
    const auto& cons = layout.constraints();
    ModelParameters model;
    model.dims = dm;
    model.regimes.resize(static_cast<std::size_t>(dm.M));
    const Eigen::MatrixXd D = stats.sd.asDiagonal();

    const std::vector<Eigen::MatrixXd> shared_A = random_stable_ar(dm, rng);
    const Eigen::VectorXd shared_mu = stats.mean + 0.5 * stats.sd.cwiseProduct(standard_normal(rng, dm.d));
    for (int m = 0; m < dm.M; ++m) {
        Regime& r = model.regimes[static_cast<std::size_t>(m)];
        r.A = shared_ar(cons) ? shared_A : random_stable_ar(dm, rng);
        const Eigen::VectorXd mu =
            shared_intercept(cons) ? shared_mu
                                   : Eigen::VectorXd(stats.mean + 0.5 * stats.sd.cwiseProduct(standard_normal(rng, dm.d)));
        Eigen::MatrixXd Asum = Eigen::MatrixXd::Identity(dm.d, dm.d);
        for (const auto& a : r.A) Asum -= a;
        r.phi0 = Asum * mu;
        Eigen::MatrixXd G(dm.d, dm.d);
        for (int c = 0; c < dm.d; ++c) G.col(c) = standard_normal(rng, dm.d);
        const double level = std::exp(0.5 * standard_normal(rng, 1)[0]) * 0.5;
        Eigen::MatrixXd om = D * (G * G.transpose() / dm.d + 0.1 * Eigen::MatrixXd::Identity(dm.d, dm.d)) * D * level;
        r.omega = 0.5 * (om + om.transpose());
    }

    Eigen::VectorXd alpha(dm.M);
    std::exponential_distribution<double> ex(1.0);
    for (int m = 0; m < dm.M; ++m) alpha[m] = ex(rng);
    alpha /= alpha.sum();
    model.alpha = 0.8 * alpha.array() + 0.2 / dm.M;

    if (cons.structural_pattern) {
        const ConstraintPattern& pat = *cons.structural_pattern;
        StructuralParams s;
        s.pattern = pat;
        Eigen::LLT<Eigen::MatrixXd> llt(model.regimes[0].omega);
        s.W = Eigen::MatrixXd(llt.matrixL()) * random_orthogonal(dm.d, rng);
        for (int r = 0; r < dm.d; ++r)
            for (int c = 0; c < dm.d; ++c) {
                const Cell cell = pat.at(r, c);
                if (cell == Cell::Zero) s.W(r, c) = 0.0;
                if (cell == Cell::Positive) s.W(r, c) = std::abs(s.W(r, c)) + 1e-3 * stats.sd[r];
                if (cell == Cell::Negative) s.W(r, c) = -std::abs(s.W(r, c)) - 1e-3 * stats.sd[r];
            }
        for (int m = 1; m < dm.M; ++m)
            s.lambdas.push_back((0.8 * standard_normal(rng, dm.d)).array().exp().matrix());
        for (int m = 0; m < dm.M; ++m) model.regimes[static_cast<std::size_t>(m)].omega = s.omega(m);
        model.structural = std::move(s);
    }
    return model;
}

int tournament(const std::vector<double>& fitness, Rng& rng, int size = 3) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(fitness.size()) - 1);
    int best = pick(rng);
    for (int k = 1; k < size; ++k) {
        const int c = pick(rng);
        if (fitness[static_cast<std::size_t>(c)] > fitness[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

}  // namespace

void validate_config(const EstimationConfig& c) {
    auto bad = [](const std::string& m) { throw InvalidParameters("estimation config: " + m); };
    if (c.rounds < 1) bad("rounds must be positive");
    if (c.ga.population_size < 0) bad("population_size must be non-negative (0 selects the default)");
    if (c.ga.generations < 0) bad("generations must be non-negative");
    if (c.ga.elitism_count < 0) bad("elitism_count must be non-negative");
    if (c.ga.population_size > 0 && c.ga.population_size < 4) bad("population_size must be at least 4");
    if (c.ga.population_size > 0 && c.ga.elitism_count >= c.ga.population_size)
        bad("elitism_count must be smaller than population_size");
    if (!(c.ga.mutation_rate >= 0.0 && c.ga.mutation_rate <= 1.0)) bad("mutation_rate must lie in [0, 1]");
    if (!(c.ga.crossover_rate >= 0.0 && c.ga.crossover_rate <= 1.0)) bad("crossover_rate must lie in [0, 1]");
    if (c.refine.max_iterations < 0) bad("max_iterations must be non-negative");
    if (!(c.refine.gradient_step > 0.0)) bad("gradient_step must be positive");
    if (!(c.refine.convergence_tol > 0.0)) bad("convergence_tol must be positive");
    if (c.threads < 0) bad("threads must be non-negative");
}

ParameterLayout::ParameterLayout(const Dimensions& dims, const EstimationConstraints& constraints)
    : dims_(dims), constraints_(constraints) {
    if (dims.d < 1 || dims.p < 1 || dims.M < 1) throw DimensionError("parameter layout: d, p and M must be positive");
    const int d = dims.d;
    const bool structural = constraints.structural_pattern.has_value();
    if (structural && constraints.structural_pattern->d != d)
        throw DimensionError("parameter layout: structural pattern must be d x d");

    auto add_phi = [&](const std::string& tag) {
        for (int i = 0; i < d; ++i) labels_.push_back("phi0" + tag + "(" + idx(i) + ")");
    };
    auto add_ar = [&](const std::string& tag) {
        for (int l = 0; l < dims.p; ++l)
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r)
                    labels_.push_back("A" + idx(l) + tag + "(" + idx(r) + "," + idx(c) + ")");
    };
    auto begin_block = [&] { block_starts_.push_back(static_cast<int>(labels_.size())); };

    if (shared_intercept(constraints) || shared_ar(constraints)) {
        begin_block();
        if (shared_intercept(constraints)) add_phi("");
        add_ar("");
    }
    for (int m = 0; m < dims.M; ++m) {
        const std::string tag = "[" + idx(m) + "]";
        begin_block();
        if (!shared_intercept(constraints)) add_phi(tag);
        if (!shared_ar(constraints)) add_ar(tag);
        if (!structural)
            for (int c = 0; c < d; ++c)
                for (int r = c; r < d; ++r) labels_.push_back("omega" + tag + "(" + idx(r) + "," + idx(c) + ")");
    }
    if (structural) {
        begin_block();
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < d; ++r)
                if (constraints.structural_pattern->at(r, c) != Cell::Zero)
                    labels_.push_back("W(" + idx(r) + "," + idx(c) + ")");
        for (int m = 1; m < dims.M; ++m) {
            begin_block();
            for (int i = 0; i < d; ++i) labels_.push_back("lambda[" + idx(m) + "](" + idx(i) + ")");
        }
    }
    if (dims.M > 1) {
        begin_block();
        for (int m = 0; m + 1 < dims.M; ++m) labels_.push_back("alpha[" + idx(m) + "]");
    }
    // drop empty blocks (possible when every mean parameter is shared and covariances are structural)
    block_starts_.erase(std::unique(block_starts_.begin(), block_starts_.end()), block_starts_.end());
    size_ = static_cast<int>(labels_.size());
    if (!block_starts_.empty() && block_starts_.back() == size_) block_starts_.pop_back();
}

Eigen::VectorXd ParameterLayout::pack(const ModelParameters& model) const {
    if (!(model.dims == dims_)) throw DimensionError("pack: model dimensions do not match the layout");
    const int d = dims_.d;
    const bool structural = this->structural();
    if (structural && !model.structural) throw InvalidParameters("pack: structural layout needs W and lambdas");
    Eigen::VectorXd theta(size_);
    int k = 0;
    auto put_phi = [&](const Regime& r) {
        for (int i = 0; i < d; ++i) theta[k++] = r.phi0[i];
    };
    auto put_ar = [&](const Regime& r) {
        for (int l = 0; l < dims_.p; ++l)
            for (int c = 0; c < d; ++c)
                for (int rr = 0; rr < d; ++rr) theta[k++] = r.A[static_cast<std::size_t>(l)](rr, c);
    };
    if (shared_intercept(constraints_) || shared_ar(constraints_)) {
        if (shared_intercept(constraints_)) put_phi(model.regimes[0]);
        put_ar(model.regimes[0]);
    }
    for (int m = 0; m < dims_.M; ++m) {
        const Regime& r = model.regimes[static_cast<std::size_t>(m)];
        if (!shared_intercept(constraints_)) put_phi(r);
        if (!shared_ar(constraints_)) put_ar(r);
        if (!structural)
            for (int c = 0; c < d; ++c)
                for (int rr = c; rr < d; ++rr) theta[k++] = r.omega(rr, c);
    }
    if (structural) {
        const auto& pat = *constraints_.structural_pattern;
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < d; ++r)
                if (pat.at(r, c) != Cell::Zero) theta[k++] = model.structural->W(r, c);
        for (int m = 1; m < dims_.M; ++m)
            for (int i = 0; i < d; ++i) theta[k++] = model.structural->lambda(m)[i];
    }
    for (int m = 0; m + 1 < dims_.M; ++m) theta[k++] = model.alpha[m];
    return theta;
}

std::optional<ModelParameters> ParameterLayout::unpack(const Eigen::VectorXd& theta) const {
    if (theta.size() != size_) throw DimensionError("unpack: parameter vector has the wrong length");
    const int d = dims_.d;
    const bool structural = this->structural();
    ModelParameters model;
    model.dims = dims_;
    model.regimes.resize(static_cast<std::size_t>(dims_.M));
    int k = 0;
    auto get_phi = [&]() {
        Eigen::VectorXd v = theta.segment(k, d);
        k += d;
        return v;
    };
    auto get_ar = [&]() {
        std::vector<Eigen::MatrixXd> A(static_cast<std::size_t>(dims_.p), Eigen::MatrixXd(d, d));
        for (int l = 0; l < dims_.p; ++l)
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) A[static_cast<std::size_t>(l)](r, c) = theta[k++];
        return A;
    };
    Eigen::VectorXd phi_shared;
    std::vector<Eigen::MatrixXd> ar_shared;
    if (shared_intercept(constraints_) || shared_ar(constraints_)) {
        if (shared_intercept(constraints_)) phi_shared = get_phi();
        ar_shared = get_ar();
    }
    for (int m = 0; m < dims_.M; ++m) {
        Regime& r = model.regimes[static_cast<std::size_t>(m)];
        r.phi0 = shared_intercept(constraints_) ? phi_shared : get_phi();
        r.A = shared_ar(constraints_) ? ar_shared : get_ar();
        if (!structural) {
            r.omega.resize(d, d);
            for (int c = 0; c < d; ++c)
                for (int rr = c; rr < d; ++rr) {
                    r.omega(rr, c) = theta[k];
                    r.omega(c, rr) = theta[k];
                    ++k;
                }
        }
    }
    if (structural) {
        const auto& pat = *constraints_.structural_pattern;
        StructuralParams s;
        s.pattern = pat;
        s.W = Eigen::MatrixXd::Zero(d, d);
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < d; ++r)
                if (pat.at(r, c) != Cell::Zero) s.W(r, c) = theta[k++];
        for (int c = 0; c < d; ++c) {
            if (!pat.column_has_sign(c)) continue;
            bool as_is = true;
            bool flipped = true;
            for (int r = 0; r < d; ++r) {
                const double w = s.W(r, c);
                if (pat.at(r, c) == Cell::Positive) {
                    as_is = as_is && w > 0.0;
                    flipped = flipped && w < 0.0;
                } else if (pat.at(r, c) == Cell::Negative) {
                    as_is = as_is && w < 0.0;
                    flipped = flipped && w > 0.0;
                }
            }
            if (!as_is && !flipped) return std::nullopt;
            if (!as_is) s.W.col(c) *= -1.0;
        }
        for (int m = 1; m < dims_.M; ++m) {
            Eigen::VectorXd lam = theta.segment(k, d);
            k += d;
            if (!(lam.minCoeff() > 0.0)) return std::nullopt;
            s.lambdas.push_back(std::move(lam));
        }
        for (int m = 0; m < dims_.M; ++m) model.regimes[static_cast<std::size_t>(m)].omega = s.omega(m);
        model.structural = std::move(s);
    }
    model.alpha.resize(dims_.M);
    double rest = 1.0;
    for (int m = 0; m + 1 < dims_.M; ++m) {
        model.alpha[m] = theta[k++];
        if (!(model.alpha[m] > 0.0)) return std::nullopt;
        rest -= model.alpha[m];
    }
    if (!(rest > 0.0)) return std::nullopt;
    model.alpha[dims_.M - 1] = rest;
    return model;
}

FitObjective::FitObjective(const Eigen::MatrixXd& data, const ParameterLayout& layout, LikelihoodKind kind)
    : evaluator_(data, layout.dims().p), layout_(layout), kind_(kind) {
    if (data.cols() != layout.dims().d) throw DimensionError("estimation: data must have d columns");
}

double FitObjective::operator()(const Eigen::VectorXd& theta) const {
    if (!theta.allFinite()) return kNegInf;
    auto model = layout_.unpack(theta);
    if (!model) return kNegInf;
    auto pm = PreparedModel::try_create(*model);
    if (!pm) return kNegInf;
    const double v = evaluator_.evaluate(*pm, kind_).total;
    return std::isfinite(v) ? v : kNegInf;
}

GaResult genetic_search(const Eigen::MatrixXd& data, const Dimensions& dims, const EstimationConfig& config,
                        std::uint64_t seed, const std::vector<ModelParameters>* initial_population, int threads) {
    validate_config(config);
    const ParameterLayout layout(dims, config.constraints);
    const FitObjective objective(data, layout, config.likelihood_kind);
    const DataStats stats = data_stats(data);
    Rng rng = make_rng(seed, 0);
    const int dim = layout.size();
    int pop_size = config.ga.population_size > 0 ? config.ga.population_size : std::min(2 * dim, 500);
    pop_size = std::max(pop_size, 1);
    const unsigned nthreads = static_cast<unsigned>(std::max(threads, 0));

    std::vector<Eigen::VectorXd> pop;
    std::vector<double> fit;
    if (initial_population) {
        for (const auto& m : *initial_population) {
            pop.push_back(layout.pack(m));
            fit.push_back(objective(pop.back()));
        }
        pop_size = std::max<int>(pop_size, static_cast<int>(pop.size()));
    }
    int attempts = 0;
    const int max_attempts = 50 * pop_size + 100;
    while (static_cast<int>(pop.size()) < pop_size && attempts < max_attempts) {
        const int need = pop_size - static_cast<int>(pop.size());
        std::vector<Eigen::VectorXd> batch;
        for (int i = 0; i < need; ++i) batch.push_back(layout.pack(random_individual(layout, stats, rng)));
        attempts += need;
        std::vector<double> f(batch.size());
        parallel_for(batch.size(), nthreads, [&](std::size_t i) { f[i] = objective(batch[i]); });
        for (std::size_t i = 0; i < batch.size(); ++i)
            if (std::isfinite(f[i])) {
                pop.push_back(std::move(batch[i]));
                fit.push_back(f[i]);
            }
    }
    if (std::none_of(fit.begin(), fit.end(), [](double v) { return std::isfinite(v); }))
        throw NumericalError("genetic_search: no feasible individual after initialization retries");

    GaResult out;
    out.initial_fitness = fit;
    const int n = static_cast<int>(pop.size());
    const std::vector<int>& starts = layout.block_starts();

    for (int gen = 0; gen < config.ga.generations; ++gen) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fit[static_cast<std::size_t>(a)] > fit[static_cast<std::size_t>(b)]; });

        Eigen::VectorXd spread = Eigen::VectorXd::Zero(dim);
        {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
            int feasible = 0;
            for (int i = 0; i < n; ++i)
                if (std::isfinite(fit[static_cast<std::size_t>(i)])) {
                    mean += pop[static_cast<std::size_t>(i)];
                    ++feasible;
                }
            mean /= std::max(feasible, 1);
            for (int i = 0; i < n; ++i)
                if (std::isfinite(fit[static_cast<std::size_t>(i)]))
                    spread += (pop[static_cast<std::size_t>(i)] - mean).cwiseAbs2();
            spread = (spread / std::max(feasible, 1)).cwiseSqrt();
        }

        std::vector<Eigen::VectorXd> next;
        std::vector<double> next_fit;
        const int elites = std::min(config.ga.elitism_count, n);
        for (int e = 0; e < elites; ++e) {
            next.push_back(pop[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]);
            next_fit.push_back(fit[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]);
        }
        const std::size_t first_child = next.size();
        std::normal_distribution<double> z;
        while (static_cast<int>(next.size()) < n) {
            const auto& a = pop[static_cast<std::size_t>(tournament(fit, rng))];
            const auto& b = pop[static_cast<std::size_t>(tournament(fit, rng))];
            Eigen::VectorXd child = a;
            if (starts.size() > 1 && uniform01(rng) < config.ga.crossover_rate) {
                std::uniform_int_distribution<std::size_t> cut_pick(1, starts.size() - 1);
                const int cut = starts[cut_pick(rng)];
                child.tail(dim - cut) = b.tail(dim - cut);
            }
            for (int i = 0; i < dim; ++i) {
                if (uniform01(rng) < config.ga.mutation_rate) {
                    const double scale = std::max(spread[i], 1e-3 * std::max(1.0, std::abs(child[i])));
                    child[i] += scale * z(rng);
                }
            }
            next.push_back(std::move(child));
            next_fit.push_back(kNegInf);
        }
        parallel_for(next.size() - first_child, nthreads,
                     [&](std::size_t i) { next_fit[first_child + i] = objective(next[first_child + i]); });
        pop = std::move(next);
        fit = std::move(next_fit);
        out.generations_run = gen + 1;
    }

    const auto best = std::max_element(fit.begin(), fit.end()) - fit.begin();
    out.best_fitness = fit[static_cast<std::size_t>(best)];
    out.best = *layout.unpack(pop[static_cast<std::size_t>(best)]);
    return out;
}

RefineResult refine(const ModelParameters& theta0, const Eigen::MatrixXd& data, const EstimationConfig& config) {
    validate_config(config);
    const ParameterLayout layout(theta0.dims, config.constraints);
    const FitObjective objective(data, layout, config.likelihood_kind);
    const Eigen::VectorXd x0 = layout.pack(theta0);
    if (!std::isfinite(objective(x0))) throw InvalidParameters("refine: starting point is infeasible");
    BfgsOptions opts;
    opts.max_iterations = config.refine.max_iterations;
    opts.gradient_step = config.refine.gradient_step;
    opts.convergence_tol = config.refine.convergence_tol;
    const BfgsResult res = maximize_bfgs(objective, x0, opts);
    RefineResult out;
    out.theta = *layout.unpack(res.x);
    out.theta.names = theta0.names;
    out.loglik = res.value;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.gradient_norm = res.gradient_norm;
    out.trace = res.trace;
    return out;
}

StdErrors standard_errors(const ModelParameters& theta_hat, const Eigen::MatrixXd& data,
                          const EstimationConstraints& constraints, LikelihoodKind kind) {
    const ParameterLayout layout(theta_hat.dims, constraints);
    const FitObjective objective(data, layout, kind);
    const Eigen::VectorXd x = layout.pack(theta_hat);
    Eigen::MatrixXd H = numeric_hessian(objective, x, 1e-4);
    H = 0.5 * (H + H.transpose());
    StdErrors out;
    out.kind = kind;
    out.labels = layout.labels();
    const Eigen::Index n = x.size();
    out.values = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    out.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    if (!H.allFinite()) return out;
    const Eigen::MatrixXd negH = -H;
    Eigen::LLT<Eigen::MatrixXd> llt(negH);
    if (llt.info() != Eigen::Success) return out;
    out.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    out.values = out.covariance.diagonal().cwiseSqrt();
    out.hessian_pd = out.values.allFinite();
    return out;
}

EstimationResult fit(const Eigen::MatrixXd& data, const Dimensions& dims, const EstimationConfig& config) {
    validate_config(config);
    if (data.cols() != dims.d) throw DimensionError("fit: data must have d columns");
    if (data.rows() < dims.p + 10 * dims.M)
        throw InvalidParameters("fit: need at least p + 10 M observations (" + std::to_string(dims.p + 10 * dims.M) +
                                ") but the data have " + std::to_string(data.rows()));
    const ParameterLayout layout(dims, config.constraints);
    EstimationResult result;
    const int T = static_cast<int>(data.rows()) - dims.p;
    if (T < 10 * layout.size()) {
        std::ostringstream os;
        os << "sample size " << T << " is below 10 times the parameter count (" << layout.size() << ")";
        result.warnings.push_back(os.str());
    }

    struct Outcome {
        bool ok = false;
        RefineResult refined;
        double ga_loglik = kNegInf;
        std::string error;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(config.rounds));
    const unsigned outer = config.rounds > 1 ? static_cast<unsigned>(config.threads) : 1u;
    const int inner = config.rounds > 1 ? 1 : config.threads;
    std::vector<ModelParameters> warm;
    if (config.warm_start) warm.push_back(*config.warm_start);

    parallel_for(outcomes.size(), outer, [&](std::size_t r) {
        Outcome& o = outcomes[r];
        try {
            Rng seeder = make_rng(config.seed, r);
            const std::uint64_t round_seed = seeder();
            GaResult ga = genetic_search(data, dims, config, round_seed, warm.empty() ? nullptr : &warm, inner);
            o.ga_loglik = ga.best_fitness;
            o.refined = refine(ga.best, data, config);
            o.ok = std::isfinite(o.refined.loglik);
        } catch (const Error& e) {
            o.error = e.what();
        }
    });

    int best = -1;
    for (int r = 0; r < config.rounds; ++r) {
        const Outcome& o = outcomes[static_cast<std::size_t>(r)];
        RoundResult row;
        row.round = r + 1;
        row.ga_loglik = o.ga_loglik;
        row.loglik = o.ok ? o.refined.loglik : kNegInf;
        row.converged = o.ok && o.refined.converged;
        result.rounds_table.push_back(row);
        if (!o.ok) {
            result.warnings.push_back("round " + std::to_string(r + 1) + " failed: " + o.error);
            continue;
        }
        if (best < 0 || o.refined.loglik > outcomes[static_cast<std::size_t>(best)].refined.loglik) best = r;
    }
    if (best < 0) throw NumericalError("fit: no feasible candidate found in any round");
    result.best_round = best + 1;
    result.converged = outcomes[static_cast<std::size_t>(best)].refined.converged;

    ModelParameters theta = order_by_alpha(outcomes[static_cast<std::size_t>(best)].refined.theta);
    if (theta.structural) {
        theta.structural = normalize_W(*theta.structural);
        for (int m = 0; m < dims.M; ++m) theta.regimes[static_cast<std::size_t>(m)].omega = theta.structural->omega(m);
    }
    try {
        validate_model(theta, true);
    } catch (const InvalidParameters&) {
        theta.ordering_waived = true;
    }
    result.theta_hat = theta;
    result.loglik = loglik(theta, data, config.likelihood_kind);
    result.parameter_count = layout.size();
    result.observations = config.likelihood_kind == LikelihoodKind::Exact ? static_cast<int>(data.rows()) : T;
    if (config.compute_std_errors)
        result.std_errors =
            standard_errors(theta, data, config.constraints, config.std_error_likelihood.value_or(config.likelihood_kind));
    return result;
}

InformationCriteria information_criteria(double loglik_total, int k, int n) {
    if (n <= 1) throw InvalidParameters("information_criteria: n must exceed 1");
    if (k < 0) throw InvalidParameters("information_criteria: k must be non-negative");
    const double nn = static_cast<double>(n);
    const double base = -2.0 * loglik_total;
    return {(base + 2.0 * k) / nn, (base + k * std::log(nn)) / nn, (base + 2.0 * k * std::log(std::log(nn))) / nn};
}

TestResult lr_test(double loglik_unrestricted, double loglik_restricted, int df) {
    if (df < 1) throw InvalidParameters("lr_test: df must be at least 1");
    const double diff = loglik_unrestricted - loglik_restricted;
    if (diff < -1e-8)
        throw InvalidParameters("lr_test: restricted log-likelihood exceeds the unrestricted one (models not nested)");
    TestResult out;
    out.df = df;
    out.statistic = std::max(0.0, 2.0 * diff);
    const boost::math::chi_squared_distribution<double> chi(df);
    out.p_value = out.statistic > 0.0 ? boost::math::cdf(boost::math::complement(chi, out.statistic)) : 1.0;
    return out;
}

TestResult wald_test(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& covariance, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r) {
    const Eigen::Index n = theta_hat.size();
    if (covariance.rows() != n || covariance.cols() != n || R.cols() != n || R.rows() != r.size() || R.rows() < 1)
        throw DimensionError("wald_test: inconsistent dimensions");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
    const int rank = static_cast<int>(lu.rank());
    if (rank != R.rows()) throw InvalidParameters("wald_test: R must have full row rank");
    const Eigen::MatrixXd V = R * covariance * R.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (V + V.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("wald_test: R Cov R' is singular");
    const Eigen::VectorXd diff = R * theta_hat - r;
    TestResult out;
    out.df = rank;
    out.statistic = diff.dot(llt.solve(diff));
    const boost::math::chi_squared_distribution<double> chi(rank);
    out.p_value = out.statistic > 0.0 ? boost::math::cdf(boost::math::complement(chi, out.statistic)) : 1.0;
    return out;
}

}  // namespace sgmvar
