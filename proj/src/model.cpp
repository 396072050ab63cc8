#include "sgmvar/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sgmvar/error.hpp"
#include "sgmvar/structural.hpp"

namespace sgmvar {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

enum class Problem { Dimension, Invalid, Unstable };

struct ModelProblem {
    Problem kind;
    std::string message;
};

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(b.norm(), std::numeric_limits<double>::min());
    return (a - b).norm() / scale;
}

std::optional<ModelProblem> check_model(const ModelParameters& model, bool require_ordering) {
    const auto& dm = model.dims;
    auto fail = [](Problem k, const std::string& msg) { return std::optional<ModelProblem>{{k, msg}}; };
    if (dm.d < 1 || dm.p < 1 || dm.M < 1) return fail(Problem::Dimension, "d, p and M must be positive");
    if (static_cast<int>(model.regimes.size()) != dm.M)
        return fail(Problem::Dimension, "number of regimes does not match M");
    if (model.alpha.size() != dm.M) return fail(Problem::Dimension, "alpha must have M entries");

    for (int m = 0; m < dm.M; ++m) {
        const Regime& r = model.regimes[m];
        const std::string tag = "regime " + std::to_string(m + 1) + ": ";
        if (r.phi0.size() != dm.d) return fail(Problem::Dimension, tag + "phi0 must have length d");
        if (static_cast<int>(r.A.size()) != dm.p)
            return fail(Problem::Dimension, tag + "expected p coefficient matrices");
        for (const auto& a : r.A)
            if (a.rows() != dm.d || a.cols() != dm.d)
                return fail(Problem::Dimension, tag + "coefficient matrices must be d x d");
        if (r.omega.rows() != dm.d || r.omega.cols() != dm.d)
            return fail(Problem::Dimension, tag + "omega must be d x d");
        if (!r.omega.allFinite() || !r.phi0.allFinite())
            return fail(Problem::Invalid, tag + "non-finite parameters");
        for (const auto& a : r.A)
            if (!a.allFinite()) return fail(Problem::Invalid, tag + "non-finite parameters");
        const double asym = (r.omega - r.omega.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * std::max(1.0, r.omega.cwiseAbs().maxCoeff()))
            return fail(Problem::Invalid, tag + "omega is not symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(r.omega);
        if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
            return fail(Problem::Invalid, tag + "omega is not positive definite");
        const auto stab = validate_stability(r.A);
        if (!stab.stable) {
            std::ostringstream os;
            os << tag << "unstable (companion spectral radius " << stab.spectral_radius << ")";
            return fail(Problem::Unstable, os.str());
        }
    }

    if (!model.alpha.allFinite() || model.alpha.minCoeff() <= 0.0)
        return fail(Problem::Invalid, "alpha entries must be strictly positive");
    if (std::abs(model.alpha.sum() - 1.0) > 1e-12) return fail(Problem::Invalid, "alpha must sum to one");
    if (require_ordering && !model.ordering_waived) {
        for (int m = 1; m < dm.M; ++m)
            if (!(model.alpha[m] > model.alpha[m - 1]))
                return fail(Problem::Invalid, "alpha must satisfy alpha_M > ... > alpha_1");
    }

    if (model.structural) {
        try {
            validate_structural(*model.structural, dm.d, dm.M);
        } catch (const Error& e) {
            return fail(Problem::Invalid, std::string("structural parameters: ") + e.what());
        }
        for (int m = 0; m < dm.M; ++m) {
            if (relative_frobenius(model.structural->omega(m), model.regimes[m].omega) > 1e-10)
                return fail(Problem::Invalid, "regime " + std::to_string(m + 1) +
                                                  ": omega does not match the W/lambda decomposition");
        }
    }
    return std::nullopt;
}

[[noreturn]] void raise(const ModelProblem& p) {
    switch (p.kind) {
        case Problem::Dimension: throw DimensionError(p.message);
        case Problem::Unstable: throw InstabilityError(p.message);
        case Problem::Invalid: break;
    }
    throw InvalidParameters(p.message);
}

double llt_logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Eigen::MatrixXd companion_matrix(const std::vector<Eigen::MatrixXd>& A) {
    if (A.empty()) throw DimensionError("companion_matrix: at least one coefficient matrix required");
    const Eigen::Index d = A.front().rows();
    const Eigen::Index p = static_cast<Eigen::Index>(A.size());
    for (const auto& a : A)
        if (a.rows() != d || a.cols() != d)
            throw DimensionError("companion_matrix: coefficient matrices must be square and equal-sized");
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(d * p, d * p);
    for (Eigen::Index i = 0; i < p; ++i) F.block(0, i * d, d, d) = A[static_cast<std::size_t>(i)];
    if (p > 1) F.block(d, 0, d * (p - 1), d * (p - 1)).setIdentity();
    return F;
}

StabilityResult validate_stability(const std::vector<Eigen::MatrixXd>& A) {
    const Eigen::MatrixXd F = companion_matrix(A);
    double radius = 0.0;
    if (F.rows() == 1) {
        radius = std::abs(F(0, 0));
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(F, false);
        if (es.info() != Eigen::Success) return {false, std::numeric_limits<double>::infinity()};
        radius = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    return {radius < 1.0 - kStabilityMargin, radius};
}

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q) {
    const Eigen::Index n = F.rows();
    Eigen::MatrixXd S;
    if (n <= 60) {
        const Eigen::Index n2 = n * n;
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n2, n2);
        // vec(F S F') = (F kron F) vec(S), column-major vec
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double f = F(i, j);
                if (f != 0.0) K.block(i * n, j * n, n, n).noalias() -= f * F;
            }
        Eigen::Map<const Eigen::VectorXd> q(Q.data(), n2);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
        Eigen::VectorXd s = lu.solve(q);
        S = Eigen::Map<Eigen::MatrixXd>(s.data(), n, n);
    } else {
        S = Q;
        Eigen::MatrixXd Fk = F;
        for (int it = 0; it < 200; ++it) {
            Eigen::MatrixXd inc = Fk * S * Fk.transpose();
            S += inc;
            Fk = Fk * Fk;
            if (inc.norm() <= 1e-16 * S.norm()) break;
        }
    }
    return 0.5 * (S + S.transpose());
}

StationaryMoments stationary_moments(const Regime& regime, const Dimensions& dims) {
    const auto stab = validate_stability(regime.A);
    if (!stab.stable) {
        std::ostringstream os;
        os << "stationary_moments: regime is not stable (spectral radius " << stab.spectral_radius << ")";
        throw InstabilityError(os.str());
    }
    const int d = dims.d;
    const int p = dims.p;
    Eigen::MatrixXd Asum = Eigen::MatrixXd::Identity(d, d);
    for (const auto& a : regime.A) Asum -= a;
    StationaryMoments out;
    out.mu = Asum.partialPivLu().solve(regime.phi0);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(d * p, d * p);
    Q.topLeftCorner(d, d) = regime.omega;
    out.sigma_big = solve_discrete_lyapunov(companion_matrix(regime.A), Q);
    out.mean_big = out.mu.replicate(p, 1);
    return out;
}

void validate_model(const ModelParameters& model, bool require_ordering) {
    if (auto problem = check_model(model, require_ordering)) raise(*problem);
}

Eigen::VectorXd stack_history(const Eigen::MatrixXd& history) {
    Eigen::VectorXd out(history.size());
    const Eigen::Index d = history.cols();
    for (Eigen::Index i = 0; i < history.rows(); ++i) out.segment(i * d, d) = history.row(i).transpose();
    return out;
}

std::optional<std::string> PreparedModel::build(const ModelParameters& model, PreparedModel& out) {
    if (auto problem = check_model(model, false)) return problem->message;
    out.model_ = model;
    const auto& dm = model.dims;
    out.regimes_.resize(static_cast<std::size_t>(dm.M));
    for (int m = 0; m < dm.M; ++m) {
        const Regime& r = model.regimes[m];
        RegimeCache& c = out.regimes_[static_cast<std::size_t>(m)];
        c.moments = stationary_moments(r, dm);
        c.ar_block.resize(dm.d, dm.dp());
        for (int i = 0; i < dm.p; ++i) c.ar_block.block(0, i * dm.d, dm.d, dm.d) = r.A[i];
        c.sigma_llt.compute(c.moments.sigma_big);
        if (c.sigma_llt.info() != Eigen::Success)
            return "regime " + std::to_string(m + 1) + ": stationary covariance is not positive definite";
        c.omega_llt.compute(r.omega);
        c.sigma_logdet = llt_logdet(c.sigma_llt);
        c.omega_logdet = llt_logdet(c.omega_llt);
        if (!std::isfinite(c.sigma_logdet) || !std::isfinite(c.omega_logdet))
            return "regime " + std::to_string(m + 1) + ": degenerate covariance";
    }
    out.log_alpha_ = model.alpha.array().log();
    return std::nullopt;
}

PreparedModel::PreparedModel(const ModelParameters& model) {
    validate_model(model);
    if (auto why = build(model, *this)) throw NumericalError(*why);
}

std::optional<PreparedModel> PreparedModel::try_create(const ModelParameters& model, std::string* reason) {
    PreparedModel pm;
    if (auto why = build(model, pm)) {
        if (reason) *reason = *why;
        return std::nullopt;
    }
    return pm;
}

double PreparedModel::log_stationary_density(int m, const Eigen::VectorXd& stacked) const {
    const RegimeCache& c = regimes_[static_cast<std::size_t>(m)];
    const Eigen::VectorXd z = c.sigma_llt.matrixL().solve(stacked - c.moments.mean_big);
    return -0.5 * (static_cast<double>(stacked.size()) * kLog2Pi + c.sigma_logdet + z.squaredNorm());
}

double PreparedModel::log_stationary_mixture(const Eigen::VectorXd& stacked) const {
    const int M = model_.dims.M;
    Eigen::VectorXd terms(M);
    for (int m = 0; m < M; ++m) terms[m] = log_alpha_[m] + log_stationary_density(m, stacked);
    const double mx = terms.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((terms.array() - mx).exp().sum());
}

Eigen::VectorXd PreparedModel::log_mixing_weights(const Eigen::VectorXd& stacked) const {
    const int M = model_.dims.M;
    Eigen::VectorXd logdens(M);
    for (int m = 0; m < M; ++m) logdens[m] = log_stationary_density(m, stacked);
    return normalize_log_weights(log_alpha_, logdens);
}

Eigen::VectorXd PreparedModel::conditional_mean(int m, const Eigen::VectorXd& stacked) const {
    return model_.regimes[static_cast<std::size_t>(m)].phi0 +
           regimes_[static_cast<std::size_t>(m)].ar_block * stacked;
}

double PreparedModel::log_error_density(int m, const Eigen::VectorXd& residual) const {
    const RegimeCache& c = regimes_[static_cast<std::size_t>(m)];
    const Eigen::VectorXd z = c.omega_llt.matrixL().solve(residual);
    return -0.5 * (static_cast<double>(residual.size()) * kLog2Pi + c.omega_logdet + z.squaredNorm());
}

Eigen::VectorXd PreparedModel::draw_regime_history(int m, Rng& rng) const {
    const RegimeCache& c = regimes_[static_cast<std::size_t>(m)];
    const Eigen::VectorXd z = standard_normal(rng, c.moments.mean_big.size());
    return c.moments.mean_big + c.sigma_llt.matrixL() * z;
}

Eigen::VectorXd PreparedModel::draw_stationary_history(Rng& rng) const {
    const int m = categorical(model_.alpha, uniform01(rng));
    return draw_regime_history(m, rng);
}

Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& log_alpha, const Eigen::VectorXd& log_density) {
    const Eigen::Index M = log_alpha.size();
    Eigen::VectorXd lw(M);
    bool all_small = true;
    for (Eigen::Index m = 0; m < M; ++m) {
        const double ld = std::isnan(log_density[m]) ? -std::numeric_limits<double>::infinity() : log_density[m];
        lw[m] = log_alpha[m] + ld;
        if (ld >= kLogDensityUnderflow) all_small = false;
    }
    Eigen::Index best = 0;
    const double mx = lw.maxCoeff(&best);
    if (all_small || !std::isfinite(mx)) {
        Eigen::VectorXd out = Eigen::VectorXd::Constant(M, -std::numeric_limits<double>::infinity());
        out[best] = 0.0;
        return out;
    }
    const double lse = mx + std::log((lw.array() - mx).exp().sum());
    return lw.array() - lse;
}

MixingWeights mixing_weights(const Eigen::MatrixXd& history, const PreparedModel& model) {
    const auto& dm = model.dims();
    if (history.rows() != dm.p || history.cols() != dm.d)
        throw DimensionError("mixing_weights: history must be p x d");
    return {model.log_mixing_weights(stack_history(history)).array().exp()};
}

MixingWeights mixing_weights(const Eigen::MatrixXd& history, const ModelParameters& model) {
    return mixing_weights(history, PreparedModel(model));
}

Eigen::MatrixXd mixed_covariance(const ModelParameters& model, const Eigen::VectorXd& weights) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(model.dims.d, model.dims.d);
    for (int m = 0; m < model.dims.M; ++m) out += weights[m] * model.regimes[m].omega;
    return out;
}

ConditionalMoments conditional_moments(const Eigen::MatrixXd& history, const PreparedModel& model) {
    const auto& dm = model.dims();
    ConditionalMoments out;
    out.weights = mixing_weights(history, model);
    const Eigen::VectorXd x = stack_history(history);
    out.means.resize(dm.M, dm.d);
    for (int m = 0; m < dm.M; ++m) out.means.row(m) = model.conditional_mean(m, x).transpose();
    out.omega_u = mixed_covariance(model.model(), out.weights.weights);
    return out;
}

ConditionalMoments conditional_moments(const Eigen::MatrixXd& history, const ModelParameters& model) {
    return conditional_moments(history, PreparedModel(model));
}

InitialCondition InitialCondition::fixed(Eigen::MatrixXd history) {
    InitialCondition ic;
    ic.kind = Kind::Fixed;
    ic.history = std::move(history);
    return ic;
}

InitialCondition InitialCondition::stationary() { return {}; }

InitialCondition InitialCondition::regime_stationary(int m) {
    InitialCondition ic;
    ic.kind = Kind::RegimeStationary;
    ic.regime = m;
    return ic;
}

Eigen::MatrixXd SimulatedPath::full_data() const {
    Eigen::MatrixXd out(presample.rows() + observations.rows(), observations.cols());
    out << presample, observations;
    return out;
}

SimulatedPath simulate(const ModelParameters& model, int T, const InitialCondition& init, std::uint64_t seed) {
    if (T < 0) throw DimensionError("simulate: negative length");
    PreparedModel pm(model);
    const auto& dm = model.dims;
    Rng rng = make_rng(seed, 0);

    Eigen::VectorXd x;
    switch (init.kind) {
        case InitialCondition::Kind::Fixed:
            if (init.history.rows() != dm.p || init.history.cols() != dm.d)
                throw DimensionError("simulate: initial history must be p x d");
            x = stack_history(init.history);
            break;
        case InitialCondition::Kind::RegimeStationary:
            if (init.regime < 0 || init.regime >= dm.M)
                throw DimensionError("simulate: initial regime out of range");
            x = pm.draw_regime_history(init.regime, rng);
            break;
        case InitialCondition::Kind::StationaryMixture:
            x = pm.draw_stationary_history(rng);
            break;
    }

    SimulatedPath path;
    path.seed = seed;
    path.presample.resize(dm.p, dm.d);
    for (int i = 0; i < dm.p; ++i) path.presample.row(dm.p - 1 - i) = x.segment(i * dm.d, dm.d).transpose();
    path.observations.resize(T, dm.d);
    path.regimes.resize(T);
    path.weights.resize(T, dm.M);

    std::vector<Eigen::MatrixXd> chol(static_cast<std::size_t>(dm.M));
    for (int m = 0; m < dm.M; ++m) chol[static_cast<std::size_t>(m)] = pm.omega_factor(m).matrixL();

    for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd w = pm.log_mixing_weights(x).array().exp();
        const int m = categorical(w, uniform01(rng));
        const Eigen::VectorXd z = standard_normal(rng, dm.d);
        const Eigen::VectorXd y = pm.conditional_mean(m, x) + chol[static_cast<std::size_t>(m)] * z;
        path.observations.row(t) = y.transpose();
        path.regimes[t] = m + 1;
        path.weights.row(t) = w.transpose();
        if (dm.p > 1) {
            Eigen::VectorXd shifted(x.size());
            shifted.head(dm.d) = y;
            shifted.tail(x.size() - dm.d) = x.head(x.size() - dm.d);
            x = std::move(shifted);
        } else {
            x = y;
        }
    }
    return path;
}

std::vector<RegimeSummaryRow> regime_summary(const ModelParameters& model) {
    validate_model(model);
    std::vector<RegimeSummaryRow> rows;
    for (int m = 0; m < model.dims.M; ++m) {
        const auto mom = stationary_moments(model.regimes[m], model.dims);
        RegimeSummaryRow row;
        row.regime = m + 1;
        row.alpha = model.alpha[m];
        row.means = mom.mu;
        row.variances = mom.sigma_big.topLeftCorner(model.dims.d, model.dims.d).diagonal();
        rows.push_back(std::move(row));
    }
    return rows;
}

int parameter_count(const Dimensions& dims) {
    const int d = dims.d;
    return dims.M * (d * d * dims.p + d + d * (d + 1) / 2) + dims.M - 1;
}

ModelParameters permute_regimes(const ModelParameters& model, const std::vector<int>& order) {
    const int M = model.dims.M;
    std::vector<int> check = order;
    std::sort(check.begin(), check.end());
    std::vector<int> iota(static_cast<std::size_t>(M));
    std::iota(iota.begin(), iota.end(), 0);
    if (check != iota) throw DimensionError("permute_regimes: order is not a permutation of the regimes");

    ModelParameters out = model;
    for (int k = 0; k < M; ++k) {
        out.regimes[static_cast<std::size_t>(k)] = model.regimes[static_cast<std::size_t>(order[k])];
        out.alpha[k] = model.alpha[order[k]];
    }
    if (model.structural && order[0] != 0) {
        const StructuralParams& s = *model.structural;
        const Eigen::VectorXd ref = s.lambda(order[0]);
        StructuralParams ns;
        ns.pattern = s.pattern;
        ns.W = s.W * ref.cwiseSqrt().asDiagonal();
        for (int k = 1; k < M; ++k) ns.lambdas.push_back(s.lambda(order[k]).cwiseQuotient(ref));
        for (int k = 0; k < M; ++k) out.regimes[static_cast<std::size_t>(k)].omega = ns.omega(k);
        out.structural = std::move(ns);
    } else if (model.structural) {
        StructuralParams ns = *model.structural;
        for (int k = 1; k < M; ++k) ns.lambdas[static_cast<std::size_t>(k - 1)] = model.structural->lambda(order[k]);
        out.structural = std::move(ns);
    }
    return out;
}

ModelParameters order_by_alpha(const ModelParameters& model) {
    std::vector<int> order(static_cast<std::size_t>(model.dims.M));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return model.alpha[a] < model.alpha[b]; });
    return permute_regimes(model, order);
}

}  // namespace sgmvar
