#include "sgmvar/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "sgmvar/error.hpp"

namespace sgmvar {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kCdfClamp = 1e-12;

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double mx = v.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((v.array() - mx).exp().sum());
}

// Column t of the result: log density of column t of X under N(mean, LL').
Eigen::VectorXd log_gaussian_columns(const Eigen::MatrixXd& centered, const Eigen::LLT<Eigen::MatrixXd>& llt,
                                     double logdet) {
    const Eigen::MatrixXd Z = llt.matrixL().solve(centered);
    const double c = -0.5 * (static_cast<double>(centered.rows()) * kLog2Pi + logdet);
    return (c - 0.5 * Z.colwise().squaredNorm().array()).transpose();
}

}  // namespace

LikelihoodEvaluator::LikelihoodEvaluator(const Eigen::MatrixXd& data, int p) : p_(p) {
    if (p < 1) throw DimensionError("likelihood: p must be positive");
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    if (n < p + 1) throw DimensionError("likelihood: data must have at least p + 1 rows");
    if (!data.allFinite()) throw InvalidParameters("likelihood: data contain non-finite values");
    const Eigen::Index T = n - p;
    obs_ = data.bottomRows(T);
    hist_.resize(T, d * p);
    for (Eigen::Index t = 0; t < T; ++t)
        for (int i = 0; i < p; ++i) hist_.block(t, i * d, 1, d) = data.row(t + p - 1 - i);
    init_.resize(d * p);
    for (int i = 0; i < p; ++i) init_.segment(i * d, d) = data.row(p - 1 - i).transpose();
}

Eigen::MatrixXd LikelihoodEvaluator::log_weights(const PreparedModel& model) const {
    const auto& dm = model.dims();
    if (dm.d != d() || dm.p != p_) throw DimensionError("likelihood: model dimensions do not match the data");
    const Eigen::Index T = obs_.rows();
    Eigen::MatrixXd logdens(T, dm.M);
    const Eigen::MatrixXd Xt = hist_.transpose();
    for (int m = 0; m < dm.M; ++m) {
        const Eigen::MatrixXd centered = Xt.colwise() - model.moments(m).mean_big;
        logdens.col(m) = log_gaussian_columns(centered, model.sigma_factor(m), model.sigma_logdet(m));
    }
    Eigen::MatrixXd out(T, dm.M);
    for (Eigen::Index t = 0; t < T; ++t)
        out.row(t) = normalize_log_weights(model.log_alpha(), logdens.row(t).transpose()).transpose();
    return out;
}

LogLikelihood LikelihoodEvaluator::evaluate(const PreparedModel& model, LikelihoodKind kind) const {
    const auto& dm = model.dims();
    const Eigen::MatrixXd lw = log_weights(model);
    const Eigen::Index T = obs_.rows();
    const Eigen::MatrixXd Xt = hist_.transpose();
    const Eigen::MatrixXd Yt = obs_.transpose();
    Eigen::MatrixXd terms(T, dm.M);
    for (int m = 0; m < dm.M; ++m) {
        Eigen::MatrixXd resid = Yt - model.ar_block(m) * Xt;
        resid.colwise() -= model.model().regimes[static_cast<std::size_t>(m)].phi0;
        terms.col(m) = lw.col(m) + log_gaussian_columns(resid, model.omega_factor(m), model.omega_logdet(m));
    }
    LogLikelihood out;
    out.per_observation.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) out.per_observation[t] = log_sum_exp(terms.row(t).transpose());
    out.initial_term = kind == LikelihoodKind::Exact ? model.log_stationary_mixture(init_) : 0.0;
    out.total = out.initial_term + out.per_observation.sum();
    return out;
}

LogLikelihood loglik(const ModelParameters& model, const Eigen::MatrixXd& data, LikelihoodKind kind) {
    PreparedModel pm(model);
    if (data.cols() != model.dims.d) throw DimensionError("likelihood: data must have d columns");
    return LikelihoodEvaluator(data, model.dims.p).evaluate(pm, kind);
}

LogLikelihood exact_loglik(const ModelParameters& model, const Eigen::MatrixXd& data) {
    return loglik(model, data, LikelihoodKind::Exact);
}

LogLikelihood conditional_loglik(const ModelParameters& model, const Eigen::MatrixXd& data) {
    return loglik(model, data, LikelihoodKind::Conditional);
}

QuantileResidualMatrix quantile_residuals(const ModelParameters& model, const Eigen::MatrixXd& data) {
    PreparedModel pm(model);
    const auto& dm = model.dims;
    if (data.cols() != dm.d) throw DimensionError("quantile_residuals: data must have d columns");
    const LikelihoodEvaluator ev(data, dm.p);
    const Eigen::MatrixXd lw = ev.log_weights(pm);
    const Eigen::Index T = ev.T();
    const int d = dm.d;
    const int M = dm.M;

    // Under regime m, z = L_m^{-1}(y - mu_m): coordinate k of y given coordinates
    // 0..k-1 is normal with standardized value z_k and standard deviation L_m(k,k).
    std::vector<Eigen::MatrixXd> Z(static_cast<std::size_t>(M));
    std::vector<Eigen::VectorXd> logdiag(static_cast<std::size_t>(M));
    const Eigen::MatrixXd Xt = ev.histories().transpose();
    const Eigen::MatrixXd Yt = ev.observations().transpose();
    for (int m = 0; m < M; ++m) {
        Eigen::MatrixXd resid = Yt - pm.ar_block(m) * Xt;
        resid.colwise() -= model.regimes[static_cast<std::size_t>(m)].phi0;
        Z[static_cast<std::size_t>(m)] = pm.omega_factor(m).matrixL().solve(resid);
        logdiag[static_cast<std::size_t>(m)] = pm.omega_factor(m).matrixLLT().diagonal().array().log();
    }

    const boost::math::normal_distribution<double> stdnorm;
    QuantileResidualMatrix out;
    out.values.resize(T, d);
    Eigen::VectorXd post(M);
    Eigen::VectorXd cdfs(M);
    for (Eigen::Index t = 0; t < T; ++t) {
        post = lw.row(t).transpose();
        for (int k = 0; k < d; ++k) {
            const double lse = log_sum_exp(post);
            double u = 0.0;
            for (int m = 0; m < M; ++m) {
                const double z = Z[static_cast<std::size_t>(m)](k, t);
                const double w = std::isfinite(post[m]) ? std::exp(post[m] - lse) : 0.0;
                u += w * 0.5 * std::erfc(-z / std::sqrt(2.0));
            }
            if (!(u >= kCdfClamp) || !(u <= 1.0 - kCdfClamp)) {
                u = std::clamp(std::isnan(u) ? 0.5 : u, kCdfClamp, 1.0 - kCdfClamp);
                ++out.clamped;
            }
            out.values(t, k) = boost::math::quantile(stdnorm, u);
            for (int m = 0; m < M; ++m) {
                const double z = Z[static_cast<std::size_t>(m)](k, t);
                post[m] += -0.5 * (kLog2Pi + z * z) - logdiag[static_cast<std::size_t>(m)][k];
            }
        }
    }
    return out;
}

}  // namespace sgmvar
