#pragma once

#include <Eigen/Core>

#include "sgmvar/model.hpp"
#include "sgmvar/types.hpp"

namespace sgmvar {

enum class LikelihoodKind { Exact, Conditional };

struct LogLikelihood {
    double total = 0.0;
    Eigen::VectorXd per_observation;  // l_t for t = 1..T
    double initial_term = 0.0;        // 0 for the conditional likelihood
};

/// Precomputed data windows for repeated likelihood evaluation.
/// `data` holds p initial rows followed by T observations, oldest first.
class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(const Eigen::MatrixXd& data, int p);

    int T() const { return static_cast<int>(obs_.rows()); }
    int p() const { return p_; }
    int d() const { return static_cast<int>(obs_.cols()); }
    /// Row t: stacked history (y_{t-1}', ..., y_{t-p}')' of observation t.
    const Eigen::MatrixXd& histories() const { return hist_; }
    const Eigen::MatrixXd& observations() const { return obs_; }
    const Eigen::VectorXd& initial_block() const { return init_; }

    LogLikelihood evaluate(const PreparedModel& model, LikelihoodKind kind) const;
    /// Log mixing weights of every observation (T x M).
    Eigen::MatrixXd log_weights(const PreparedModel& model) const;

private:
    int p_;
    Eigen::MatrixXd hist_;
    Eigen::MatrixXd obs_;
    Eigen::VectorXd init_;
};

LogLikelihood exact_loglik(const ModelParameters& model, const Eigen::MatrixXd& data);
LogLikelihood conditional_loglik(const ModelParameters& model, const Eigen::MatrixXd& data);
LogLikelihood loglik(const ModelParameters& model, const Eigen::MatrixXd& data, LikelihoodKind kind);

struct QuantileResidualMatrix {
    Eigen::MatrixXd values;  // T x d
    int clamped = 0;         // CDF values pushed into [1e-12, 1 - 1e-12]
};

/// Sequential-conditioning quantile residuals in the data's column order.
QuantileResidualMatrix quantile_residuals(const ModelParameters& model, const Eigen::MatrixXd& data);

}  // namespace sgmvar
