#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "sgmvar/rng.hpp"
#include "sgmvar/types.hpp"

namespace sgmvar {

inline constexpr double kStabilityMargin = 1e-8;

struct StabilityResult {
    bool stable = false;
    double spectral_radius = 0.0;
};

/// Companion matrix [A_1 ... A_p; I 0] of a VAR(p).
Eigen::MatrixXd companion_matrix(const std::vector<Eigen::MatrixXd>& A);

/// Stable iff the companion spectral radius is below 1 - kStabilityMargin.
StabilityResult validate_stability(const std::vector<Eigen::MatrixXd>& A);

/// Stationary moments of a single regime. `sigma_big` is the covariance of
/// (y_t', ..., y_{t-p+1}')', `mean_big` the stacked mean 1_p (x) mu.
struct StationaryMoments {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma_big;
    Eigen::VectorXd mean_big;
};

StationaryMoments stationary_moments(const Regime& regime, const Dimensions& dims);

/// Solves S = F S F' + Q for S. Direct vectorized solve for small systems,
/// doubling iteration for large ones.
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q);

/// Throws InvalidParameters / InstabilityError / DimensionError on the first
/// violated invariant. Ordering of alpha is checked only when requested.
void validate_model(const ModelParameters& model, bool require_ordering = false);

/// Stacks a p x d history (row 0 = y_{t-1}, row p-1 = y_{t-p}) into a dp vector.
Eigen::VectorXd stack_history(const Eigen::MatrixXd& history);

/// Validated model together with the per-regime factorizations every
/// evaluation needs. Construction is the expensive part; queries are cheap.
class PreparedModel {
public:
    explicit PreparedModel(const ModelParameters& model);
    /// Returns nullopt (with a reason) instead of throwing on invalid parameters.
    static std::optional<PreparedModel> try_create(const ModelParameters& model,
                                                   std::string* reason = nullptr);

    const ModelParameters& model() const { return model_; }
    const Dimensions& dims() const { return model_.dims; }
    const StationaryMoments& moments(int m) const { return regimes_[m].moments; }

    /// log n_dp(x; 1_p (x) mu_m, Sigma_m) for a stacked history x.
    double log_stationary_density(int m, const Eigen::VectorXd& stacked) const;
    /// log of sum_m alpha_m n_dp(x; ...): the stationary mixture density.
    double log_stationary_mixture(const Eigen::VectorXd& stacked) const;
    /// log alpha_{m,t} for all m given a stacked history.
    Eigen::VectorXd log_mixing_weights(const Eigen::VectorXd& stacked) const;
    Eigen::VectorXd conditional_mean(int m, const Eigen::VectorXd& stacked) const;
    /// log n_d(y; mean, Omega_m).
    double log_error_density(int m, const Eigen::VectorXd& residual) const;

    const Eigen::MatrixXd& ar_block(int m) const { return regimes_[m].ar_block; }
    const Eigen::LLT<Eigen::MatrixXd>& sigma_factor(int m) const { return regimes_[m].sigma_llt; }
    const Eigen::LLT<Eigen::MatrixXd>& omega_factor(int m) const { return regimes_[m].omega_llt; }
    double sigma_logdet(int m) const { return regimes_[m].sigma_logdet; }
    double omega_logdet(int m) const { return regimes_[m].omega_logdet; }
    const Eigen::VectorXd& log_alpha() const { return log_alpha_; }

    /// Draws a stacked history from regime m's stationary distribution.
    Eigen::VectorXd draw_regime_history(int m, Rng& rng) const;
    /// Draws a stacked history from the stationary mixture (regime label first).
    Eigen::VectorXd draw_stationary_history(Rng& rng) const;

private:
    struct RegimeCache {
        StationaryMoments moments;
        Eigen::MatrixXd ar_block;  // d x dp, [A_1 ... A_p]
        Eigen::LLT<Eigen::MatrixXd> sigma_llt;
        Eigen::LLT<Eigen::MatrixXd> omega_llt;
        double sigma_logdet = 0.0;
        double omega_logdet = 0.0;
    };
    PreparedModel() = default;
    static std::optional<std::string> build(const ModelParameters& model, PreparedModel& out);

    ModelParameters model_;
    std::vector<RegimeCache> regimes_;
    Eigen::VectorXd log_alpha_;
};

/// Log-density threshold below which a regime density counts as underflowed.
inline constexpr double kLogDensityUnderflow = -745.0;

/// Turns log alpha_m and log n_dp values into log mixing weights. If every
/// log density is below kLogDensityUnderflow, the regime with the largest
/// weighted log density receives weight one.
Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& log_alpha,
                                      const Eigen::VectorXd& log_density);

/// Mixing weights alpha_{m,t} for a p x d history (row 0 = y_{t-1}).
MixingWeights mixing_weights(const Eigen::MatrixXd& history, const ModelParameters& model);
MixingWeights mixing_weights(const Eigen::MatrixXd& history, const PreparedModel& model);

struct ConditionalMoments {
    Eigen::MatrixXd means;  // M x d, row m = mu_{m,t}
    Eigen::MatrixXd omega_u;
    MixingWeights weights;
};

ConditionalMoments conditional_moments(const Eigen::MatrixXd& history, const ModelParameters& model);
ConditionalMoments conditional_moments(const Eigen::MatrixXd& history, const PreparedModel& model);

/// Ω_{u,t} = sum_m w_m Omega_m for given weights.
Eigen::MatrixXd mixed_covariance(const ModelParameters& model, const Eigen::VectorXd& weights);

/// Starting point of a simulation.
struct InitialCondition {
    enum class Kind { Fixed, StationaryMixture, RegimeStationary };
    Kind kind = Kind::StationaryMixture;
    Eigen::MatrixXd history;  // p x d, row 0 = y_{t-1}; used when Fixed
    int regime = 0;           // 0-based; used when RegimeStationary

    static InitialCondition fixed(Eigen::MatrixXd history);
    static InitialCondition stationary();
    static InitialCondition regime_stationary(int m);
};

struct SimulatedPath {
    Eigen::MatrixXd presample;     // p x d, chronological (oldest first)
    Eigen::MatrixXd observations;  // T x d
    Eigen::VectorXi regimes;       // 1-based labels
    Eigen::MatrixXd weights;       // T x M
    std::uint64_t seed = 0;

    /// Presample rows followed by the observations, oldest first.
    Eigen::MatrixXd full_data() const;
};

SimulatedPath simulate(const ModelParameters& model, int T, const InitialCondition& init,
                       std::uint64_t seed);

struct RegimeSummaryRow {
    int regime = 0;  // 1-based
    double alpha = 0.0;
    Eigen::VectorXd means;
    Eigen::VectorXd variances;
};

/// Marginal stationary means and variances of each regime.
std::vector<RegimeSummaryRow> regime_summary(const ModelParameters& model);

/// Number of free parameters of an unconstrained GMVAR(p, M):
/// M(d^2 p + d + d(d+1)/2) + M - 1.
int parameter_count(const Dimensions& dims);

/// Reorders regimes so that new regime k is old regime order[k]. Structural
/// parameters are re-expressed relative to the new first regime.
ModelParameters permute_regimes(const ModelParameters& model, const std::vector<int>& order);

/// Relabels regimes so that alpha is increasing in the regime index
/// (alpha_M > ... > alpha_1).
ModelParameters order_by_alpha(const ModelParameters& model);

}  // namespace sgmvar
