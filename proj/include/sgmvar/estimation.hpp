#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgmvar/likelihood.hpp"
#include "sgmvar/optimize.hpp"
#include "sgmvar/types.hpp"

namespace sgmvar {

struct EstimationConstraints {
    bool same_AR_all_regimes = false;
    bool same_AR_and_intercept = false;
    std::optional<ConstraintPattern> structural_pattern;
};

struct GaConfig {
    int population_size = 0;  // 0: min(2 * dim(theta), 500)
    int generations = 200;
    double mutation_rate = 0.05;
    double crossover_rate = 0.9;
    int elitism_count = 2;
};

struct RefineConfig {
    int max_iterations = 300;
    double gradient_step = 1e-6;
    double convergence_tol = 1e-5;
};

struct EstimationConfig {
    int rounds = 10;
    GaConfig ga;
    RefineConfig refine;
    LikelihoodKind likelihood_kind = LikelihoodKind::Exact;
    EstimationConstraints constraints;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency
    bool compute_std_errors = true;
    /// Likelihood whose Hessian gives the standard errors; defaults to likelihood_kind.
    std::optional<LikelihoodKind> std_error_likelihood;
    /// Extra starting point placed in every round's initial population.
    std::optional<ModelParameters> warm_start;
};

/// Checks counts and rates; throws InvalidParameters.
void validate_config(const EstimationConfig& config);

/// Maps a parameter vector theta to ModelParameters and back under the
/// requested constraints. Layout: shared mean block (if any), one block per
/// regime (phi0, vec A_1..A_p, vech Omega), then vec(W) without zero cells and
/// lambda_2..lambda_M for structural models, then alpha_1..alpha_{M-1}.
class ParameterLayout {
public:
    ParameterLayout(const Dimensions& dims, const EstimationConstraints& constraints);

    int size() const { return size_; }
    const Dimensions& dims() const { return dims_; }
    bool structural() const { return constraints_.structural_pattern.has_value(); }
    const EstimationConstraints& constraints() const { return constraints_; }
    /// Start offsets of the blocks used as crossover points.
    const std::vector<int>& block_starts() const { return block_starts_; }
    const std::vector<std::string>& labels() const { return labels_; }

    Eigen::VectorXd pack(const ModelParameters& model) const;
    /// nullopt when theta is structurally infeasible (alpha off the simplex,
    /// non-positive lambda, sign constraints unsatisfiable by a column flip).
    /// Stability and definiteness are left to PreparedModel.
    std::optional<ModelParameters> unpack(const Eigen::VectorXd& theta) const;

private:
    Dimensions dims_;
    EstimationConstraints constraints_;
    int size_ = 0;
    std::vector<int> block_starts_;
    std::vector<std::string> labels_;
};

/// Log-likelihood of theta, -infinity when infeasible.
class FitObjective {
public:
    FitObjective(const Eigen::MatrixXd& data, const ParameterLayout& layout, LikelihoodKind kind);
    double operator()(const Eigen::VectorXd& theta) const;
    const ParameterLayout& layout() const { return layout_; }
    const LikelihoodEvaluator& evaluator() const { return evaluator_; }
    LikelihoodKind kind() const { return kind_; }

private:
    LikelihoodEvaluator evaluator_;
    ParameterLayout layout_;
    LikelihoodKind kind_;
};

struct GaResult {
    ModelParameters best;
    double best_fitness = 0.0;
    std::vector<double> initial_fitness;
    int generations_run = 0;
};

/// Genetic search for starting values. `initial_population`, when given,
/// replaces the random initial population (padded with random draws if short).
GaResult genetic_search(const Eigen::MatrixXd& data, const Dimensions& dims, const EstimationConfig& config,
                        std::uint64_t seed, const std::vector<ModelParameters>* initial_population = nullptr,
                        int threads = 1);

struct RefineResult {
    ModelParameters theta;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<double> trace;
};

RefineResult refine(const ModelParameters& theta0, const Eigen::MatrixXd& data, const EstimationConfig& config);

struct StdErrors {
    Eigen::VectorXd values;  // NaN where unavailable
    std::vector<std::string> labels;
    Eigen::MatrixXd covariance;  // inverse negative Hessian (NaN if not PD)
    bool hessian_pd = false;
    LikelihoodKind kind = LikelihoodKind::Exact;
};

StdErrors standard_errors(const ModelParameters& theta_hat, const Eigen::MatrixXd& data,
                          const EstimationConstraints& constraints, LikelihoodKind kind);

struct RoundResult {
    int round = 0;
    double ga_loglik = 0.0;
    double loglik = 0.0;
    bool converged = false;
};

struct EstimationResult {
    ModelParameters theta_hat;
    LogLikelihood loglik;
    std::vector<RoundResult> rounds_table;
    std::optional<StdErrors> std_errors;
    bool converged = false;
    int best_round = 0;
    int parameter_count = 0;
    int observations = 0;  // n used for information criteria
    std::vector<std::string> warnings;
};

/// Two-phase estimation: per round genetic_search then refine; best round wins
/// (lowest index on ties). Output regimes are relabeled so alpha increases
/// with the regime index.
EstimationResult fit(const Eigen::MatrixXd& data, const Dimensions& dims, const EstimationConfig& config);

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
    double hqic = 0.0;
};

/// Criteria divided by the number of observations n.
InformationCriteria information_criteria(double loglik_total, int k, int n);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 0;
};

TestResult lr_test(double loglik_unrestricted, double loglik_restricted, int df);

/// (R theta - r)' [R Cov R']^{-1} (R theta - r) against chi-square(rank R).
TestResult wald_test(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& covariance, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r);

}  // namespace sgmvar
