#pragma once

#include <string>

#include "json.hpp"
#include "sgmvar/estimation.hpp"
#include "sgmvar/girf.hpp"
#include "sgmvar/types.hpp"

namespace sgmvar {

/// Model file layout: {d, p, M, regimes: [{phi0, A: [p matrices], omega}],
/// alpha, structural?: {W, lambdas, pattern, d1?}}. Matrices are row-major
/// nested arrays; the pattern is a d x d grid of "*", "+", "-", "0".
nlohmann::json model_to_json(const ModelParameters& model);
ModelParameters model_from_json(const nlohmann::json& j);

ModelParameters load_model(const std::string& path);
void save_model(const ModelParameters& model, const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json pattern_to_json(const ConstraintPattern& p);
ConstraintPattern pattern_from_json(const nlohmann::json& grid, int d1);

/// Estimation config: {p, M, rounds, seed, likelihood, ga: {...}, refine: {...},
/// constraints: {same_AR_all_regimes, same_AR_and_intercept, structural_pattern, d1}}.
/// Dimensions d is taken from the data; p and M are read here.
struct EstimationJob {
    Dimensions dims;
    EstimationConfig config;
};
EstimationJob estimation_job_from_json(const nlohmann::json& j, int d);

GirfSpec girf_spec_from_json(const nlohmann::json& j, const Dimensions& dims);

}  // namespace sgmvar
