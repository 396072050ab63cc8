#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sgmvar/model.hpp"
#include "sgmvar/types.hpp"

namespace sgmvar {

struct GirfScaling {
    int variable = 1;     // 1-based
    double target = 1.0;  // peak value c
    int window = 4;       // horizons 0..window-1
};

struct GirfSpec {
    int shock = 1;           // 1-based structural shock j
    double magnitude = 1.0;  // delta_j
    int horizon = 20;        // H
    int inner_reps = 1000;   // R1
    int outer_reps = 1;      // R2 (ignored for a fixed history)
    InitialCondition init;
    std::vector<double> quantiles{0.05, 0.95};
    std::optional<GirfScaling> scaling;
    std::vector<int> accumulate;  // 1-based variables reported as cumulative sums
    /// Inner repetitions in pairs (eps, -eps) sharing the regime uniforms.
    bool antithetic = false;
    bool keep_per_init = false;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct GirfBand {
    double quantile = 0.0;
    Eigen::MatrixXd values;  // (H+1) x (d+M): variables then mixing weights
};

struct GirfResult {
    Eigen::MatrixXd point;          // (H+1) x d
    Eigen::MatrixXd weights_point;  // (H+1) x M, response of alpha_{m,t+h}
    std::vector<GirfBand> bands;
    std::vector<Eigen::MatrixXd> per_init;  // R2 matrices (H+1) x (d+M), if kept
    /// Monte Carlo standard error of the point estimate, (H+1) x (d+M).
    Eigen::MatrixXd mc_std_error;
    int inner_reps_used = 0;
    int outer_reps_used = 0;
};

void validate_girf_spec(const GirfSpec& spec, const Dimensions& dims);

/// Monte Carlo GIRF: per outer repetition a history is drawn from the initial
/// distribution; per inner repetition the shocked and baseline paths share the
/// initial regime, every normal draw and every regime-selection uniform.
GirfResult estimate_girf(const ModelParameters& model, const GirfSpec& spec);

/// Rescales every series so that variable v peaks at c within the first n0
/// horizons. The peak is the maximum for c > 0 and the minimum for c < 0,
/// falling back to the largest-magnitude value if that has the wrong sign.
GirfResult scale_girf(const GirfResult& result, int variable, double target, int window);

}  // namespace sgmvar
