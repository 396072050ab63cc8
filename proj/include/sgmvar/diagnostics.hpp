#pragma once

#include <vector>

#include <Eigen/Core>

namespace sgmvar {

struct CorrelogramSet {
    int max_lag = 0;
    /// acf_ccf[k](i, j) = corr(x_{i,t}, x_{j,t-k}); the row series leads.
    std::vector<Eigen::MatrixXd> acf_ccf;
    double bounds95 = 0.0;
    double bounds99 = 0.0;
    int sample_size = 0;

    /// Value at a possibly negative lag: ccf(i, j, -k) = ccf(j, i, k).
    double at(int i, int j, int lag) const;
};

/// Sample auto/cross-correlations at lags 0..L of the (optionally squared)
/// mean-removed columns, normalized by the full-sample variances.
CorrelogramSet correlogram(const Eigen::MatrixXd& residuals, int max_lag = 20, bool squared = false);

struct ShapeSummary {
    double mean = 0.0;
    double variance = 0.0;         // n - 1 denominator
    double skewness = 0.0;         // m3 / m2^{3/2}
    double excess_kurtosis = 0.0;  // m4 / m2^2 - 3
};

std::vector<ShapeSummary> shape_summary(const Eigen::MatrixXd& residuals);

}  // namespace sgmvar
