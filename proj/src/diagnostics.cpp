#include "sgmvar/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "sgmvar/error.hpp"

namespace sgmvar {

double CorrelogramSet::at(int i, int j, int lag) const {
    if (std::abs(lag) > max_lag) throw DimensionError("correlogram: lag out of range");
    return lag >= 0 ? acf_ccf[static_cast<std::size_t>(lag)](i, j) : acf_ccf[static_cast<std::size_t>(-lag)](j, i);
}

CorrelogramSet correlogram(const Eigen::MatrixXd& residuals, int max_lag, bool squared) {
    const Eigen::Index T = residuals.rows();
    const Eigen::Index d = residuals.cols();
    if (max_lag < 0) throw InvalidParameters("correlogram: lag must be non-negative");
    if (T <= max_lag + 1) throw DimensionError("correlogram: need more observations than L + 1");
    Eigen::MatrixXd x = squared ? Eigen::MatrixXd(residuals.cwiseAbs2()) : residuals;
    x.rowwise() -= x.colwise().mean();
    const Eigen::VectorXd gamma0 = x.colwise().squaredNorm().transpose() / static_cast<double>(T);
    for (Eigen::Index j = 0; j < d; ++j)
        if (!(gamma0[j] > 0.0)) throw InvalidParameters("correlogram: column " + std::to_string(j + 1) + " is constant");
    const Eigen::VectorXd sd = gamma0.cwiseSqrt();

    CorrelogramSet out;
    out.max_lag = max_lag;
    out.sample_size = static_cast<int>(T);
    out.bounds95 = 1.96 / std::sqrt(static_cast<double>(T));
    out.bounds99 = 2.58 / std::sqrt(static_cast<double>(T));
    for (int k = 0; k <= max_lag; ++k) {
        const Eigen::Index n = T - k;
        Eigen::MatrixXd g = x.bottomRows(n).transpose() * x.topRows(n) / static_cast<double>(T);
        Eigen::MatrixXd r = sd.cwiseInverse().asDiagonal() * g * sd.cwiseInverse().asDiagonal();
        for (Eigen::Index i = 0; i < d; ++i) r(i, i) = g(i, i) / gamma0[i];
        if (k == 0) r.diagonal().setOnes();
        out.acf_ccf.push_back(r.cwiseMax(-1.0).cwiseMin(1.0));
    }
    return out;
}

std::vector<ShapeSummary> shape_summary(const Eigen::MatrixXd& residuals) {
    const Eigen::Index T = residuals.rows();
    if (T < 4) throw DimensionError("shape_summary: need at least 4 observations");
    std::vector<ShapeSummary> out;
    for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
        const Eigen::ArrayXd col = residuals.col(j).array();
        ShapeSummary s;
        s.mean = col.mean();
        const Eigen::ArrayXd c = col - s.mean;
        const double m2 = c.square().mean();
        const double m3 = c.cube().mean();
        const double m4 = c.square().square().mean();
        s.variance = c.square().sum() / static_cast<double>(T - 1);
        s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
        s.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
        out.push_back(s);
    }
    return out;
}

}  // namespace sgmvar
