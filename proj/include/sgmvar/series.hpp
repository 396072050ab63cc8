#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sgmvar {

/// Named multivariate series: T observations (rows) of d variables (columns).
struct SeriesFrame {
    std::string index_name = "index";
    std::vector<std::string> names;
    std::vector<std::string> index;
    Eigen::MatrixXd values;

    int T() const { return static_cast<int>(values.rows()); }
    int d() const { return static_cast<int>(values.cols()); }
    /// Column position of `name`; throws if absent.
    int column(const std::string& name) const;
};

/// Shortest decimal representation that reads back to the same double.
std::string format_double(double v);

/// First row: index header then variable names; first column: index labels.
SeriesFrame parse_csv(std::istream& in, const std::string& source = "<input>");
SeriesFrame load_csv(const std::string& path);
void write_csv(const SeriesFrame& frame, std::ostream& out);
void save_csv(const SeriesFrame& frame, const std::string& path);

/// 100 (ln x_t - ln x_{t-1}); length T - 1.
Eigen::VectorXd log_diff_100(const Eigen::VectorXd& x);

struct HpResult {
    Eigen::VectorXd trend;
    Eigen::VectorXd cycle;
};

inline constexpr double kHpLambdaQuarterly = 1600.0;

/// Solves (I + lambda D'D) trend = x with a banded Cholesky factorization.
HpResult hp_filter_two_sided(const Eigen::VectorXd& x, double lambda = kHpLambdaQuarterly);

/// trend_t is the last point of the two-sided filter on x_1..x_t; the first
/// three points are left untouched.
HpResult hp_filter_one_sided(const Eigen::VectorXd& x, double lambda = kHpLambdaQuarterly, int threads = 1);

struct TransformStep {
    std::string column;
    std::string op;  // identity | log_diff_100 | hp_{cycle,trend}_{two,one}_sided
    double lambda = kHpLambdaQuarterly;
    std::string output;  // defaults to column
};

struct TransformManifest {
    std::vector<TransformStep> steps;

    static TransformManifest parse(const std::string& json_text);
    static TransformManifest load(const std::string& path);
};

/// Applies the manifest; the output holds one column per step. If any step
/// differences its input, the first observation is dropped from every column.
SeriesFrame apply_transforms(const SeriesFrame& frame, const TransformManifest& manifest);

}  // namespace sgmvar
