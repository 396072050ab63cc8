#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sgmvar {

/// Variable count d, autoregressive order p and regime count M.
struct Dimensions {
    int d = 1;
    int p = 1;
    int M = 1;

    int dp() const { return d * p; }
    bool operator==(const Dimensions&) const = default;
};

/// One linear Gaussian VAR component: y = phi0 + sum_i A[i] y_{t-i} + u, u ~ N(0, omega).
struct Regime {
    Eigen::VectorXd phi0;
    std::vector<Eigen::MatrixXd> A;
    Eigen::MatrixXd omega;
};

/// Constraint placed on one impact-matrix cell.
enum class Cell { Free, Positive, Negative, Zero };

char cell_symbol(Cell c);
Cell cell_from_symbol(const std::string& s);

/// Sign / zero constraints on the columns of W (equivalently of B_t). The
/// last `d1` columns are the shocks whose identification is in question.
struct ConstraintPattern {
    int d = 0;
    int d1 = 0;
    std::vector<Cell> cells;  // row-major d x d

    ConstraintPattern() = default;
    ConstraintPattern(int dim, int identified);
    /// Builds a pattern from rows of symbols "*", "+", "-", "0".
    static ConstraintPattern from_rows(const std::vector<std::string>& rows, int identified);

    Cell at(int row, int col) const { return cells[static_cast<std::size_t>(row * d + col)]; }
    Cell& at(int row, int col) { return cells[static_cast<std::size_t>(row * d + col)]; }
    bool empty() const;
    bool column_has_sign(int col) const;
    std::vector<std::string> rows() const;
};

/// W / Lambda parametrization of the regime covariances: Omega_1 = W W',
/// Omega_m = W diag(lambda_m) W' for m = 2..M. `lambdas[k]` holds lambda_{k+2}.
struct StructuralParams {
    Eigen::MatrixXd W;
    std::vector<Eigen::VectorXd> lambdas;
    ConstraintPattern pattern;

    /// Covariance of regime m (0-based) implied by W and the lambdas.
    Eigen::MatrixXd omega(int m) const;
    /// lambda vector of regime m (0-based); regime 0 is the all-ones reference.
    Eigen::VectorXd lambda(int m) const;
};

/// Full parameter set of a (structural) GMVAR(p, M) model in d dimensions.
struct ModelParameters {
    Dimensions dims;
    std::vector<Regime> regimes;
    Eigen::VectorXd alpha;
    std::optional<StructuralParams> structural;
    /// Set for models whose regimes need not satisfy alpha_M > ... > alpha_1.
    bool ordering_waived = false;
    /// Optional variable names carried through model files.
    std::vector<std::string> names;
};

/// Mixing weights alpha_{1,t}..alpha_{M,t} for one time point.
struct MixingWeights {
    Eigen::VectorXd weights;
};

}  // namespace sgmvar
