#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgmvar/types.hpp"

namespace sgmvar {

/// Time-varying impact matrix B_t together with the weights it was built from.
struct ImpactMatrix {
    Eigen::MatrixXd B;
    MixingWeights weights_used;
};

/// Pairwise eigenvalue distinctness: pairwise(i, j) is true when some regime
/// separates lambda_i from lambda_j.
struct DistinctnessReport {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> pairwise;
    bool assumption1_holds = false;
};

enum class Verdict { Identified, IdentifiedPartialModel, NotIdentified };

std::string to_string(Verdict v);

struct ColumnDiagnosis {
    int column = 0;  // 1-based
    bool distinct = true;
    bool has_sign = true;
    std::vector<int> indistinguishable_from;  // 1-based columns that fail the conflict rule
};

struct IdentificationResult {
    Verdict verdict = Verdict::NotIdentified;
    /// First failing condition (1-4); nullopt unless NotIdentified.
    std::optional<int> failed_condition;
    /// For IdentifiedPartialModel: the tied (non-identified, identified) pair, 1-based.
    std::optional<std::pair<int, int>> tied_pair;
    std::string message;
    std::vector<ColumnDiagnosis> columns;
};

/// Omega_1 = W W', Omega_2 = W diag(lambda) W' via Cholesky of Omega_1 and the
/// symmetric eigendecomposition of L^-1 Omega_2 L'^-1. lambda comes out
/// non-decreasing and every column has its largest-magnitude entry positive.
StructuralParams decompose_two_regime(const Eigen::MatrixXd& omega1, const Eigen::MatrixXd& omega2);

/// B_t = W (w_1 I + sum_{m>=2} w_m Lambda_m)^{1/2}.
ImpactMatrix build_B(const StructuralParams& structural, const MixingWeights& weights);

/// Pairs whose relative eigenvalue gap is below rel_tol in every regime count as tied.
DistinctnessReport check_assumption1(const std::vector<Eigen::VectorXd>& lambdas,
                                     double rel_tol = 1e-8);

/// Applies the conditions for identifying the last d1 shocks. Condition (1)
/// comes from the distinctness report; (2) and (3) from the constraint
/// pattern; when exactly one non-identified column is tied with an identified
/// one, the zero-constraint condition (4) can still identify the shocks while
/// leaving the model only partially identified.
IdentificationResult check_identification(const ConstraintPattern& pattern,
                                          const DistinctnessReport& report);

/// True if a column constrained by `have` can never satisfy the constraints `want`.
bool cells_conflict(Cell have, Cell want);

/// Canonical form: without a pattern, columns sorted by non-decreasing lambda_2
/// (ties broken by later regimes) and each column's largest-magnitude entry
/// made positive. With a pattern the column order is the pattern's and signs
/// are flipped to satisfy its strict sign cells. Throws InvalidParameters if
/// some column satisfies its sign cells under neither sign.
StructuralParams normalize_W(const StructuralParams& structural);

/// Validity of W (nonsingular) and lambdas (strictly positive, length d).
void validate_structural(const StructuralParams& structural, int d, int M);

}  // namespace sgmvar
