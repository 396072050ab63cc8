#include "sgmvar/structural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sgmvar/error.hpp"

namespace sgmvar {

char cell_symbol(Cell c) {
    switch (c) {
        case Cell::Positive: return '+';
        case Cell::Negative: return '-';
        case Cell::Zero: return '0';
        case Cell::Free: break;
    }
    return '*';
}

Cell cell_from_symbol(const std::string& s) {
    if (s == "*") return Cell::Free;
    if (s == "+") return Cell::Positive;
    if (s == "-") return Cell::Negative;
    if (s == "0") return Cell::Zero;
    throw ParseError("unknown constraint symbol '" + s + "' (expected one of * + - 0)");
}

ConstraintPattern::ConstraintPattern(int dim, int identified) : d(dim), d1(identified) {
    if (dim < 0 || identified < 0 || identified > dim)
        throw DimensionError("constraint pattern: need 0 <= d1 <= d");
    cells.assign(static_cast<std::size_t>(dim * dim), Cell::Free);
}

ConstraintPattern ConstraintPattern::from_rows(const std::vector<std::string>& rows, int identified) {
    const int dim = static_cast<int>(rows.size());
    ConstraintPattern out(dim, identified);
    for (int r = 0; r < dim; ++r) {
        if (static_cast<int>(rows[r].size()) != dim)
            throw DimensionError("constraint pattern row " + std::to_string(r + 1) + " must have " +
                                 std::to_string(dim) + " symbols");
        for (int c = 0; c < dim; ++c) out.at(r, c) = cell_from_symbol(std::string(1, rows[r][c]));
    }
    return out;
}

bool ConstraintPattern::empty() const {
    return std::all_of(cells.begin(), cells.end(), [](Cell c) { return c == Cell::Free; });
}

bool ConstraintPattern::column_has_sign(int col) const {
    for (int r = 0; r < d; ++r)
        if (at(r, col) == Cell::Positive || at(r, col) == Cell::Negative) return true;
    return false;
}

std::vector<std::string> ConstraintPattern::rows() const {
    std::vector<std::string> out;
    for (int r = 0; r < d; ++r) {
        std::string row;
        for (int c = 0; c < d; ++c) row.push_back(cell_symbol(at(r, c)));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::VectorXd StructuralParams::lambda(int m) const {
    if (m == 0) return Eigen::VectorXd::Ones(W.cols());
    return lambdas.at(static_cast<std::size_t>(m - 1));
}

Eigen::MatrixXd StructuralParams::omega(int m) const {
    const Eigen::MatrixXd S = W * lambda(m).asDiagonal() * W.transpose();
    return 0.5 * (S + S.transpose());
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Identified: return "Identified";
        case Verdict::IdentifiedPartialModel: return "IdentifiedPartialModel";
        case Verdict::NotIdentified: break;
    }
    return "NotIdentified";
}

namespace {

void canonical_sign(Eigen::MatrixXd& W, int col) {
    Eigen::Index arg = 0;
    W.col(col).cwiseAbs().maxCoeff(&arg);
    if (W(arg, col) < 0.0) W.col(col) *= -1.0;
}

bool satisfies_signs(const Eigen::MatrixXd& W, const ConstraintPattern& pattern, int col, double sign) {
    for (int r = 0; r < pattern.d; ++r) {
        const double v = sign * W(r, col);
        if (pattern.at(r, col) == Cell::Positive && !(v > 0.0)) return false;
        if (pattern.at(r, col) == Cell::Negative && !(v < 0.0)) return false;
    }
    return true;
}

Cell flip(Cell c) {
    if (c == Cell::Positive) return Cell::Negative;
    if (c == Cell::Negative) return Cell::Positive;
    return c;
}

bool columns_conflict(const ConstraintPattern& p, int have_col, int want_col, bool flipped) {
    for (int r = 0; r < p.d; ++r) {
        const Cell have = flipped ? flip(p.at(r, have_col)) : p.at(r, have_col);
        if (cells_conflict(have, p.at(r, want_col))) return true;
    }
    return false;
}

}  // namespace

StructuralParams decompose_two_regime(const Eigen::MatrixXd& omega1, const Eigen::MatrixXd& omega2) {
    if (omega1.rows() != omega1.cols() || omega2.rows() != omega2.cols() || omega1.rows() != omega2.rows())
        throw DimensionError("decompose_two_regime: matrices must be square and of equal size");
    const Eigen::Index d = omega1.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (omega1 + omega1.transpose()));
    if (llt.info() != Eigen::Success) throw InvalidParameters("decompose_two_regime: omega1 is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    const double dmin = L.diagonal().minCoeff();
    if (!(dmin > 1e-12 * std::max(1.0, L.diagonal().maxCoeff())))
        throw NumericalError("decompose_two_regime: omega1 is numerically singular");

    Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(omega2);
    C = L.triangularView<Eigen::Lower>().solve(C.transpose().eval()).eval();
    C = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success) throw NumericalError("decompose_two_regime: eigendecomposition failed");
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw InvalidParameters("decompose_two_regime: omega2 is not positive definite");

    StructuralParams out;
    out.W = L * es.eigenvectors();
    for (Eigen::Index c = 0; c < d; ++c) canonical_sign(out.W, static_cast<int>(c));
    out.lambdas.push_back(es.eigenvalues());
    return out;
}

ImpactMatrix build_B(const StructuralParams& structural, const MixingWeights& weights) {
    const Eigen::Index M = static_cast<Eigen::Index>(structural.lambdas.size()) + 1;
    if (weights.weights.size() != M) throw DimensionError("build_B: weights must have M entries");
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(structural.W.cols(), weights.weights[0]);
    for (Eigen::Index m = 1; m < M; ++m) diag += weights.weights[m] * structural.lambdas[static_cast<std::size_t>(m - 1)];
    return {structural.W * diag.cwiseSqrt().asDiagonal(), weights};
}

DistinctnessReport check_assumption1(const std::vector<Eigen::VectorXd>& lambdas, double rel_tol) {
    DistinctnessReport out;
    if (lambdas.empty()) {
        out.pairwise.resize(0, 0);
        return out;
    }
    const Eigen::Index d = lambdas.front().size();
    out.pairwise = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(d, d, false);
    bool all = true;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
            bool distinct = false;
            for (const auto& lam : lambdas) {
                const double a = lam[i];
                const double b = lam[j];
                if (std::abs(a - b) > rel_tol * std::max(std::abs(a), std::abs(b))) {
                    distinct = true;
                    break;
                }
            }
            out.pairwise(i, j) = out.pairwise(j, i) = distinct;
            all = all && distinct;
        }
    out.assumption1_holds = all;
    return out;
}

bool cells_conflict(Cell have, Cell want) {
    switch (want) {
        case Cell::Free: return false;
        case Cell::Positive: return have == Cell::Negative || have == Cell::Zero;
        case Cell::Negative: return have == Cell::Positive || have == Cell::Zero;
        case Cell::Zero: return have == Cell::Positive || have == Cell::Negative;
    }
    return false;
}

IdentificationResult check_identification(const ConstraintPattern& pattern, const DistinctnessReport& report) {
    const int d = pattern.d;
    if (d < 1 || static_cast<int>(pattern.cells.size()) != d * d)
        throw DimensionError("check_identification: malformed constraint pattern");
    if (pattern.d1 < 1 || pattern.d1 > d)
        throw DimensionError("check_identification: d1 must be between 1 and d");
    if (report.pairwise.rows() != d || report.pairwise.cols() != d)
        throw DimensionError("check_identification: distinctness report does not match the pattern size");

    const int d0 = d - pattern.d1;
    IdentificationResult res;

    std::vector<std::pair<int, int>> ties;  // (other, identified), 0-based
    for (int j = d0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            if (i == j || report.pairwise(i, j)) continue;
            if (i >= d0 && i < j) continue;  // pair among identified columns already counted
            ties.emplace_back(i, j);
        }

    for (int j = d0; j < d; ++j) {
        ColumnDiagnosis cd;
        cd.column = j + 1;
        cd.has_sign = pattern.column_has_sign(j);
        for (int i = 0; i < d; ++i) {
            if (i == j) continue;
            if (!report.pairwise(i, j)) cd.distinct = false;
            if (!columns_conflict(pattern, i, j, false) || !columns_conflict(pattern, i, j, true))
                cd.indistinguishable_from.push_back(i + 1);
        }
        res.columns.push_back(std::move(cd));
    }

    auto not_identified = [&](int cond, std::string msg) {
        res.verdict = Verdict::NotIdentified;
        res.failed_condition = cond;
        res.message = std::move(msg);
        return res;
    };

    bool partial = false;
    if (!ties.empty()) {
        if (ties.size() == 1 && ties.front().first < d0) {
            partial = true;
            res.tied_pair = std::make_pair(ties.front().first + 1, ties.front().second + 1);
        } else {
            const auto& t = ties.front();
            return not_identified(1, "condition 1 fails: columns " + std::to_string(t.first + 1) + " and " +
                                         std::to_string(t.second + 1) + " have identical eigenvalues in every regime");
        }
    }

    for (const auto& cd : res.columns)
        if (!cd.indistinguishable_from.empty())
            return not_identified(2, "condition 2 fails: column " + std::to_string(cd.indistinguishable_from.front()) +
                                         " can satisfy the constraints of column " + std::to_string(cd.column));

    for (const auto& cd : res.columns)
        if (!cd.has_sign)
            return not_identified(3, "condition 3 fails: column " + std::to_string(cd.column) +
                                         " has no strict sign constraint");

    if (partial) {
        const int i = res.tied_pair->first - 1;
        const int j = res.tied_pair->second - 1;
        bool zero_where_sign = false;
        for (int r = 0; r < d; ++r) {
            const Cell ci = pattern.at(r, i);
            if ((ci == Cell::Positive || ci == Cell::Negative) && pattern.at(r, j) == Cell::Zero) zero_where_sign = true;
        }
        if (!pattern.column_has_sign(i) || !zero_where_sign)
            return not_identified(4, "condition 4 fails: column " + std::to_string(j + 1) +
                                         " needs a zero where tied column " + std::to_string(i + 1) +
                                         " has a strict sign constraint");
        res.verdict = Verdict::IdentifiedPartialModel;
        res.message = "last " + std::to_string(pattern.d1) + " shock(s) identified; columns " +
                      std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                      " share eigenvalues so the model is only partially identified";
        return res;
    }

    res.verdict = Verdict::Identified;
    res.message = "last " + std::to_string(pattern.d1) + " shock(s) identified";
    if (!report.assumption1_holds) res.message += " (other columns are not statistically identified)";
    return res;
}

StructuralParams normalize_W(const StructuralParams& structural) {
    StructuralParams out = structural;
    const int d = static_cast<int>(structural.W.cols());
    const bool constrained = structural.pattern.d == d && !structural.pattern.empty();

    if (!constrained && !structural.lambdas.empty()) {
        std::vector<int> order(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            for (const auto& lam : structural.lambdas) {
                if (lam[a] < lam[b]) return true;
                if (lam[b] < lam[a]) return false;
            }
            return false;
        });
        for (int c = 0; c < d; ++c) {
            out.W.col(c) = structural.W.col(order[c]);
            for (std::size_t k = 0; k < structural.lambdas.size(); ++k)
                out.lambdas[k][c] = structural.lambdas[k][order[c]];
        }
    }

    for (int c = 0; c < d; ++c) {
        if (constrained && structural.pattern.column_has_sign(c)) {
            if (satisfies_signs(out.W, structural.pattern, c, 1.0)) continue;
            if (satisfies_signs(out.W, structural.pattern, c, -1.0)) {
                out.W.col(c) *= -1.0;
                continue;
            }
            throw InvalidParameters("normalize_W: column " + std::to_string(c + 1) +
                                    " cannot satisfy its sign constraints under either sign");
        }
        canonical_sign(out.W, c);
    }
    return out;
}

void validate_structural(const StructuralParams& structural, int d, int M) {
    const auto& W = structural.W;
    if (W.rows() != d || W.cols() != d) throw DimensionError("W must be d x d");
    if (!W.allFinite()) throw InvalidParameters("W has non-finite entries");
    if (static_cast<int>(structural.lambdas.size()) != M - 1)
        throw DimensionError("expected M - 1 lambda vectors");
    for (const auto& lam : structural.lambdas) {
        if (lam.size() != d) throw DimensionError("lambda vectors must have length d");
        if (!lam.allFinite() || !(lam.minCoeff() > 0.0))
            throw InvalidParameters("lambda entries must be strictly positive");
    }
    Eigen::VectorXd norms = W.colwise().norm();
    if (!(norms.minCoeff() > 0.0)) throw InvalidParameters("W is singular");
    const double det = (W * norms.cwiseInverse().asDiagonal()).determinant();
    if (!(std::abs(det) > 1e-12)) throw InvalidParameters("W is singular");
    if (structural.pattern.d != 0) {
        if (structural.pattern.d != d) throw DimensionError("constraint pattern must be d x d");
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                if (structural.pattern.at(r, c) == Cell::Zero && W(r, c) != 0.0)
                    throw InvalidParameters("W violates a zero constraint at row " + std::to_string(r + 1) +
                                            ", column " + std::to_string(c + 1));
    }
}

}  // namespace sgmvar
