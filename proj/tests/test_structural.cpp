#include <algorithm>
#include <numeric>

#include <Eigen/Dense>

#include "doctest.h"
#include "sgmvar/error.hpp"
#include "sgmvar/structural.hpp"
#include "support.hpp"

using namespace sgmvar;
using testing::mat;
using testing::vec;

namespace {

DistinctnessReport distinct(int d) { return check_assumption1({Eigen::VectorXd::LinSpaced(d, 1.0, double(d))}); }

DistinctnessReport tied(int d, int i, int j) {
    Eigen::VectorXd l = Eigen::VectorXd::LinSpaced(d, 1.0, double(d));
    l[j - 1] = l[i - 1];
    return check_assumption1({l});
}

}  // namespace

TEST_CASE("constraint patterns parse symbol rows") {
    const auto p = ConstraintPattern::from_rows({"*+", "0-"}, 1);
    CHECK(p.d == 2);
    CHECK(p.d1 == 1);
    CHECK(p.at(0, 0) == Cell::Free);
    CHECK(p.at(0, 1) == Cell::Positive);
    CHECK(p.at(1, 0) == Cell::Zero);
    CHECK(p.at(1, 1) == Cell::Negative);
    CHECK(p.column_has_sign(1));
    CHECK_FALSE(p.column_has_sign(0));
    CHECK(p.rows() == std::vector<std::string>{"*+", "0-"});
    CHECK_THROWS(ConstraintPattern::from_rows({"*+", "0"}, 1));
    CHECK_THROWS(ConstraintPattern::from_rows({"*x", "00"}, 1));
}

TEST_CASE("cell conflicts") {
    CHECK(cells_conflict(Cell::Positive, Cell::Negative));
    CHECK(cells_conflict(Cell::Negative, Cell::Positive));
    CHECK(cells_conflict(Cell::Positive, Cell::Zero));
    CHECK_FALSE(cells_conflict(Cell::Free, Cell::Positive));
    CHECK_FALSE(cells_conflict(Cell::Positive, Cell::Free));
    CHECK_FALSE(cells_conflict(Cell::Positive, Cell::Positive));
    CHECK_FALSE(cells_conflict(Cell::Zero, Cell::Zero));
}

TEST_CASE("two-regime decomposition reproduces both covariances") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 1 + rep % 5;
        const Eigen::MatrixXd O1 = testing::random_spd(d, rng);
        const Eigen::MatrixXd O2 = testing::random_spd(d, rng);
        const StructuralParams s = decompose_two_regime(O1, O2);
        const Eigen::VectorXd& l = s.lambdas[0];
        CHECK(testing::max_abs(s.W * s.W.transpose() - O1) < 1e-10 * testing::max_abs(O1));
        CHECK(testing::max_abs(s.W * l.asDiagonal() * s.W.transpose() - O2) < 1e-10 * testing::max_abs(O2));
        CHECK(std::is_sorted(l.data(), l.data() + l.size()));
        // eigenvalues of Omega_2 Omega_1^-1
        Eigen::EigenSolver<Eigen::MatrixXd> es(O2 * O1.inverse());
        Eigen::VectorXd ev = es.eigenvalues().real();
        std::sort(ev.data(), ev.data() + ev.size());
        CHECK(testing::max_abs(ev - l) < 1e-9 * l.maxCoeff());
        for (int c = 0; c < d; ++c) {
            Eigen::Index k;
            s.W.col(c).cwiseAbs().maxCoeff(&k);
            CHECK(s.W(k, c) > 0);
        }
    }
}

TEST_CASE("B matrix simultaneously diagonalizes the regime covariances") {
    const Eigen::MatrixXd W = mat(3, 3, {1.0, 0.2, -0.3, 0.1, 0.8, 0.2, 0.0, 0.3, 1.5});
    StructuralParams s;
    s.W = W;
    s.lambdas = {vec({0.5, 2.0, 4.0}), vec({1.5, 0.7, 3.0})};
    MixingWeights w{vec({0.2, 0.5, 0.3})};
    const ImpactMatrix im = build_B(s, w);
    Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(3, 3);
    for (int m = 0; m < 3; ++m) mix += w.weights[m] * s.omega(m);
    CHECK(testing::max_abs(im.B * im.B.transpose() - mix) < 1e-12);
    const Eigen::MatrixXd Bi = im.B.inverse();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
    for (int m = 0; m < 3; ++m) {
        const Eigen::MatrixXd D = Bi * s.omega(m) * Bi.transpose();
        Eigen::MatrixXd off = D;
        off.diagonal().setZero();
        CHECK(testing::max_abs(off) < 1e-12);
        sum += w.weights[m] * D;
    }
    CHECK(testing::max_abs(sum - Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
}

TEST_CASE("eigenvalue distinctness") {
    SUBCASE("separated by one regime is enough") {
        const auto r = check_assumption1({vec({1.0, 1.0, 2.0}), vec({1.0, 3.0, 2.0})});
        CHECK(r.assumption1_holds);
    }
    SUBCASE("tied in every regime") {
        const auto r = check_assumption1({vec({1.0, 1.0, 2.0}), vec({4.0, 4.0, 2.0})});
        CHECK_FALSE(r.assumption1_holds);
        CHECK_FALSE(r.pairwise(0, 1));
        CHECK(r.pairwise(0, 2));
        CHECK(r.pairwise(1, 2));
    }
    SUBCASE("relative tolerance") {
        CHECK_FALSE(check_assumption1({vec({1.0, 1.0 + 1e-10})}).assumption1_holds);
        CHECK(check_assumption1({vec({1.0, 1.0 + 1e-10})}, 1e-12).assumption1_holds);
    }
}

TEST_CASE("worked patterns with distinct eigenvalues identify the last shock") {
    const std::vector<std::vector<std::string>> patterns{
        {"***", "++-", "+++"}, {"-*+", "-+-", "*++"}, {"++0", "***", "**+"}};
    for (const auto& rows : patterns) {
        const auto res = check_identification(ConstraintPattern::from_rows(rows, 1), distinct(3));
        CHECK(res.verdict == Verdict::Identified);
        CHECK_FALSE(res.failed_condition.has_value());
    }
}

TEST_CASE("worked patterns with a tie identify the last shock only partially") {
    const std::vector<std::vector<std::string>> patterns{{"****", "**+0", "++*-", "++*+"},
                                                         {"**-0", "****", "+-*+", "-+*+"},
                                                         {"+--0", "****", "****", "***+"}};
    for (const auto& rows : patterns) {
        const auto res = check_identification(ConstraintPattern::from_rows(rows, 1), tied(4, 3, 4));
        CHECK(res.verdict == Verdict::IdentifiedPartialModel);
        REQUIRE(res.tied_pair.has_value());
        CHECK(res.tied_pair->first == 3);
        CHECK(res.tied_pair->second == 4);
    }
}

TEST_CASE("violations of the pattern conditions are rejected") {
    SUBCASE("a competing column could satisfy the identified column's constraints") {
        const auto res = check_identification(ConstraintPattern::from_rows({"***", "+++", "+++"}, 1), distinct(3));
        CHECK(res.verdict == Verdict::NotIdentified);
        CHECK(res.failed_condition == 2);
    }
    SUBCASE("sign flips are not enough to distinguish columns") {
        const auto res = check_identification(ConstraintPattern::from_rows({"***", "-++", "--+"}, 1), distinct(3));
        CHECK(res.verdict == Verdict::NotIdentified);
        CHECK(res.failed_condition == 2);
    }
    SUBCASE("an identified column without a strict sign") {
        const auto res = check_identification(ConstraintPattern::from_rows({"++0", "***", "***"}, 1), distinct(3));
        CHECK(res.verdict == Verdict::NotIdentified);
        CHECK(res.failed_condition == 3);
    }
    SUBCASE("tied columns separated by signs but without the zero constraint") {
        const auto res =
            check_identification(ConstraintPattern::from_rows({"****", "+++-", "****", "++++"}, 1), tied(4, 3, 4));
        CHECK(res.verdict == Verdict::NotIdentified);
        CHECK(res.failed_condition == 4);
    }
    SUBCASE("a tie between two identified shocks") {
        const auto res =
            check_identification(ConstraintPattern::from_rows({"**+0", "**0+", "+++-", "++-+"}, 2), tied(4, 3, 4));
        CHECK(res.verdict == Verdict::NotIdentified);
        CHECK(res.failed_condition == 1);
    }
    SUBCASE("more than one tie") {
        Eigen::VectorXd l = vec({1.0, 2.0, 2.0, 2.0});
        const auto res = check_identification(ConstraintPattern::from_rows({"+--0", "****", "****", "***+"}, 1),
                                              check_assumption1({l}));
        CHECK(res.verdict == Verdict::NotIdentified);
        CHECK(res.failed_condition == 1);
    }
}

TEST_CASE("empirical pattern: identified under distinct eigenvalues and robust to a tie with shock 3") {
    const auto p = ConstraintPattern::from_rows({"*+*-", "-*+0", "*-*-", "***+"}, 1);
    CHECK(check_identification(p, distinct(4)).verdict == Verdict::Identified);
    CHECK(check_identification(p, tied(4, 3, 4)).verdict == Verdict::IdentifiedPartialModel);
    CHECK(check_identification(p, tied(4, 1, 4)).verdict == Verdict::IdentifiedPartialModel);
    CHECK(check_identification(p, tied(4, 1, 2)).verdict == Verdict::Identified);
}

TEST_CASE("the zero constraint may sit against any tied non-identified column") {
    const auto p = ConstraintPattern::from_rows({"+--0", "****", "****", "***+"}, 1);
    const auto res = check_identification(p, tied(4, 2, 4));
    CHECK(res.verdict == Verdict::IdentifiedPartialModel);
    CHECK(res.tied_pair == std::make_pair(2, 4));
}

TEST_CASE("normalize_W is invariant to column order and signs") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 2 + rep % 4;
        const auto s = decompose_two_regime(testing::random_spd(d, rng), testing::random_spd(d, rng));
        std::vector<int> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        StructuralParams shuffled = s;
        for (int c = 0; c < d; ++c) {
            shuffled.W.col(c) = (c % 2 ? -1.0 : 1.0) * s.W.col(perm[static_cast<std::size_t>(c)]);
            shuffled.lambdas[0][c] = s.lambdas[0][perm[static_cast<std::size_t>(c)]];
        }
        const auto n = normalize_W(shuffled);
        CHECK(testing::max_abs(n.W - s.W) < 1e-12);
        CHECK(testing::max_abs(n.lambdas[0] - s.lambdas[0]) < 1e-12);
    }
}

TEST_CASE("normalize_W with a pattern flips columns into the sign constraints") {
    StructuralParams s;
    s.W = mat(2, 2, {1.0, 0.5, -0.2, -2.0});
    s.lambdas = {vec({3.0, 1.0})};
    s.pattern = ConstraintPattern::from_rows({"-*", "*+"}, 2);
    const auto n = normalize_W(s);
    CHECK(n.W(0, 0) < 0);
    CHECK(n.W(1, 1) > 0);
    CHECK(n.lambdas[0][0] == 3.0);
    s.pattern = ConstraintPattern::from_rows({"++", "+*"}, 2);
    CHECK_THROWS_AS(normalize_W(s), InvalidParameters);
}

TEST_CASE("structural validation") {
    StructuralParams s;
    s.W = mat(2, 2, {1, 0, 0, 1});
    s.lambdas = {vec({1.0, 2.0})};
    CHECK_NOTHROW(validate_structural(s, 2, 2));
    auto bad = s;
    bad.lambdas = {vec({1.0, -2.0})};
    CHECK_THROWS_AS(validate_structural(bad, 2, 2), InvalidParameters);
    bad = s;
    bad.W = mat(2, 2, {1, 2, 2, 4});
    CHECK_THROWS_AS(validate_structural(bad, 2, 2), InvalidParameters);
    bad = s;
    bad.lambdas = {};
    CHECK_THROWS(validate_structural(bad, 2, 2));
    bad = s;
    bad.pattern = ConstraintPattern::from_rows({"0*", "**"}, 1);
    bad.W(0, 0) = 0.1;
    CHECK_THROWS_AS(validate_structural(bad, 2, 2), InvalidParameters);
}
