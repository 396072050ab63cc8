#include <Eigen/Dense>

#include "doctest.h"
#include "sgmvar/error.hpp"
#include "sgmvar/girf.hpp"
#include "sgmvar/structural.hpp"
#include "support.hpp"

using namespace sgmvar;
using testing::mat;
using testing::vec;

namespace {

ModelParameters linear_structural() {
    ModelParameters m;
    m.dims = {2, 1, 1};
    Regime r;
    r.phi0 = vec({0.2, -0.1});
    r.A = {mat(2, 2, {0.6, 0.2, -0.1, 0.4})};
    StructuralParams s;
    s.W = mat(2, 2, {0.8, -0.3, 0.2, 0.5});
    r.omega = s.W * s.W.transpose();
    m.regimes = {r};
    m.alpha = vec({1.0});
    m.structural = s;
    return m;
}

ModelParameters two_regime_structural() {
    auto m = testing::gmvar12_fixture();
    m.structural = normalize_W(decompose_two_regime(m.regimes[0].omega, m.regimes[1].omega));
    return m;
}

}  // namespace

TEST_CASE("antithetic GIRF of a linear model equals the analytic impulse response") {
    const auto m = linear_structural();
    GirfSpec s;
    s.shock = 2;
    s.magnitude = 1.5;
    s.horizon = 10;
    s.inner_reps = 50;
    s.antithetic = true;
    s.init = InitialCondition::fixed(mat(1, 2, {0.5, 1.0}));
    const auto r = estimate_girf(m, s);
    Eigen::VectorXd psi = m.structural->W.col(1) * 1.5;
    for (int h = 0; h <= 10; ++h) {
        CHECK(testing::max_abs(r.point.row(h).transpose() - psi) < 1e-12);
        psi = m.regimes[0].A[0] * psi;
    }
    CHECK(testing::max_abs(r.weights_point) == 0.0);
    CHECK(r.outer_reps_used == 1);
}

TEST_CASE("GIRF is reproducible and thread-count independent") {
    const auto m = two_regime_structural();
    GirfSpec s;
    s.horizon = 6;
    s.inner_reps = 40;
    s.outer_reps = 6;
    s.seed = 99;
    s.threads = 1;
    const auto a = estimate_girf(m, s);
    s.threads = 3;
    const auto b = estimate_girf(m, s);
    CHECK(a.point == b.point);
    CHECK(a.weights_point == b.weights_point);
    s.seed = 100;
    CHECK(estimate_girf(m, s).point != a.point);
}

TEST_CASE("GIRF output shapes and band ordering") {
    const auto m = two_regime_structural();
    GirfSpec s;
    s.horizon = 5;
    s.inner_reps = 30;
    s.outer_reps = 20;
    s.init = InitialCondition::regime_stationary(1);
    s.keep_per_init = true;
    const auto r = estimate_girf(m, s);
    CHECK(r.point.rows() == 6);
    CHECK(r.point.cols() == 2);
    CHECK(r.weights_point.cols() == 2);
    REQUIRE(r.bands.size() == 2);
    CHECK(r.per_init.size() == 20);
    CHECK((r.bands[0].values.array() <= r.bands[1].values.array()).all());
    CHECK(r.mc_std_error.rows() == 6);
    // the mixing-weight responses sum to zero across regimes and vanish on impact
    CHECK(r.weights_point.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.weights_point.rowwise().sum().array().abs() < 1e-12).all());
    // point estimate is the mean over initial values
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(6, 4);
    for (const auto& p : r.per_init) mean += p / 20.0;
    CHECK(testing::max_abs(mean.leftCols(2) - r.point) < 1e-12);
}

TEST_CASE("fixed initial values give degenerate bands") {
    const auto m = two_regime_structural();
    GirfSpec s;
    s.horizon = 4;
    s.inner_reps = 30;
    s.outer_reps = 10;
    s.init = InitialCondition::fixed(mat(1, 2, {1.0, 0.0}));
    const auto r = estimate_girf(m, s);
    CHECK(r.outer_reps_used == 1);
    for (const auto& b : r.bands) CHECK(testing::max_abs(b.values.leftCols(2) - r.point) == 0.0);
}

TEST_CASE("accumulated responses are running sums") {
    const auto m = linear_structural();
    GirfSpec s;
    s.horizon = 8;
    s.inner_reps = 20;
    s.antithetic = true;
    s.init = InitialCondition::fixed(mat(1, 2, {0.0, 0.0}));
    const auto plain = estimate_girf(m, s);
    s.accumulate = {1};
    const auto acc = estimate_girf(m, s);
    double run = 0.0;
    for (int h = 0; h <= 8; ++h) {
        run += plain.point(h, 0);
        CHECK(acc.point(h, 0) == doctest::Approx(run).epsilon(1e-12));
        CHECK(acc.point(h, 1) == plain.point(h, 1));
    }
}

TEST_CASE("scaling sets the peak of the chosen variable") {
    const auto m = linear_structural();
    GirfSpec s;
    s.shock = 1;
    s.horizon = 8;
    s.inner_reps = 20;
    s.antithetic = true;
    s.init = InitialCondition::fixed(mat(1, 2, {0.0, 0.0}));
    const auto r = estimate_girf(m, s);
    const auto sc = scale_girf(r, 2, 0.25, 4);
    CHECK(sc.point.col(1).head(4).maxCoeff() == doctest::Approx(0.25).epsilon(1e-14));
    const double factor = sc.point(0, 0) / r.point(0, 0);
    CHECK(testing::max_abs(sc.point - factor * r.point) < 1e-14);
    const auto again = scale_girf(sc, 2, 0.25, 4);
    CHECK(testing::max_abs(again.point - sc.point) < 1e-15);
    const auto neg = scale_girf(r, 2, -0.25, 4);
    CHECK(neg.point.col(1).head(4).minCoeff() == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK_THROWS_AS(scale_girf(r, 3, 0.25, 4), DimensionError);
}

TEST_CASE("spec validation") {
    const auto m = linear_structural();
    GirfSpec s;
    s.shock = 3;
    CHECK_THROWS_AS(estimate_girf(m, s), DimensionError);
    s = {};
    s.quantiles = {0.9, 0.1};
    CHECK_THROWS_AS(estimate_girf(m, s), InvalidParameters);
    s = {};
    s.inner_reps = 0;
    CHECK_THROWS_AS(estimate_girf(m, s), InvalidParameters);
    auto reduced = m;
    reduced.structural.reset();
    CHECK_THROWS_AS(estimate_girf(reduced, GirfSpec{}), InvalidParameters);
}
