#include <cmath>

#include "doctest.h"
#include "sgmvar/diagnostics.hpp"
#include "support.hpp"

using namespace sgmvar;
using testing::mat;

TEST_CASE("hand-computed autocorrelations") {
    // x = (1, 2, 3, 4, 5): deviations -2..2, sum of squares 10
    const Eigen::MatrixXd x = mat(5, 1, {1, 2, 3, 4, 5});
    const auto c = correlogram(x, 2);
    CHECK(c.acf_ccf[0](0, 0) == doctest::Approx(1.0));
    CHECK(c.acf_ccf[1](0, 0) == doctest::Approx(4.0 / 10.0));  // 2 + 0 + 0 + 2
    CHECK(c.acf_ccf[2](0, 0) == doctest::Approx(-1.0 / 10.0));  // 0 - 1 + 0
    CHECK(c.bounds95 == doctest::Approx(1.96 / std::sqrt(5.0)).epsilon(1e-3));
    CHECK(c.bounds99 == doctest::Approx(2.576 / std::sqrt(5.0)).epsilon(1e-3));
    CHECK(c.sample_size == 5);
}

TEST_CASE("cross-correlations lead and lag consistently") {
    const Eigen::MatrixXd x = mat(6, 2, {1, 0, 3, 1, 2, 3, 5, 2, 4, 5, 6, 4});
    const auto c = correlogram(x, 3);
    const Eigen::VectorXd a = x.col(0).array() - x.col(0).mean();
    const Eigen::VectorXd b = x.col(1).array() - x.col(1).mean();
    const double norm = std::sqrt(a.squaredNorm() * b.squaredNorm());
    for (int k = 0; k <= 3; ++k) {
        double s = 0.0;
        for (int t = k; t < 6; ++t) s += a[t] * b[t - k];
        CHECK(c.acf_ccf[k](0, 1) == doctest::Approx(s / norm));
        CHECK(c.at(1, 0, -k) == doctest::Approx(s / norm));
    }
    CHECK(c.acf_ccf[0](0, 1) == doctest::Approx(c.acf_ccf[0](1, 0)));
}

TEST_CASE("squared correlogram uses squared residuals") {
    const Eigen::MatrixXd x = mat(6, 1, {-1, 2, -3, 1, 0, 2});
    const auto sq = correlogram(x, 2, true);
    const auto direct = correlogram(x.array().square().matrix(), 2, false);
    for (int k = 0; k <= 2; ++k) CHECK(sq.acf_ccf[k](0, 0) == doctest::Approx(direct.acf_ccf[k](0, 0)));
}

TEST_CASE("correlogram rejects degenerate input") {
    CHECK_THROWS(correlogram(Eigen::MatrixXd::Constant(10, 1, 2.0), 2));
    CHECK_THROWS(correlogram(mat(3, 1, {1, 2, 3}), 5));
}

TEST_CASE("shape summary moments") {
    // x = (0, 0, 0, 4): mean 1, deviations (-1,-1,-1,3)
    const Eigen::MatrixXd x = mat(4, 1, {0, 0, 0, 4});
    const auto s = shape_summary(x);
    REQUIRE(s.size() == 1);
    CHECK(s[0].mean == doctest::Approx(1.0));
    CHECK(s[0].variance == doctest::Approx(12.0 / 3.0));
    const double m2 = 3.0;
    const double m3 = (-1 - 1 - 1 + 27) / 4.0;
    const double m4 = (1 + 1 + 1 + 81) / 4.0;
    CHECK(s[0].skewness == doctest::Approx(m3 / std::pow(m2, 1.5)));
    CHECK(s[0].excess_kurtosis == doctest::Approx(m4 / (m2 * m2) - 3.0));
}
