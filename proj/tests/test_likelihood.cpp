#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "sgmvar/likelihood.hpp"
#include "support.hpp"

using namespace sgmvar;
using testing::mat;
using testing::vec;

namespace {

double normal_logpdf(double x, double mean, double var) {
    return -0.5 * std::log(2 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::VectorXd r = x - mean;
    return -0.5 * x.size() * std::log(2 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) -
           0.5 * r.dot(cov.inverse() * r);
}

/// Straightforward p = 1 mixture log-likelihood with dense inverses.
double brute_loglik_p1(const ModelParameters& m, const Eigen::MatrixXd& data, bool exact) {
    const int M = m.dims.M;
    auto stat = [&](int k) {
        const auto& r = m.regimes[k];
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m.dims.d, m.dims.d);
        const Eigen::VectorXd mu = (I - r.A[0]).inverse() * r.phi0;
        // vec(S) = (I - A kron A)^-1 vec(Omega)
        const int d = m.dims.d;
        Eigen::MatrixXd K(d * d, d * d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) K.block(i * d, j * d, d, d) = r.A[0](i, j) * r.A[0];
        const Eigen::VectorXd vs = (Eigen::MatrixXd::Identity(d * d, d * d) - K).inverse() *
                                   Eigen::Map<const Eigen::VectorXd>(r.omega.data(), d * d);
        return std::make_pair(mu, Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(vs.data(), d, d)));
    };
    double total = 0.0;
    auto log_mix = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd l(M);
        for (int k = 0; k < M; ++k) {
            const auto [mu, S] = stat(k);
            l[k] = std::log(m.alpha[k]) + mvn_logpdf(y, mu, S);
        }
        return l;
    };
    if (exact) {
        const Eigen::VectorXd l = log_mix(data.row(0).transpose());
        total += std::log(l.array().exp().sum());
    }
    for (int t = 1; t < data.rows(); ++t) {
        const Eigen::VectorXd prev = data.row(t - 1).transpose();
        const Eigen::VectorXd lw = log_mix(prev);
        const Eigen::VectorXd w = lw.array().exp() / lw.array().exp().sum();
        double dens = 0.0;
        for (int k = 0; k < M; ++k) {
            const auto& r = m.regimes[k];
            dens += w[k] * std::exp(mvn_logpdf(data.row(t).transpose(), r.phi0 + r.A[0] * prev, r.omega));
        }
        total += std::log(dens);
    }
    return total;
}

}  // namespace

TEST_CASE("one-regime scalar AR(1) exact likelihood has the Gaussian closed form") {
    const auto m = testing::scalar_ar(0.3, {0.8}, 0.5);
    const auto data = simulate(m, 50, InitialCondition::stationary(), 2).full_data();
    double expected = normal_logpdf(data(0, 0), 1.5, 0.5 / (1 - 0.64));
    for (int t = 1; t < data.rows(); ++t) expected += normal_logpdf(data(t, 0), 0.3 + 0.8 * data(t - 1, 0), 0.5);
    const auto ll = exact_loglik(m, data);
    CHECK(ll.total == doctest::Approx(expected).epsilon(1e-13));
    CHECK(ll.per_observation.size() == 50);
    CHECK(ll.initial_term == doctest::Approx(normal_logpdf(data(0, 0), 1.5, 0.5 / 0.36)).epsilon(1e-13));
}

TEST_CASE("mixture likelihood matches a dense brute-force evaluation") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        const auto m = testing::random_model({2, 1, 3}, rng);
        const auto data = simulate(m, 40, InitialCondition::stationary(), 50 + rep).full_data();
        CHECK(exact_loglik(m, data).total == doctest::Approx(brute_loglik_p1(m, data, true)).epsilon(1e-11));
        CHECK(conditional_loglik(m, data).total == doctest::Approx(brute_loglik_p1(m, data, false)).epsilon(1e-11));
    }
}

TEST_CASE("exact likelihood is conditional plus the initial term") {
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 10; ++rep) {
        const Dimensions dims{1 + rep % 3, 1 + rep % 2, 1 + rep % 3};
        const auto m = testing::random_model(dims, rng);
        const auto data = simulate(m, 30, InitialCondition::stationary(), rep).full_data();
        const auto ex = exact_loglik(m, data);
        const auto co = conditional_loglik(m, data);
        CHECK(co.initial_term == 0.0);
        CHECK(std::abs(ex.total - (co.total + ex.initial_term)) < 1e-10);
        CHECK(std::abs(ex.per_observation.sum() - co.total) < 1e-10);
        CHECK(loglik(m, data, LikelihoodKind::Conditional).total == co.total);
    }
}

TEST_CASE("evaluator validates the data shape") {
    CHECK_THROWS(LikelihoodEvaluator(Eigen::MatrixXd::Zero(2, 2), 2));
    const LikelihoodEvaluator ev(mat(4, 1, {1, 2, 3, 4}), 2);
    CHECK(ev.T() == 2);
    CHECK(testing::max_abs(ev.histories().row(0) - mat(1, 2, {2, 1})) == 0.0);
    CHECK(testing::max_abs(ev.initial_block() - vec({2, 1})) == 0.0);
}

TEST_CASE("log weights rows are normalized") {
    const auto m = testing::gmvar12_fixture();
    const auto data = simulate(m, 25, InitialCondition::stationary(), 4).full_data();
    const LikelihoodEvaluator ev(data, 1);
    const Eigen::MatrixXd lw = ev.log_weights(PreparedModel(m));
    CHECK(((lw.array().exp().rowwise().sum()) - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("one-regime quantile residuals are Cholesky standardized errors") {
    SUBCASE("scalar") {
        const auto m = testing::scalar_ar(0.3, {0.8}, 0.5);
        const auto data = simulate(m, 20, InitialCondition::stationary(), 8).full_data();
        const auto qr = quantile_residuals(m, data);
        for (int t = 0; t < 20; ++t)
            CHECK(qr.values(t, 0) == doctest::Approx((data(t + 1, 0) - 0.3 - 0.8 * data(t, 0)) / std::sqrt(0.5)).epsilon(1e-9));
    }
    SUBCASE("bivariate") {
        auto m = testing::gmvar12_fixture();
        m.dims.M = 1;
        m.regimes.resize(1);
        m.alpha = vec({1.0});
        const auto data = simulate(m, 20, InitialCondition::stationary(), 8).full_data();
        const auto qr = quantile_residuals(m, data);
        const Eigen::MatrixXd L = m.regimes[0].omega.llt().matrixL();
        for (int t = 0; t < 20; ++t) {
            const Eigen::VectorXd u = data.row(t + 1).transpose() - m.regimes[0].phi0 -
                                      m.regimes[0].A[0] * data.row(t).transpose();
            const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(u);
            CHECK(testing::max_abs(qr.values.row(t).transpose() - z) < 1e-8);
        }
        CHECK(qr.clamped == 0);
    }
}

TEST_CASE("mixture quantile residuals follow the sequential conditional CDFs") {
    ModelParameters m;
    m.dims = {1, 1, 2};
    m.regimes = {testing::scalar_ar(0.0, {0.5}, 1.0).regimes[0], testing::scalar_ar(2.0, {0.2}, 2.0).regimes[0]};
    m.alpha = vec({0.3, 0.7});
    const auto data = simulate(m, 15, InitialCondition::stationary(), 12).full_data();
    const auto qr = quantile_residuals(m, data);
    for (int t = 1; t < data.rows(); ++t) {
        const auto w = mixing_weights(data.row(t - 1), m).weights;
        const double y = data(t, 0);
        const double x = data(t - 1, 0);
        const double cdf = w[0] * 0.5 * std::erfc(-(y - 0.5 * x) / std::sqrt(2.0)) +
                           w[1] * 0.5 * std::erfc(-(y - 2.0 - 0.2 * x) / std::sqrt(4.0));
        // invert with bisection as an independent quantile function
        double lo = -40.0;
        double hi = 40.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (0.5 * std::erfc(-mid / std::sqrt(2.0)) < cdf ? lo : hi) = mid;
        }
        CHECK(qr.values(t - 1, 0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
    }
}
