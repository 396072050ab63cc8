#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sgmvar/model.hpp"
#include "sgmvar/types.hpp"

namespace testing {

using sgmvar::Dimensions;
using sgmvar::ModelParameters;
using sgmvar::Regime;

inline Eigen::MatrixXd mat(int rows, int cols, std::initializer_list<double> v) {
    Eigen::MatrixXd m(rows, cols);
    auto it = v.begin();
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = *it++;
    return m;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double a : v) x[i++] = a;
    return x;
}

inline Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng, double floor = 0.2) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = n(rng);
    Eigen::MatrixXd S = G * G.transpose() / d + floor * Eigen::MatrixXd::Identity(d, d);
    return 0.5 * (S + S.transpose());
}

/// AR matrices rescaled until the companion spectral radius is at most `radius`.
inline std::vector<Eigen::MatrixXd> random_stable_ar(int d, int p, std::mt19937_64& rng, double radius = 0.85) {
    std::normal_distribution<double> n(0.0, 0.4);
    std::vector<Eigen::MatrixXd> A(static_cast<std::size_t>(p), Eigen::MatrixXd(d, d));
    for (auto& a : A)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = n(rng);
    double r = sgmvar::validate_stability(A).spectral_radius;
    while (r > radius) {
        const double s = radius / r;
        double f = 1.0;
        for (auto& a : A) {
            f *= s;
            a *= f;
        }
        r = sgmvar::validate_stability(A).spectral_radius;
    }
    return A;
}

inline ModelParameters random_model(const Dimensions& dims, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    ModelParameters m;
    m.dims = dims;
    double total = 0.0;
    m.alpha.resize(dims.M);
    for (int k = 0; k < dims.M; ++k) {
        Regime r;
        r.phi0 = Eigen::VectorXd(dims.d);
        for (int i = 0; i < dims.d; ++i) r.phi0[i] = n(rng);
        r.A = random_stable_ar(dims.d, dims.p, rng);
        r.omega = random_spd(dims.d, rng);
        m.regimes.push_back(std::move(r));
        m.alpha[k] = u(rng);
        total += m.alpha[k];
    }
    m.alpha /= total;
    return m;
}

/// Two well separated regimes, d = 2, p = 1; alpha increasing in the regime index.
inline ModelParameters gmvar12_fixture() {
    ModelParameters m;
    m.dims = {2, 1, 2};
    Regime r1;
    r1.phi0 = vec({0.0, 0.0});
    r1.A = {mat(2, 2, {0.5, 0.1, 0.0, 0.3})};
    r1.omega = mat(2, 2, {0.6, 0.1, 0.1, 0.4});
    Regime r2;
    r2.phi0 = vec({2.4, -1.2});
    r2.A = {mat(2, 2, {0.2, -0.1, 0.1, 0.4})};
    r2.omega = mat(2, 2, {1.5, -0.3, -0.3, 1.0});
    m.regimes = {r1, r2};
    m.alpha = vec({0.4, 0.6});
    return m;
}

/// Scalar AR(p) as a one-regime model.
inline ModelParameters scalar_ar(double phi0, std::vector<double> a, double sigma2) {
    ModelParameters m;
    m.dims = {1, static_cast<int>(a.size()), 1};
    Regime r;
    r.phi0 = vec({phi0});
    for (double x : a) r.A.push_back(mat(1, 1, {x}));
    r.omega = mat(1, 1, {sigma2});
    m.regimes = {r};
    m.alpha = vec({1.0});
    return m;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing
