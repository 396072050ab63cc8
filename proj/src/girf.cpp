#include "sgmvar/girf.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "sgmvar/error.hpp"
#include "sgmvar/parallel.hpp"
#include "sgmvar/rng.hpp"
#include "sgmvar/structural.hpp"

namespace sgmvar {

namespace {

double quantile_type7(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Eigen::VectorXd shift_history(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd out(x.size());
    const Eigen::Index d = y.size();
    out.head(d) = y;
    if (x.size() > d) out.tail(x.size() - d) = x.head(x.size() - d);
    return out;
}

struct PathDraws {
    Eigen::MatrixXd eps;      // d x (H+1)
    Eigen::VectorXd uniforms;  // H+1
};

class GirfSimulator {
public:
    GirfSimulator(const ModelParameters& model, const GirfSpec& spec)
        : pm_(model), spec_(spec), d_(model.dims.d), M_(model.dims.M), H_(spec.horizon) {
        const StructuralParams& s = *model.structural;
        W_ = s.W;
        Winv_ = s.W.partialPivLu().inverse();
        for (int m = 0; m < M_; ++m) {
            sqrt_lambda_.push_back(s.lambda(m).cwiseSqrt());
            lambda_.push_back(s.lambda(m));
        }
    }

    // (H+1) x (d+M) difference between the shocked and baseline paths.
    Eigen::MatrixXd difference(const Eigen::VectorXd& x0, const Eigen::VectorXd& w0, const PathDraws& dr) const {
        const int m0 = categorical(w0, dr.uniforms[0]);
        Eigen::VectorXd mix = Eigen::VectorXd::Zero(d_);
        for (int m = 0; m < M_; ++m) mix += w0[m] * lambda_[static_cast<std::size_t>(m)];
        const Eigen::VectorXd bscale = mix.cwiseSqrt();
        const Eigen::VectorXd u = W_ * sqrt_lambda_[static_cast<std::size_t>(m0)].cwiseProduct(dr.eps.col(0));
        Eigen::VectorXd e = (Winv_ * u).cwiseQuotient(bscale);
        e[spec_.shock - 1] = spec_.magnitude;
        const Eigen::VectorXd ustar = W_ * bscale.cwiseProduct(e);

        Eigen::MatrixXd out(H_ + 1, d_ + M_);
        Eigen::VectorXd xs = x0;
        Eigen::VectorXd xb = x0;
        Eigen::VectorXd ws = w0;
        Eigen::VectorXd wb = w0;
        for (int h = 0; h <= H_; ++h) {
            Eigen::VectorXd ys;
            Eigen::VectorXd yb;
            if (h == 0) {
                ys = pm_.conditional_mean(m0, xs) + ustar;
                yb = pm_.conditional_mean(m0, xb) + u;
            } else {
                ws = pm_.log_mixing_weights(xs).array().exp();
                wb = pm_.log_mixing_weights(xb).array().exp();
                const int ms = categorical(ws, dr.uniforms[h]);
                const int mb = categorical(wb, dr.uniforms[h]);
                ys = pm_.conditional_mean(ms, xs) +
                     W_ * sqrt_lambda_[static_cast<std::size_t>(ms)].cwiseProduct(dr.eps.col(h));
                yb = pm_.conditional_mean(mb, xb) +
                     W_ * sqrt_lambda_[static_cast<std::size_t>(mb)].cwiseProduct(dr.eps.col(h));
            }
            out.block(h, 0, 1, d_) = (ys - yb).transpose();
            out.block(h, d_, 1, M_) = (ws - wb).transpose();
            xs = shift_history(xs, ys);
            xb = shift_history(xb, yb);
        }
        return out;
    }

    const PreparedModel& prepared() const { return pm_; }

private:
    PreparedModel pm_;
    const GirfSpec& spec_;
    int d_;
    int M_;
    int H_;
    Eigen::MatrixXd W_;
    Eigen::MatrixXd Winv_;
    std::vector<Eigen::VectorXd> sqrt_lambda_;
    std::vector<Eigen::VectorXd> lambda_;
};

}  // namespace

void validate_girf_spec(const GirfSpec& spec, const Dimensions& dims) {
    if (spec.shock < 1 || spec.shock > dims.d) throw DimensionError("girf: shock index must lie in 1..d");
    if (spec.horizon < 0) throw InvalidParameters("girf: horizon must be non-negative");
    if (spec.inner_reps < 1 || spec.outer_reps < 1) throw InvalidParameters("girf: repetitions must be positive");
    if (!std::isfinite(spec.magnitude)) throw InvalidParameters("girf: shock magnitude must be finite");
    for (std::size_t i = 0; i < spec.quantiles.size(); ++i) {
        const double q = spec.quantiles[i];
        if (!(q > 0.0 && q < 1.0)) throw InvalidParameters("girf: quantiles must lie in (0, 1)");
        if (i > 0 && !(q > spec.quantiles[i - 1])) throw InvalidParameters("girf: quantiles must be increasing");
    }
    for (int v : spec.accumulate)
        if (v < 1 || v > dims.d) throw DimensionError("girf: accumulate index must lie in 1..d");
    if (spec.init.kind == InitialCondition::Kind::Fixed &&
        (spec.init.history.rows() != dims.p || spec.init.history.cols() != dims.d))
        throw DimensionError("girf: fixed history must be p x d");
    if (spec.init.kind == InitialCondition::Kind::RegimeStationary &&
        (spec.init.regime < 0 || spec.init.regime >= dims.M))
        throw DimensionError("girf: initial regime out of range");
    if (spec.scaling) {
        if (spec.scaling->variable < 1 || spec.scaling->variable > dims.d)
            throw DimensionError("girf: scaling variable must lie in 1..d");
        if (spec.scaling->window < 1) throw InvalidParameters("girf: scaling window must be positive");
        if (spec.scaling->target == 0.0) throw InvalidParameters("girf: scaling target must be non-zero");
    }
}

GirfResult estimate_girf(const ModelParameters& model, const GirfSpec& spec) {
    if (!model.structural) throw InvalidParameters("girf: the model has no structural parameters (W, lambda)");
    validate_girf_spec(spec, model.dims);
    const GirfSimulator sim(model, spec);
    const auto& dm = model.dims;
    const int H = spec.horizon;
    const int cols = dm.d + dm.M;
    const bool fixed = spec.init.kind == InitialCondition::Kind::Fixed;
    const int R2 = fixed ? 1 : spec.outer_reps;
    const int units = spec.antithetic ? (spec.inner_reps + 1) / 2 : spec.inner_reps;

    std::vector<Eigen::MatrixXd> per_init(static_cast<std::size_t>(R2));
    std::vector<Eigen::MatrixXd> inner_var(static_cast<std::size_t>(R2));
    parallel_for(per_init.size(), static_cast<unsigned>(std::max(spec.threads, 0)), [&](std::size_t r) {
        Rng rng = make_rng(spec.seed, r + 1);
        Eigen::VectorXd x0;
        switch (spec.init.kind) {
            case InitialCondition::Kind::Fixed: x0 = stack_history(spec.init.history); break;
            case InitialCondition::Kind::StationaryMixture: x0 = sim.prepared().draw_stationary_history(rng); break;
            case InitialCondition::Kind::RegimeStationary:
                x0 = sim.prepared().draw_regime_history(spec.init.regime, rng);
                break;
        }
        const Eigen::VectorXd w0 = sim.prepared().log_mixing_weights(x0).array().exp();
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(H + 1, cols);
        Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(H + 1, cols);
        PathDraws dr;
        dr.eps.resize(dm.d, H + 1);
        dr.uniforms.resize(H + 1);
        for (int i = 0; i < units; ++i) {
            for (int h = 0; h <= H; ++h) dr.eps.col(h) = standard_normal(rng, dm.d);
            for (int h = 0; h <= H; ++h) dr.uniforms[h] = uniform01(rng);
            Eigen::MatrixXd diff = sim.difference(x0, w0, dr);
            if (spec.antithetic) {
                dr.eps = -dr.eps;
                diff = 0.5 * (diff + sim.difference(x0, w0, dr));
            }
            sum += diff;
            sumsq += diff.cwiseAbs2();
        }
        Eigen::MatrixXd mean = sum / units;
        for (int v : spec.accumulate)
            for (int h = 1; h <= H; ++h) mean(h, v - 1) += mean(h - 1, v - 1);
        per_init[r] = mean;
        inner_var[r] = units > 1 ? Eigen::MatrixXd(((sumsq / units) - (sum / units).cwiseAbs2()).cwiseMax(0.0) *
                                                   (static_cast<double>(units) / (units - 1)))
                                 : Eigen::MatrixXd::Zero(H + 1, cols);
    });

    GirfResult out;
    out.inner_reps_used = spec.antithetic ? 2 * units : units;
    out.outer_reps_used = R2;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(H + 1, cols);
    for (const auto& g : per_init) total += g;
    total /= R2;
    out.point = total.leftCols(dm.d);
    out.weights_point = total.rightCols(dm.M);

    if (R2 == 1) {
        out.mc_std_error = (inner_var[0] / units).cwiseSqrt();
        // summed standard errors bound the error of a cumulative response
        for (int v : spec.accumulate)
            for (int h = 1; h <= H; ++h) out.mc_std_error(h, v - 1) += out.mc_std_error(h - 1, v - 1);
    } else {
        Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(H + 1, cols);
        for (const auto& g : per_init) ss += (g - total).cwiseAbs2();
        out.mc_std_error = (ss / (R2 - 1) / R2).cwiseSqrt();
    }

    for (double q : spec.quantiles) {
        GirfBand band;
        band.quantile = q;
        band.values.resize(H + 1, cols);
        if (R2 == 1) {
            band.values = per_init[0];
        } else {
            std::vector<double> cell(static_cast<std::size_t>(R2));
            for (int h = 0; h <= H; ++h)
                for (int c = 0; c < cols; ++c) {
                    for (int r = 0; r < R2; ++r) cell[static_cast<std::size_t>(r)] = per_init[static_cast<std::size_t>(r)](h, c);
                    band.values(h, c) = quantile_type7(cell, q);
                }
        }
        out.bands.push_back(std::move(band));
    }
    if (spec.keep_per_init) out.per_init = std::move(per_init);
    if (spec.scaling) return scale_girf(out, spec.scaling->variable, spec.scaling->target, spec.scaling->window);
    return out;
}

GirfResult scale_girf(const GirfResult& result, int variable, double target, int window) {
    if (variable < 1 || variable > result.point.cols()) throw DimensionError("scale_girf: variable index out of range");
    if (window < 1) throw InvalidParameters("scale_girf: window must be positive");
    if (target == 0.0 || !std::isfinite(target)) throw InvalidParameters("scale_girf: target must be non-zero");
    const int v = variable - 1;
    const int n = std::min<int>(window, static_cast<int>(result.point.rows()));
    const Eigen::VectorXd series = result.point.col(v).head(n);

    Eigen::Index at = 0;
    double peak = target > 0.0 ? series.maxCoeff(&at) : series.minCoeff(&at);
    if (peak == 0.0 || (peak > 0.0) != (target > 0.0)) {
        series.cwiseAbs().maxCoeff(&at);
        peak = series[at];
    }
    if (peak == 0.0) throw NumericalError("scale_girf: zero peak response within the window");

    const double f = target / peak;
    GirfResult out = result;
    out.point *= f;
    out.point(at, v) = target;
    out.weights_point *= f;
    for (auto& b : out.bands) b.values *= f;
    for (auto& g : out.per_init) g *= f;
    out.mc_std_error *= std::abs(f);
    return out;
}

}  // namespace sgmvar
