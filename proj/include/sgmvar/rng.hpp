#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace sgmvar {

using Rng = std::mt19937_64;

/// Independent generator for substream `stream` of a master seed. Rounds,
/// outer GIRF repetitions etc. each take their own stream so results do not
/// depend on scheduling.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5347u};
    return Rng(seq);
}

inline Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> z;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = z(rng);
    return out;
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Index drawn from a probability vector using a single uniform `u`.
inline int categorical(const Eigen::VectorXd& probs, double u) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    // u landed in the rounding slack above the cumulative sum
    for (Eigen::Index i = probs.size() - 1; i >= 0; --i)
        if (probs[i] > 0.0) return static_cast<int>(i);
    return 0;
}

}  // namespace sgmvar
