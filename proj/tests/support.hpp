#pragma once

#include <cmath>
#include <random>

#include "qba/correction.hpp"

namespace qba::testing {

inline constexpr int kCases = 2000;

inline double rel_err(double got, double want) {
    if (got == want) return 0.0;
    return std::fabs(got - want) / std::fabs(want);
}

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    /// Table whose four cells each hold at least `min_share` of their arm.
    ObservedTable table(double min_share = 0.001) {
        const double n1 = log_uniform(50.0, 2e6);
        const double n0 = log_uniform(50.0, 2e6);
        return {n1 * uniform(min_share, 1.0 - min_share), n0 * uniform(min_share, 1.0 - min_share), n1, n0};
    }

    /// Errors with se + sp - 1 >= min_youden.
    ArmErrors informative(double min_youden = 0.1) {
        for (;;) {
            ArmErrors e{uniform(0.05, 1.0), uniform(0.05, 1.0)};
            if (e.youden() >= min_youden) return e;
        }
    }

    ArmErrors any_errors() { return {uniform(0.0, 1.0), uniform(0.0, 1.0)}; }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace qba::testing
