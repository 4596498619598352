#pragma once

#include <cstdint>

namespace rtk {

/// Deterministic generator shared by the learners (fixed bit recipes, so the
/// same seed gives the same stream on every platform).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int below(int n);  // [0, n)
    double normal();

private:
    std::uint64_t state_;
};

}  // namespace rtk
