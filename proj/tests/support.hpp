#pragma once

#include <random>

#include "rtk/imaging.hpp"
#include "rtk/importance.hpp"

namespace rtk::test {

inline RasterImage random_image(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RasterImage img(w, h);
    for (auto& v : img.data()) {
        v = u(rng);
    }
    return img;
}

inline ScalarField random_field(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScalarField f(w, h);
    for (auto& v : f.values()) {
        v = u(rng);
    }
    return f;
}

inline ImportanceMap random_importance(std::mt19937_64& rng, int w, int h) {
    return ImportanceMap(random_field(rng, w, h));
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace rtk::test
