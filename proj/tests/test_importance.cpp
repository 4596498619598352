#include <algorithm>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "rtk/error.hpp"
#include "rtk/importance.hpp"
#include "support.hpp"

using namespace rtk;

TEST_CASE("importance weights must lie in [0,1]") {
    CHECK_THROWS_AS(ImportanceMap(2, 2, 1.5), ArgumentError);
    CHECK_THROWS_AS(ImportanceMap(2, 2, -0.1), ArgumentError);
}

TEST_CASE("constant image has zero saliency") {
    const auto s = saliency_global_contrast(RasterImage(7, 5, 0.4));
    CHECK(s.field().max() == 0.0);
}

TEST_CASE("rare colour stands out against a dominant one") {
    // 90% gray, 10% red.
    RasterImage img(10, 10, 0.5);
    for (int x = 0; x < 10; ++x) {
        img.at(x, 0, 0) = 1.0;
        img.at(x, 0, 1) = 0.0;
        img.at(x, 0, 2) = 0.0;
    }
    const auto s = saliency_global_contrast(img);
    // Both colours are kept (90% alone is below the 95% coverage target).
    // red: 0.9 * d, gray: 0.1 * d -> normalized to 1 and 0.
    CHECK(s.at(3, 0) == 1.0);
    CHECK(s.at(3, 5) == 0.0);
    CHECK(s.at(3, 0) > s.at(3, 5));
}

TEST_CASE("saliency depends only on colour statistics") {
    std::mt19937_64 rng(1);
    RasterImage img(12, 9);
    for (auto& v : img.data()) {
        v = test::uniform_int(rng, 0, 3) / 3.0;
    }
    const auto s = saliency_global_contrast(img);
    const auto sm = saliency_global_contrast(mirror_horizontal(img));
    CHECK(sm.field() == mirror_horizontal(s.field()));

    std::vector<int> order(12 * 9);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    RasterImage permuted(12, 9);
    for (int p = 0; p < 12 * 9; ++p) {
        const int q = order[static_cast<std::size_t>(p)];
        for (int c = 0; c < 3; ++c) {
            permuted.at(p % 12, p / 12, c) = img.at(q % 12, q / 12, c);
        }
    }
    const auto sp = saliency_global_contrast(permuted);
    for (int p = 0; p < 12 * 9; ++p) {
        const int q = order[static_cast<std::size_t>(p)];
        CHECK(sp.at(p % 12, p / 12) == s.at(q % 12, q / 12));
    }
}

TEST_CASE("merge is the per-pixel mean") {
    const std::vector<ImportanceMap> one{ImportanceMap(3, 2, 0.7)};
    CHECK(merge_importance(one) == one.front());
    const std::vector<ImportanceMap> two{ImportanceMap(3, 2, 0.4), ImportanceMap(3, 2, 0.8)};
    const auto m = merge_importance(two);
    for (double v : m.field().values()) {
        CHECK(v == doctest::Approx(0.6).epsilon(1e-15));
    }
    CHECK_THROWS_AS(merge_importance(std::vector<ImportanceMap>{}), ArgumentError);
    const std::vector<ImportanceMap> bad{ImportanceMap(3, 2, 0.4), ImportanceMap(2, 3, 0.8)};
    CHECK_THROWS_AS(merge_importance(bad), DimensionMismatchError);
}

TEST_CASE("merge stays within the input range") {
    std::mt19937_64 rng(2);
    std::vector<ImportanceMap> maps;
    for (int k = 0; k < 4; ++k) {
        maps.push_back(test::random_importance(rng, 8, 6));
    }
    const auto m = merge_importance(maps);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 8; ++x) {
            double lo = 1.0;
            double hi = 0.0;
            for (const auto& map : maps) {
                lo = std::min(lo, map.at(x, y));
                hi = std::max(hi, map.at(x, y));
            }
            CHECK(m.at(x, y) >= lo - 1e-15);
            CHECK(m.at(x, y) <= hi + 1e-15);
        }
    }
}

TEST_CASE("external masks map v/255") {
    CHECK(mask_from_png(encode_gray_png(ScalarField(4, 4, 1.0))).field().min() == 1.0);
    CHECK(mask_from_png(encode_gray_png(ScalarField(4, 4, 0.0))).field().max() == 0.0);
    ScalarField checker(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            checker.at(x, y) = (x + y) % 2;
        }
    }
    const auto dir = std::filesystem::temp_directory_path() / "rtk_mask_test";
    std::filesystem::create_directories(dir);
    write_file_bytes(dir / "m.png", encode_gray_png(checker));
    CHECK(load_external_mask(dir / "m.png").field() == checker);
    std::filesystem::remove_all(dir);

    std::mt19937_64 rng(3);
    const auto img = test::random_image(rng, 5, 5);
    const std::vector<ImportanceMap> masks{ImportanceMap(4, 4, 1.0)};
    CHECK_THROWS_AS(build_importance(img, masks), DimensionMismatchError);
}
