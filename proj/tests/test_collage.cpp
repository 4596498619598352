#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "collage_golden.hpp"
#include "doctest.h"
#include "rtk/collage.hpp"
#include "rtk/error.hpp"
#include "support.hpp"

using namespace rtk;
using test::golden_images;
using test::golden_layout;

#ifndef RTK_GOLDEN_DIR
#define RTK_GOLDEN_DIR "tests/golden"
#endif

namespace {

long long area(const std::vector<Region>& rs) {
    long long a = 0;
    for (const auto& r : rs) a += static_cast<long long>(r.width) * r.height;
    return a;
}

}  // namespace

TEST_CASE("slice layout examples") {
    CHECK(slice_layout(100, 80, 1, std::uint64_t{1}) == std::vector<Region>{{0, 0, 100, 80}});
    const auto two = slice_layout(100, 100, 2, [] { return 0.5; });
    CHECK(two == std::vector<Region>{{0, 0, 50, 100}, {50, 0, 50, 100}});
    CHECK(slice_layout(300, 200, 7, std::uint64_t{9}) == slice_layout(300, 200, 7, std::uint64_t{9}));
    CHECK(kSplitLow == 0.35);
    CHECK(kSplitHigh == 0.65);
}

TEST_CASE("slice layouts tile the canvas") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        const int w = test::uniform_int(rng, 16, 400);
        const int h = test::uniform_int(rng, 16, 400);
        const int n = test::uniform_int(rng, 1, 12);
        std::vector<Region> rs;
        try {
            rs = slice_layout(w, h, n, rng());
        } catch (const LayoutError&) {
            CHECK(static_cast<long long>(w) * h < 2LL * n * kMinRegionSide * kMinRegionSide);
            continue;
        }
        REQUIRE(rs.size() == static_cast<std::size_t>(n));
        CHECK(area(rs) == static_cast<long long>(w) * h);
        CollageLayout layout{w, h, rs, {}};
        CHECK_NOTHROW(validate_layout(layout));
        for (const auto& r : rs) {
            CHECK(r.width >= kMinRegionSide);
            CHECK(r.height >= kMinRegionSide);
        }
    }
    CHECK_THROWS_AS(slice_layout(40, 40, 5, std::uint64_t{1}), LayoutError);
    CHECK_THROWS_AS(slice_layout(10, 40, 1, std::uint64_t{1}), LayoutError);
    CHECK_THROWS_AS(slice_layout(40, 40, 0, std::uint64_t{1}), ArgumentError);
}

TEST_CASE("layout validation") {
    CollageLayout gap{100, 100, {{0, 0, 50, 100}}, {}};
    CHECK_THROWS_AS(validate_layout(gap), LayoutError);
    CollageLayout overlap{100, 100, {{0, 0, 60, 100}, {50, 0, 50, 100}}, {}};
    CHECK_THROWS_AS(validate_layout(overlap), LayoutError);
    CollageLayout twice{100, 100, {{0, 0, 50, 100}, {50, 0, 50, 100}}, {"a", "a"}};
    CHECK_THROWS_AS(validate_layout(twice), LayoutError);
}

TEST_CASE("greedy assignment examples") {
    const std::vector<Region> regions = {{0, 0, 120, 100}, {120, 0, 190, 100}};  // aspects 1.2, 1.9
    const auto a = assign_by_retargetability({{"hi", 0.9, 2.0}, {"lo", 0.2, 2.0}}, regions);
    CHECK(a.region_image == std::vector<std::string>{"hi", "lo"});
    CHECK(a.trace.front().image_id == "lo");

    const std::vector<Region> same = {{0, 0, 50, 100}, {50, 0, 50, 100}};
    const auto b = assign_by_retargetability({{"x", 0.3, 0.5}, {"y", 0.1, 0.5}}, same);
    for (const auto& s : b.trace) CHECK(s.mismatch == 0.0);
    CHECK(b.region_image == std::vector<std::string>{"y", "x"});

    const auto c = assign_by_retargetability({{"only", 0.5, 9.0}}, {{0, 0, 20, 80}});
    CHECK(c.region_image == std::vector<std::string>{"only"});
    CHECK_THROWS_AS(assign_by_retargetability({{"only", 0.5, 1.0}}, regions), ArgumentError);
}

TEST_CASE("greedy property holds on random instances") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const int n = test::uniform_int(rng, 2, 9);
        const auto regions = slice_layout(400, 300, n, rng());
        std::vector<CollageItem> items;
        for (int i = 0; i < n; ++i) items.push_back({"i" + std::to_string(i), u(rng), std::exp(u(rng) * 2.0 - 1.0)});
        const auto a = assign_by_retargetability(items, regions);
        for (std::size_t s = 0; s < a.trace.size(); ++s) {
            const auto& step = a.trace[s];
            const auto& item = *std::find_if(items.begin(), items.end(),
                                             [&](const CollageItem& c) { return c.image_id == step.image_id; });
            if (s > 0) {
                const auto& prev = *std::find_if(items.begin(), items.end(), [&](const CollageItem& c) {
                    return c.image_id == a.trace[s - 1].image_id;
                });
                CHECK(prev.retargetability <= item.retargetability);
            }
            for (std::size_t later = s + 1; later < a.trace.size(); ++later) {
                const auto& r = regions[static_cast<std::size_t>(a.trace[later].region)];
                CHECK(step.mismatch <= aspect_mismatch(item.aspect, r.aspect()));
            }
        }
    }
}

TEST_CASE("shuffled baseline is a seeded permutation") {
    const auto regions = slice_layout(200, 200, 5, std::uint64_t{1});
    std::vector<CollageItem> items;
    for (int i = 0; i < 5; ++i) items.push_back({"i" + std::to_string(i), 0.1 * i, 1.0});
    const auto a = shuffled_assignment(items, regions, 4);
    CHECK(a.region_image == shuffled_assignment(items, regions, 4).region_image);
    auto sorted = a.region_image;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::string>{"i0", "i1", "i2", "i3", "i4"});
}

TEST_CASE("render fills regions from their images") {
    std::mt19937_64 rng(3);
    const auto img = test::random_image(rng, 40, 30);
    const std::vector<CollageImage> one = {{"a", img, ImportanceMap(40, 30, 0.5), EngineId::crop}};
    CHECK(render_collage({40, 30, {{0, 0, 40, 30}}, {"a"}}, one) == img);

    RasterImage red(30, 30);
    RasterImage blue(30, 30);
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 30; ++x) {
            red.at(x, y, 0) = 1.0;
            blue.at(x, y, 2) = 1.0;
        }
    }
    const std::vector<CollageImage> two = {{"r", red, ImportanceMap(30, 30, 0.0), EngineId::crop},
                                           {"b", blue, ImportanceMap(30, 30, 0.0), EngineId::aad_warp}};
    const CollageLayout layout{60, 40, {{0, 0, 24, 40}, {24, 0, 36, 40}}, {"b", "r"}};
    const auto out = render_collage(layout, two);
    CHECK(out.width() == 60);
    CHECK(out.height() == 40);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 60; ++x) {
            const bool left = x < 24;
            CHECK(out.at(x, y, 0) == doctest::Approx(left ? 0.0 : 1.0));
            CHECK(out.at(x, y, 2) == doctest::Approx(left ? 1.0 : 0.0));
        }
    }
    const CollageLayout missing{60, 40, {{0, 0, 24, 40}, {24, 0, 36, 40}}, {"b", "zz"}};
    CHECK_THROWS_AS(render_collage(missing, two), LayoutError);
}

TEST_CASE("engine failures name the region") {
    std::mt19937_64 rng(4);
    const auto img = test::random_image(rng, 100, 20);
    const std::vector<CollageImage> v = {{"wide", img, ImportanceMap(100, 20, 0.5), EngineId::shift_map}};
    const auto squeezed = render_collage({20, 20, {{0, 0, 20, 20}}, {"wide"}}, v);
    CHECK(squeezed.width() == 20);
    const std::vector<CollageImage> tiny = {{"wide", test::random_image(rng, 100, 2), ImportanceMap(100, 2, 0.5),
                                             EngineId::shift_map}};
    try {
        render_collage({3, 3, {{0, 0, 3, 3}}, {"wide"}}, tiny);
        FAIL("expected a layout error");
    } catch (const LayoutError& e) {
        CHECK(std::string(e.what()).find("region 0 ('wide', shift_map)") != std::string::npos);
    }
}

TEST_CASE("layout JSON round trip") {
    CollageLayout layout{160, 120, slice_layout(160, 120, 3, std::uint64_t{5}), {"a", "b", "c"}};
    const auto back = layout_from_json(layout_to_json(layout));
    CHECK(back.regions == layout.regions);
    CHECK(back.assignment == layout.assignment);
    CHECK(back.canvas_width == 160);
    CHECK_THROWS_AS(layout_from_json("{\"canvas\":{}}"), FormatError);
    CHECK_THROWS_AS(layout_from_json(R"({"canvas":{"w":10,"h":10},"regions":[{"x":0,"y":0,"w":5,"h":10}]})"),
                    LayoutError);
}

TEST_CASE("collage golden") {
    const auto images = golden_images();
    const auto layout = golden_layout(images);
    const auto out = render_collage(layout, images);
    CHECK(render_collage(golden_layout(golden_images()), golden_images()) == out);

    const std::filesystem::path golden = std::filesystem::path(RTK_GOLDEN_DIR) / "collage_4.png";
    if (std::getenv("RTK_UPDATE_GOLDEN") != nullptr) {
        save_png(golden, out);
    }
    REQUIRE(std::filesystem::exists(golden));
    const auto expected = load_image(golden);
    REQUIRE(expected.width() == out.width());
    REQUIRE(expected.height() == out.height());
    int diff = 0;
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        diff += std::lround(out.data()[i] * 255.0) != std::lround(expected.data()[i] * 255.0) ? 1 : 0;
    }
    CHECK(diff == 0);
}
