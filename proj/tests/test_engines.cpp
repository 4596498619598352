#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rtk/engines.hpp"
#include "rtk/error.hpp"
#include "rtk/maxflow.hpp"
#include "support.hpp"

using namespace rtk;

namespace {

ImportanceMap row_importance(std::initializer_list<double> values) {
    return ImportanceMap(ScalarField(static_cast<int>(values.size()), 1, std::vector<double>(values)));
}

}  // namespace

TEST_CASE("max-flow matches brute-force minimum cut") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = test::uniform_int(rng, 1, 7);
        std::vector<double> cs(static_cast<std::size_t>(n));
        std::vector<double> ct(static_cast<std::size_t>(n));
        std::vector<std::array<double, 3>> edges;
        MaxFlowGraph g(n);
        std::uniform_real_distribution<double> u(0.0, 2.0);
        for (int v = 0; v < n; ++v) {
            cs[static_cast<std::size_t>(v)] = u(rng);
            ct[static_cast<std::size_t>(v)] = u(rng);
            g.add_terminal_edges(v, cs[static_cast<std::size_t>(v)], ct[static_cast<std::size_t>(v)]);
        }
        for (int k = 0; k < 2 * n; ++k) {
            const int a = test::uniform_int(rng, 0, n - 1);
            const int b = test::uniform_int(rng, 0, n - 1);
            if (a != b) {
                const double cap = u(rng);
                edges.push_back({static_cast<double>(a), static_cast<double>(b), cap});
                g.add_edge(a, b, cap);
            }
        }
        double best = 1e300;
        for (int mask = 0; mask < (1 << n); ++mask) {
            // bit set = sink side
            double cut = 0.0;
            for (int v = 0; v < n; ++v) {
                cut += (mask >> v & 1) ? cs[static_cast<std::size_t>(v)] : ct[static_cast<std::size_t>(v)];
            }
            for (const auto& e : edges) {
                const int a = static_cast<int>(e[0]);
                const int b = static_cast<int>(e[1]);
                if (!(mask >> a & 1) && (mask >> b & 1)) {
                    cut += e[2];
                }
            }
            best = std::min(best, cut);
        }
        const double flow = g.solve();
        CHECK(flow == doctest::Approx(best).epsilon(1e-9));
        double cut = 0.0;
        for (int v = 0; v < n; ++v) {
            cut += g.in_source_set(v) ? ct[static_cast<std::size_t>(v)] : cs[static_cast<std::size_t>(v)];
        }
        for (const auto& e : edges) {
            if (g.in_source_set(static_cast<int>(e[0])) && !g.in_source_set(static_cast<int>(e[1]))) {
                cut += e[2];
            }
        }
        CHECK(cut == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("max-flow before solve is a state error") {
    MaxFlowGraph g(2);
    CHECK_THROWS_AS((void)g.in_source_set(0), StateError);
}

TEST_CASE("crop picks the best window with the documented tie-break") {
    const ScalarField profile(5, 1, {0, 1, 3, 2, 0});
    const auto win = find_best_window(profile, 3, 1);
    CHECK(win.x == 1);
    CHECK(win.retained == doctest::Approx(6.0));

    const ImportanceMap flat(6, 5, 0.3);
    const auto tie = find_best_window(flat.field(), 3, 2);
    CHECK(tie.x == 0);
    CHECK(tie.y == 0);

    ScalarField blob(10, 6, 0.0);
    for (int y = 1; y < 5; ++y) {
        for (int x = 4; x < 8; ++x) {
            blob.at(x, y) = 0.9;
        }
    }
    const auto full = find_best_window(blob, 4, 4);
    CHECK(full.x == 4);
    CHECK(full.y == 1);
    CHECK(full.retention() == doctest::Approx(1.0));
}

TEST_CASE("crop agrees with exhaustive window search") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = test::uniform_int(rng, 1, 32);
        const int h = test::uniform_int(rng, 1, 32);
        const auto f = test::random_field(rng, w, h);
        const int ww = test::uniform_int(rng, 1, w);
        const int wh = test::uniform_int(rng, 1, h);
        const auto got = find_best_window(f, ww, wh);
        const auto want = oracle::best_window(f, ww, wh);
        CHECK(got.x == want.x);
        CHECK(got.y == want.y);
        CHECK(got.retained == doctest::Approx(want.sum).epsilon(1e-12));
    }
}

TEST_CASE("seam energy matches the reference formula") {
    std::mt19937_64 rng(5);
    const auto img = test::random_image(rng, 7, 5);
    const auto imp = test::random_importance(rng, 7, 5);
    const auto got = seam_energy(img, imp, 2.0);
    const auto want = oracle::seam_energy(img, imp, 2.0);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) {
            CHECK(got.at(x, y) == doctest::Approx(want.at(x, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("seam search on the 3x3 grid") {
    const ScalarField e(3, 3, {1, 2, 3, 4, 1, 2, 3, 4, 1});
    CHECK(oracle::count_seams(3, 3) == 17);
    const auto seam = find_vertical_seam(e);
    CHECK(seam.columns == std::vector<int>{0, 1, 2});
    CHECK(seam.energy == doctest::Approx(3.0));
    CHECK(oracle::min_seam_energy(e) == doctest::Approx(3.0));
}

TEST_CASE("first seam equals exhaustive enumeration") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = test::uniform_int(rng, 2, 6);
        const int h = test::uniform_int(rng, 1, 6);
        const auto img = test::random_image(rng, w, h);
        const auto imp = test::random_importance(rng, w, h);
        SeamCarver carver(img, imp, 2.0);
        const auto seam = carver.remove_one();
        CHECK(seam.energy == doctest::Approx(oracle::min_seam_energy(oracle::seam_energy(img, imp, 2.0))).epsilon(1e-12));
    }
}

TEST_CASE("band-updated seam energy equals a full recompute") {
    std::mt19937_64 rng(13);
    const auto img = test::random_image(rng, 20, 12);
    const auto imp = test::random_importance(rng, 20, 12);
    SeamCarver carver(img, imp, 2.0);
    for (int i = 0; i < 8; ++i) {
        carver.remove_one();
        const auto full = seam_energy(carver.image(), carver.importance(), 2.0);
        for (int y = 0; y < full.height(); ++y) {
            for (int x = 0; x < full.width(); ++x) {
                REQUIRE(carver.energy().at(x, y) == doctest::Approx(full.at(x, y)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("seam carving edge cases") {
    std::mt19937_64 rng(1);
    const auto img = test::random_image(rng, 6, 4);
    const auto imp = test::random_importance(rng, 6, 4);
    CHECK(seam_carve(img, imp, 0, SeamAxis::vertical).image == img);
    CHECK_THROWS_AS(seam_carve(img, imp, 6, SeamAxis::vertical), ArgumentError);

    const RasterImage flat(5, 4, 0.5);
    const ImportanceMap zero(5, 4, 0.0);
    SeamCarver carver(flat, zero, 2.0);
    CHECK(carver.remove_one().columns == std::vector<int>(4, 0));

    const auto horiz = seam_carve(img, imp, 2, SeamAxis::horizontal);
    CHECK(horiz.image.width() == 6);
    CHECK(horiz.image.height() == 2);
}

TEST_CASE("column widths: closed-form case and residuals") {
    const std::vector<double> rest{10, 10};
    const std::vector<double> s{3, 1};
    const auto sol = solve_column_widths(rest, s, 10, 1.0);
    CHECK(sol.widths[0] == doctest::Approx(7.5).epsilon(1e-12));
    CHECK(sol.widths[1] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(sol.constraint_residual < 1e-6);
    CHECK(sol.kkt_residual < 1e-6);

    const auto same = solve_column_widths(rest, s, 20, 1.0);
    CHECK(same.objective == doctest::Approx(0.0));
    CHECK(same.widths[0] == doctest::Approx(10.0));

    CHECK_THROWS_AS(solve_column_widths(rest, s, 1.5, 1.0), InfeasibleError);
}

TEST_CASE("column widths: active bounds stay dual feasible") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = test::uniform_int(rng, 2, 25);
        std::vector<double> rest(static_cast<std::size_t>(n));
        std::vector<double> s(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            rest[static_cast<std::size_t>(j)] = test::uniform_int(rng, 2, 12);
            s[static_cast<std::size_t>(j)] = u(rng);
            total += rest[static_cast<std::size_t>(j)];
        }
        const double target = n + (total - n) * u(rng);
        const auto sol = solve_column_widths(rest, s, target, 1.0);
        CHECK(sol.constraint_residual < 1e-6);
        CHECK(sol.kkt_residual < 1e-6);
        CHECK(sol.dual_violation < 1e-6);
        for (double w : sol.widths) {
            CHECK(w >= 1.0 - 1e-12);
        }
    }
}

TEST_CASE("aad warp with uniform importance is a uniform scale of the columns") {
    std::mt19937_64 rng(19);
    const auto img = test::random_image(rng, 40, 6);
    const ImportanceMap imp(40, 6, 0.5);
    const auto out = aad_warp(img, imp, 20, 6);
    CHECK(out.result.width() == 20);
    CHECK(out.diagnostics.at("kkt_residual") < 1e-6);
    CHECK(out.diagnostics.at("clamped_columns") == 0.0);
    const auto scaled = uniform_scale(img, 20, 6);
    for (int x = 0; x < 20; ++x) {
        CHECK(out.result.at(x, 3, 1) == doctest::Approx(scaled.at(x, 3, 1)).epsilon(1e-9));
    }
}

TEST_CASE("shift-map drops the duplicated pixel") {
    RasterImage img(4, 1);
    const double colors[4][3] = {{0.2, 0.2, 0.2}, {0.2, 0.2, 0.2}, {0.9, 0.1, 0.1}, {0.1, 0.1, 0.9}};
    for (int x = 0; x < 4; ++x) {
        for (int c = 0; c < 3; ++c) {
            img.at(x, 0, c) = colors[x][c];
        }
    }
    const auto imp = row_importance({0, 0, 1, 1});
    const ShiftMapParams params;
    const ShiftMapProblem pb(img, imp, 3, params);
    const auto labels = optimize_shift_labels(pb, params);
    CHECK(labels.shifts == std::vector<int>{1, 1, 1});
    CHECK(pb.energy(labels).smoothness == 0.0);
    const auto out = render_shift_map(img, labels);
    CHECK(out.at(0, 0, 0) == 0.2);
    CHECK(out.at(1, 0, 0) == 0.9);
    CHECK(out.at(2, 0, 2) == 0.9);

    oracle::ShiftMapOracle o(img, imp, 3, params.data_weight, params.gradient_weight);
    CHECK(o.solve().energy == doctest::Approx(0.0));
}

TEST_CASE("shift-map zero reduction is the identity") {
    std::mt19937_64 rng(23);
    const auto img = test::random_image(rng, 5, 4);
    const auto imp = test::random_importance(rng, 5, 4);
    const auto out = shift_map(img, imp, 5);
    CHECK(out.result == img);
    CHECK(out.diagnostics.at("energy") == 0.0);
}

TEST_CASE("shift-map removes a zero-importance uniform stripe") {
    RasterImage img(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = x < 2 ? 0.3 : 0.7;
            }
        }
        img.at(2, y, 0) = 0.7;  // stripe shares the right-hand colour
    }
    ScalarField w(4, 4, 1.0);
    for (int y = 0; y < 4; ++y) {
        w.at(2, y) = 0.0;
    }
    const ImportanceMap imp(w);
    const ShiftMapParams params;
    const ShiftMapProblem pb(img, imp, 3, params);
    const auto labels = optimize_shift_labels(pb, params);
    for (int y = 0; y < 4; ++y) {
        CHECK(labels.at(0, y) == 0);
        CHECK(labels.at(1, y) == 0);
        CHECK(labels.at(2, y) == 1);
    }
    oracle::ShiftMapOracle o(img, imp, 3, params.data_weight, params.gradient_weight);
    const auto opt = o.solve();
    CHECK(pb.energy(labels).total() == doctest::Approx(opt.energy).epsilon(1e-12));
    for (const auto& row : opt.rows) {
        CHECK(row == std::vector<int>{0, 0, 1});
    }
}

TEST_CASE("shift-map energy equals exhaustive enumeration") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = test::uniform_int(rng, 3, 6);
        const int h = test::uniform_int(rng, 1, 6);
        const int r = test::uniform_int(rng, 1, std::min(2, w / 2));
        auto img = test::random_image(rng, w, h);
        if (trial % 2 == 1) {
            for (auto& v : img.data()) {
                v = std::round(v * 2.0) / 2.0;
            }
        }
        const auto imp = test::random_importance(rng, w, h);
        const ShiftMapParams params;
        const ShiftMapProblem pb(img, imp, w - r, params);
        const auto labels = optimize_shift_labels(pb, params);
        CHECK(labels.is_monotone());
        oracle::ShiftMapOracle o(img, imp, w - r, params.data_weight, params.gradient_weight);
        std::vector<std::vector<int>> rows(static_cast<std::size_t>(h));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w - r; ++x) {
                rows[static_cast<std::size_t>(y)].push_back(labels.at(x, y));
            }
        }
        CHECK(pb.energy(labels).total() == doctest::Approx(o.energy(rows)).epsilon(1e-12));
        CHECK(o.energy(rows) == doctest::Approx(o.solve().energy).epsilon(1e-9));
    }
}

TEST_CASE("shift-map rejects reductions beyond half the width") {
    std::mt19937_64 rng(31);
    const auto img = test::random_image(rng, 8, 3);
    const auto imp = test::random_importance(rng, 8, 3);
    CHECK(shift_map(img, imp, 4).result.width() == 4);
    CHECK_THROWS_AS(shift_map(img, imp, 3), ArgumentError);
}

TEST_CASE("shift-map runs coarse-to-fine on wide images") {
    std::mt19937_64 rng(37);
    const auto img = test::random_image(rng, 300, 20);
    const auto imp = test::random_importance(rng, 300, 20);
    const auto out = shift_map(img, imp, 200);
    CHECK(out.result.width() == 200);
    CHECK(out.diagnostics.at("coarse_to_fine") == 1.0);
}

TEST_CASE("normalized cross-correlation conventions") {
    const ScalarField flat(4, 4, 0.3);
    const ScalarField flat2(4, 4, 0.8);
    std::mt19937_64 rng(41);
    const auto noisy = test::random_field(rng, 4, 4);
    CHECK(normalized_cross_correlation(flat, flat2) == 1.0);
    CHECK(normalized_cross_correlation(flat, noisy) == 0.0);
    CHECK(normalized_cross_correlation(noisy, noisy) == doctest::Approx(1.0));
}

TEST_CASE("multi-operator: zero reduction") {
    std::mt19937_64 rng(43);
    const auto img = test::random_image(rng, 12, 6);
    const auto imp = test::random_importance(rng, 12, 6);
    MultiOperatorTrace trace;
    const auto out = multi_operator(img, imp, 12, {}, &trace);
    CHECK(out.result == img);
    CHECK(out.diagnostics.at("score") == 1.0);
}

TEST_CASE("multi-operator: constant image ties resolve to pure seam carving") {
    const RasterImage img(16, 8, 0.4);
    const ImportanceMap imp(16, 8, 0.5);
    MultiOperatorTrace trace;
    const auto out = multi_operator(img, imp, 8, {}, &trace);
    CHECK(trace.candidates.size() == 15);
    const auto& chosen = trace.candidates[trace.selected];
    CHECK(chosen.mix.crop == 0.0);
    CHECK(chosen.mix.seam == 1.0);
    CHECK(chosen.mix.scale == 0.0);
    for (const auto& c : trace.candidates) {
        CHECK(c.retention == doctest::Approx(chosen.retention).epsilon(1e-12));
    }
    CHECK(out.result.width() == 8);
}

TEST_CASE("multi-operator: importance inside a centred window") {
    // Constant background, important block of exactly the target width
    // holding a vertical ramp.
    const int w = 24;
    const int tw = 12;
    RasterImage img(w, 10, 0.5);
    ScalarField weights(w, 10, 0.0);
    for (int y = 0; y < 10; ++y) {
        for (int x = 6; x < 18; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = 0.05 + 0.1 * y;
            }
            weights.at(x, y) = 1.0;
        }
    }
    const ImportanceMap imp(weights);
    MultiOperatorTrace trace;
    const auto out = multi_operator(img, imp, tw, {}, &trace);
    const auto pure_crop = std::find_if(trace.candidates.begin(), trace.candidates.end(),
                                        [](const auto& c) { return c.mix.crop == 1.0; });
    REQUIRE(pure_crop != trace.candidates.end());
    CHECK(pure_crop->retention == doctest::Approx(1.0));
    CHECK(trace.candidates[trace.selected].score == doctest::Approx(pure_crop->score).epsilon(1e-12));
    CHECK(out.result == crop_window(img, 6, 0, tw, 10));
}

TEST_CASE("dispatch: identity, fixed crop size and short form names") {
    std::mt19937_64 rng(53);
    RetargetJob job{test::random_image(rng, 100, 50), test::random_importance(rng, 100, 50), EngineId::crop, 100, 50};
    for (auto id : kAllEngines) {
        job.engine = id;
        CHECK(retarget(job).result == job.source);
    }
    job.engine = EngineId::crop;
    job.target_width = 50;
    CHECK(retarget(job).result.width() == 50);
    CHECK(parse_engine("shiftmap") == EngineId::shift_map);
    CHECK(parse_engine("mo") == EngineId::multi_operator);
    CHECK_THROWS_AS(parse_engine("bds"), ArgumentError);

    RetargetJob narrow{test::random_image(rng, 8, 5), test::random_importance(rng, 8, 5), EngineId::shift_map, 4, 5};
    CHECK(retarget(narrow).result.width() == 4);
}

TEST_CASE("dispatch: invalid jobs") {
    std::mt19937_64 rng(59);
    RetargetJob job{test::random_image(rng, 20, 20), test::random_importance(rng, 20, 20), EngineId::crop, 10, 10};
    CHECK_THROWS_AS(retarget(job), ArgumentError);
    job.target_width = 30;
    job.target_height = 20;
    CHECK_THROWS_AS(retarget(job), ArgumentError);
    job.target_width = 3;
    CHECK_THROWS_AS(retarget(job), ArgumentError);
    job.target_width = 10;
    job.importance = test::random_importance(rng, 19, 20);
    CHECK_THROWS_AS(retarget(job), DimensionMismatchError);
}

TEST_CASE("dispatch: every engine hits the exact target size") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        const int w = test::uniform_int(rng, 8, 40);
        const int h = test::uniform_int(rng, 8, 40);
        RetargetJob job{test::random_image(rng, w, h), test::random_importance(rng, w, h),
                        kAllEngines[static_cast<std::size_t>(trial % 4)], w, h};
        if (trial % 3 == 0) {
            job.target_height = test::uniform_int(rng, std::max(kMinTargetExtent, (h + 1) / 2), h);
        } else {
            job.target_width = test::uniform_int(rng, std::max(kMinTargetExtent, (w + 1) / 2), w);
        }
        const auto out = retarget(job);
        CHECK(out.result.width() == job.target_width);
        CHECK(out.result.height() == job.target_height);
    }
}
