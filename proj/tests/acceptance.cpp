// Acceptance report: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "annoserve_oracle.hpp"
#include "collage_golden.hpp"
#include "mtl_experiments.hpp"
#include "oracles.hpp"
#include "rtk/annoserve.hpp"
#include "rtk/annotstats.hpp"
#include "rtk/engines.hpp"
#include "rtk/evalkit.hpp"
#include "rtk/features.hpp"
#include "rtk/imaging.hpp"
#include "rtk/mtlnet.hpp"
#include "support.hpp"

#ifndef RTK_GOLDEN_DIR
#define RTK_GOLDEN_DIR "tests/golden"
#endif

using namespace rtk;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failed checks so a criterion reports its first problem.
struct Checks {
    int failed = 0;
    std::string first;

    void operator()(bool ok, const std::string& what) {
        if (!ok && failed++ == 0) first = what;
    }
    Outcome outcome(const std::string& summary) const {
        if (failed == 0) return {true, summary};
        return {false, std::to_string(failed) + " failed check(s), first: " + first};
    }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = test::gradient_suite(NetShape::desk(16), 20, 120, 4, 12);
    const double secs = seconds_since(t0);
    Checks c;
    c(r.max_rel_error < 1e-4, "max relative error " + fmt("%.3g", r.max_rel_error));
    c(r.skipped * 100 < r.checked, "too many skipped components");
    c(secs < 30.0, "runtime " + fmt("%.1f s", secs));
    return c.outcome("max rel error " + fmt("%.2g", r.max_rel_error) + " over " + std::to_string(r.checked) +
                     " components, " + fmt("%.1f s", secs));
}

Outcome loss_formulas() {
    using test::all;
    using test::kTiny;
    Checks c;
    const double tol = 1e-9;
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(kTiny.input_dim, 0.2);
    c(near(loss_binary(test::constant_outputs(kTiny, 1.0), x, all(1), 0.0).value, 0.0, tol), "binary, all margins met");
    auto one = test::constant_outputs(kTiny, 1.0);
    one.branches()[0].b3 = -1.0;
    c(near(loss_binary(one, x, all(1), 0.0).value, 2.0, tol), "binary, one violated hinge");
    const NetShape small{2, kAttributeCount, 2, 1, 2};
    auto pen = test::constant_outputs(small, 1.0);
    pen.branches()[0].w2 << 3.0, 4.0;
    c(near(loss_binary(pen, Eigen::VectorXd::Zero(2), all(1), 1.0).value, 2.5, tol), "binary with l21 term");

    c(near(loss_relative(0.5, 0.2, 1, 0.1), 0.0, tol), "relative, margin met");
    c(near(loss_relative(0.52, 0.5, 1, 0.1), 0.08, tol), "relative, ordered pair");
    c(near(loss_relative(0.7, 0.5, 0, 0.1), 0.02, tol), "relative, similar pair");

    MtlNetwork groups(small, Variant::full);
    groups.branches()[0].w2 << 3.0, 4.0;
    groups.branches()[1].w2 << 5.0, 12.0;
    c(near(groups.group_norm(), 18.0, tol), "l21 penalty");
    c(near(groups.weight_norm(), std::sqrt(194.0), tol), "Frobenius norm");

    Hyperparams hp;
    hp.beta = 0.0;
    const MtlNetwork zero(kTiny, Variant::full);
    c(near(total_objective(zero, test::sample(kTiny, all(1), 0.5), test::sample(kTiny, all(-1), 0.5), hp), 14.0, tol),
      "total objective of the zero network");
    hp.alpha = 0.0;
    hp.beta = 0.37;
    const auto s = test::sample(kTiny, all(1), 0.25);
    auto net = test::constant_outputs(kTiny, 1.0);
    net.branches()[3].w1.setConstant(0.5);
    c(near(total_objective(net, s, s, hp), 0.37 * net.weight_norm(), tol), "total objective, regularizer only");
    return c.outcome("binary 0/2/2.5, relative 0/0.08/0.02, l21 18, norm sqrt(194), objective 14");
}

Outcome engine_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    Checks c;
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = test::uniform_int(rng, 2, 6);
        const int h = test::uniform_int(rng, 1, 6);
        const auto img = test::random_image(rng, w, h);
        const auto imp = test::random_importance(rng, w, h);
        SeamCarver carver(img, imp, 2.0);
        const double want = oracle::min_seam_energy(oracle::seam_energy(img, imp, 2.0));
        c(near(carver.remove_one().energy, want, 1e-12 * std::max(1.0, want)), "seam trial " + std::to_string(trial));
    }
    for (int trial = 0; trial < 50; ++trial) {
        const int w = test::uniform_int(rng, 1, 32);
        const int h = test::uniform_int(rng, 1, 32);
        const auto f = test::random_field(rng, w, h);
        const int ww = test::uniform_int(rng, 1, w);
        const int wh = test::uniform_int(rng, 1, h);
        const auto got = find_best_window(f, ww, wh);
        const auto want = oracle::best_window(f, ww, wh);
        c(got.x == want.x && got.y == want.y, "crop trial " + std::to_string(trial));
    }
    for (int trial = 0; trial < 20; ++trial) {
        const int w = test::uniform_int(rng, 3, 6);
        const int h = test::uniform_int(rng, 1, 6);
        const int r = test::uniform_int(rng, 1, std::min(2, w / 2));
        const auto img = test::random_image(rng, w, h);
        const auto imp = test::random_importance(rng, w, h);
        const ShiftMapParams params;
        const ShiftMapProblem pb(img, imp, w - r, params);
        const auto labels = optimize_shift_labels(pb, params);
        oracle::ShiftMapOracle o(img, imp, w - r, params.data_weight, params.gradient_weight);
        std::vector<std::vector<int>> rows(static_cast<std::size_t>(h));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w - r; ++x) rows[static_cast<std::size_t>(y)].push_back(labels.at(x, y));
        }
        const double best = o.solve().energy;
        c(labels.is_monotone() && near(pb.energy(labels).total(), best, 1e-9 * std::max(1.0, best)),
          "shift-map trial " + std::to_string(trial));
    }
    const std::vector<double> rest2{10, 10};
    const std::vector<double> s2{3, 1};
    const auto closed = solve_column_widths(rest2, s2, 10, 1.0);
    c(near(closed.widths[0], 7.5, 1e-12) && near(closed.widths[1], 2.5, 1e-12), "AAD closed form");
    double worst = std::max(closed.constraint_residual, closed.kkt_residual);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = test::uniform_int(rng, 2, 25);
        std::vector<double> rest(static_cast<std::size_t>(n));
        std::vector<double> s(static_cast<std::size_t>(n));
        double total = 0.0;
        for (std::size_t j = 0; j < rest.size(); ++j) {
            rest[j] = test::uniform_int(rng, 2, 12);
            s[j] = u(rng);
            total += rest[j];
        }
        const auto sol = solve_column_widths(rest, s, n + (total - n) * u(rng), 1.0);
        worst = std::max({worst, sol.constraint_residual, sol.kkt_residual});
    }
    c(worst < 1e-6, "AAD residual " + fmt("%.3g", worst));
    const double secs = seconds_since(t0);
    c(secs < 120.0, "runtime " + fmt("%.1f s", secs));
    return c.outcome("50 seams, 50 crops, 20 shift-maps exact; AAD (7.5, 2.5), residual " + fmt("%.2g", worst) + ", " +
                     fmt("%.1f s", secs));
}

Outcome dimensional_exactness() {
    Checks c;
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 200; ++trial) {
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
        c(out.result.width() == job.target_width && out.result.height() == job.target_height,
          std::string(engine_name(job.engine)) + " job " + std::to_string(trial));
    }
    return c.outcome("200 jobs over 4 engines");
}

Outcome statistics_oracles() {
    Checks c;
    c(kendalls_w({{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}}).w == 1.0, "W of identical rankings");
    c(near(kendalls_w({{1, 2, 3}, {1, 2, 3}, {3, 2, 1}}).w, 1.0 / 9.0, 1e-15), "W worked example");
    const std::vector<double> ref{2, 2, 2};
    const auto r = ridit_values(ref);
    c(near(r[0], 1.0 / 6.0, 1e-15) && near(r[1], 0.5, 1e-15) && near(r[2], 5.0 / 6.0, 1e-15), "ridit categories");
    const std::vector<RiditGroup> self{{"ref", ref}};
    const auto res = ridit_analysis(ref, self);
    c(res.groups.size() == 1 && near(res.groups[0].mean_ridit, 0.5, 1e-15), "ridit reference mean");
    c(near(rmse({1.0, 0.0}, {0.5, 0.5}), 0.5, 1e-12) && near(rmse({0.7}, {0.4}), 0.3, 1e-12), "rmse examples");
    c(near(roc_auc({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}, 0.95).auc, 0.75, 1e-12), "auc example");
    return c.outcome("W 1 and 1/9, ridit (1/6, 1/2, 5/6) mean 0.5, rmse 0.5/0.3, auc 0.75");
}

Outcome protocol_constants() {
    Checks c;
    c(level_score(RatingLevel::good) == 1.0 && level_score(RatingLevel::acceptable) == 0.5 &&
          level_score(RatingLevel::poor) == 0.0,
      "rating scale");
    std::vector<RatingRecord> recs;
    const double means[4][2] = {{0.5, 0.5}, {1.0, 1.0}, {0.5, 0.0}, {0.5, 0.5}};
    for (std::size_t m = 0; m < 4; ++m) {
        for (int k = 0; k < 2; ++k) {
            const double v = means[m][k];
            const auto level = v == 1.0 ? RatingLevel::good : (v == 0.5 ? RatingLevel::acceptable : RatingLevel::poor);
            recs.push_back({"x", kAllEngines[m], "r" + std::to_string(k), level, ""});
        }
    }
    c(aggregate_ratings(recs)[0].score() == 1.0, "MAX-De default");
    c(near(aggregate_ratings(recs, Aggregation::mean_de)[0].score(), (0.5 + 1.0 + 0.25 + 0.5) / 4.0, 1e-15),
      "MEAN-De switch");
    c(kDenseCrops == 10 && ExtractorSpec{}.crops == 10, "dense crops");
    const Hyperparams hp;
    c(hp.batch_size == 64 && hp.learning_rate == 0.01 && hp.dropout == 0.30, "SGD defaults");
    MtlNetwork net(test::kTiny, Variant::full);
    const std::vector<double> x(6, 0.1);
    bool clamped = true;
    for (double raw : {-0.2, 1.7, 0.42}) {
        net.head().b2 = raw;
        clamped = clamped && predict(net, x).retargetability == std::clamp(raw, 0.0, 1.0);
    }
    c(clamped, "prediction clamp");
    std::vector<RetargetabilityLabel> ls;
    for (const auto& [id, s] : {std::pair{"zero", 0.0}, {"in", 0.4}, {"edge", 0.75}, {"above", 0.7500000001}}) {
        RetargetabilityLabel l;
        l.image_id = id;
        l.score_max = s;
        ls.push_back(l);
    }
    c(kAssessmentLow == 0.0 && kAssessmentHigh == 0.75, "band constants");
    c(assessment_filter(ls) == std::vector<std::string>{"in", "edge"}, "band endpoints");
    return c.outcome("1/0.5/0, MAX-De with MEAN-De, K=10, batch 64 lr 0.01 dropout 0.30, clamp, band (0, 0.75]");
}

Outcome synthetic_learning() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ds = test::synthetic_dataset(2024);
    const auto hp = test::synthetic_budget();
    const auto full = train(ds.train, hp, Variant::full, NetShape::desk(16));
    const auto minus = train(ds.train, hp, Variant::net_minus, NetShape::desk(16));
    const auto pf = test::predictions(full.network, ds.test);
    const auto pm = test::predictions(minus.network, ds.test);
    const double acc = test::pair_accuracy(pf, ds.test.labels);
    const double rf = rmse(ds.test.labels, pf);
    const double rm = rmse(ds.test.labels, pm);
    const double secs = seconds_since(t0);
    Checks c;
    c(acc >= 0.9, "pair accuracy " + fmt("%.3f", acc));
    c(rf < rm, "full rmse " + fmt("%.4f", rf) + " not below net_minus " + fmt("%.4f", rm));
    c(secs < 300.0, "runtime " + fmt("%.1f s", secs));
    auto o = c.outcome("");
    o.detail = "accuracy " + fmt("%.3f", acc) + ", rmse full " + fmt("%.4f", rf) + " vs net_minus " + fmt("%.4f", rm) +
               ", " + fmt("%.1f s", secs) + (o.pass ? "" : "; " + o.detail);
    return o;
}

Outcome determinism() {
    Checks c;
    const auto ds = test::synthetic_dataset(77, 60, 16, 48);
    auto hp = test::synthetic_budget();
    hp.epochs = 40;
    hp.dropout = 0.3;
    for (Variant v : kAllVariants) {
        const auto a = train(ds.train, hp, v, NetShape::desk(16));
        const auto b = train(ds.train, hp, v, NetShape::desk(16));
        c(encode_model(a.network) == encode_model(b.network), std::string(variant_name(v)) + " model bytes");
        c(a.batch_losses == b.batch_losses, std::string(variant_name(v)) + " loss trace");
    }
    const auto images = test::golden_images();
    const auto first = encode_png(render_collage(test::golden_layout(images), images));
    const auto again = encode_png(render_collage(test::golden_layout(test::golden_images()), test::golden_images()));
    c(first == again, "collage render bytes");
    std::ifstream in(std::filesystem::path(RTK_GOLDEN_DIR) / "collage_4.png", std::ios::binary);
    const std::vector<std::uint8_t> golden((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    c(!golden.empty() && first == golden, "collage golden bytes");
    return c.outcome("model files and loss traces for every variant, collage golden byte-identical");
}

Outcome event_log_replay() {
    Checks c;
    Manifest m;
    for (int i = 1; i <= 6; ++i) {
        m.entries.push_back({"img" + std::to_string(i), "img" + std::to_string(i) + ".png", std::nullopt, {}});
    }
    AnnotationOptions o;
    o.raters = {"r1", "r2", "r3"};
    o.seed = 5;
    o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    AnnotationStore store(m, o);
    std::mt19937_64 rng(21);
    test::scripted_session(store, o.raters, 6, rng, 400);
    const auto live = store.state();
    const auto lines = store.log_lines();
    c(AnnotationStore::replay(lines) == live, "replayed state differs from live state");
    const auto oracle = test::totals_from_log(lines);
    const auto tally = live.tally();
    c(tally.votes == oracle.votes && tally.wins == oracle.wins && tally.losses == oracle.losses &&
          tally.comparable == oracle.comparable,
      "vote tally differs from log recount");
    c(live.ratings.size() == oracle.ratings.size(), "rating count differs from log recount");
    c(tally.votes > 0 && live.raters.at("r3").flagged(), "session did not exercise counted and flagged votes");
    for (const auto& r : live.ratings) {
        const auto it = oracle.ratings.find({r.image_id, std::string(engine_name(r.method)), r.rater_id});
        c(it != oracle.ratings.end() && it->second == level_name(r.level), "rating of " + r.image_id);
    }
    return c.outcome(std::to_string(lines.size()) + " events, " + std::to_string(live.ratings.size()) + " ratings, " +
                     std::to_string(tally.votes) + " counted votes");
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"gradient correctness", gradient_correctness},
        {"loss formulas", loss_formulas},
        {"engine oracles", engine_oracles},
        {"dimensional exactness", dimensional_exactness},
        {"statistics oracles", statistics_oracles},
        {"protocol constants", protocol_constants},
        {"synthetic learning", synthetic_learning},
        {"determinism", determinism},
        {"event-log replay", event_log_replay},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria pass\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
