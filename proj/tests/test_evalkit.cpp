#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "rtk/error.hpp"
#include "rtk/evalkit.hpp"

using namespace rtk;

namespace {

// Direct pair count, ties one half.
double mann_whitney(const std::vector<double>& labels, const std::vector<double>& scores, double sigma) {
    double hit = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[i] >= sigma && labels[j] < sigma) {
                n += 1.0;
                hit += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
            }
        }
    }
    return hit / n;
}

RetargetabilityLabel label(std::string id, double score) {
    RetargetabilityLabel l;
    l.image_id = std::move(id);
    l.score_max = score;
    return l;
}

}  // namespace

TEST_CASE("rmse examples and properties") {
    CHECK(rmse({0.2, 0.4}, {0.2, 0.4}) == 0.0);
    CHECK(rmse({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rmse({0.7}, {0.4}) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), ArgumentError);
    CHECK_THROWS_AS(rmse({}, {}), ArgumentError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    std::vector<double> y(30), p(30);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = u(rng);
        p[i] = u(rng);
    }
    const double base = rmse(y, p);
    CHECK(base > 0.0);
    std::vector<std::size_t> perm(y.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> y2, p2;
    for (auto i : perm) {
        y2.push_back(y[i]);
        p2.push_back(p[i]);
    }
    CHECK(rmse(y2, p2) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("auc examples") {
    CHECK(roc_auc({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}, 0.95).auc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(roc_auc({1, 1, 0, 0}, {0.9, 0.8, 0.3, 0.1}, 0.5).auc == 1.0);
    CHECK(roc_auc({1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5}, 0.5).auc == 0.5);
    CHECK_THROWS_AS(roc_auc({1, 1}, {0.1, 0.2}, 0.5), UndefinedMetricError);
    CHECK_THROWS_AS(roc_auc({1}, {0.1, 0.2}, 0.5), ArgumentError);

    const auto r = roc_auc({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}, 0.95);
    CHECK(r.points.front().tpr == 0.0);
    CHECK(r.points.back().tpr == 1.0);
    CHECK(r.points.back().fpr == 1.0);
}

TEST_CASE("auc equals the Mann-Whitney count with ties and is rank invariant") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const int n = 5 + static_cast<int>(rng() % 40);
        std::vector<double> y, s;
        for (int i = 0; i < n; ++i) {
            y.push_back(static_cast<double>(rng() % 25) / 24.0);
            s.push_back(static_cast<double>(rng() % 7) / 6.0);  // many ties
        }
        y[0] = 1.0;
        y[1] = 0.0;
        for (double sigma : {0.7, 0.95}) {
            const double a = roc_auc(y, s, sigma).auc;
            CHECK(a == doctest::Approx(mann_whitney(y, s, sigma)).epsilon(1e-12));
            std::vector<double> t2;
            for (double v : s) t2.push_back(std::exp(3.0 * v) - 7.0);
            CHECK(roc_auc(y, t2, sigma).auc == doctest::Approx(a).epsilon(1e-12));
        }
    }
}

TEST_CASE("attribute accuracy") {
    AttributeFlags a{};
    a.fill(1);
    AttributeFlags b{};
    b.fill(-1);
    for (double v : attribute_accuracy({a, b}, {a, b})) CHECK(v == 1.0);
    for (double v : attribute_accuracy({a, b}, {b, a})) CHECK(v == 0.0);
    auto c = a;
    c[3] = -1;
    const auto acc = attribute_accuracy({a, a, a, c}, {a, a, a, a});
    CHECK(acc[3] == 0.75);
    CHECK(acc[0] == 1.0);
    CHECK_THROWS_AS(attribute_accuracy({a}, {}), ArgumentError);
}

TEST_CASE("assessment band") {
    CHECK(kAssessmentLow == 0.0);
    CHECK(kAssessmentHigh == 0.75);
    const std::vector<RetargetabilityLabel> ls = {label("a", 0.9), label("b", 0.6), label("c", 0.0),
                                                   label("d", 0.75), label("e", 0.7500000001)};
    CHECK(assessment_filter(ls) == std::vector<std::string>{"b", "d"});
    // Monotone in the band.
    const auto wide = assessment_filter(ls, -0.1, 0.95);
    for (const auto& id : assessment_filter(ls)) {
        CHECK(std::find(wide.begin(), wide.end(), id) != wide.end());
    }
}

TEST_CASE("metrics report serialization") {
    MetricsReport r;
    r.variant = "full";
    r.images = 4;
    r.rmse = 0.25;
    r.roc.push_back(roc_auc({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}, 0.7));
    r.attribute_accuracy.assign(kAttributeCount, 0.5);
    const auto j = metrics_json(r);
    CHECK(j.find("\"auc\": 0.75") != std::string::npos);
    CHECK(j.find("people_faces") != std::string::npos);
    const auto csv = roc_csv(r);
    CHECK(csv.rfind("sigma,threshold,tpr,fpr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(r.roc[0].points.size()));
}
