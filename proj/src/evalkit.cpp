#include "rtk/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "rtk/error.hpp"

namespace rtk {

double rmse(const std::vector<double>& labels, const std::vector<double>& predictions) {
    if (labels.size() != predictions.size()) {
        throw ArgumentError("rmse: " + std::to_string(labels.size()) + " labels but " +
                            std::to_string(predictions.size()) + " predictions");
    }
    if (labels.empty()) {
        throw ArgumentError("rmse: empty input");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double e = labels[i] - predictions[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(labels.size()));
}

RocCurve roc_auc(const std::vector<double>& labels, const std::vector<double>& scores, double sigma) {
    if (labels.size() != scores.size()) {
        throw ArgumentError("roc: labels and scores differ in length");
    }
    RocCurve roc;
    roc.sigma = sigma;
    for (double y : labels) {
        (y >= sigma ? roc.positives : roc.negatives) += 1;
    }
    if (roc.positives == 0 || roc.negatives == 0) {
        throw UndefinedMetricError("AUC undefined at sigma " + std::to_string(sigma) + ": " +
                                   std::to_string(roc.positives) + " positives, " + std::to_string(roc.negatives) +
                                   " negatives");
    }
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    int tp = 0;
    int fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            (labels[order[i]] >= sigma ? tp : fp) += 1;
        }
        const RocPoint p{s, static_cast<double>(tp) / roc.positives, static_cast<double>(fp) / roc.negatives};
        const RocPoint& q = roc.points.back();
        roc.auc += (p.fpr - q.fpr) * (p.tpr + q.tpr) / 2.0;
        roc.points.push_back(p);
    }
    return roc;
}

std::array<double, kAttributeCount> attribute_accuracy(const std::vector<AttributeFlags>& predicted,
                                                       const std::vector<AttributeFlags>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw ArgumentError("attribute accuracy: need equally sized, nonempty flag sets");
    }
    std::array<double, kAttributeCount> acc{};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t k = 0; k < acc.size(); ++k) {
            acc[k] += predicted[i][k] == truth[i][k] ? 1.0 : 0.0;
        }
    }
    for (auto& a : acc) {
        a /= static_cast<double>(truth.size());
    }
    return acc;
}

std::vector<std::string> assessment_filter(const std::vector<RetargetabilityLabel>& labels, double low, double high) {
    std::vector<std::string> ids;
    for (const auto& l : labels) {
        if (l.score_max > low && l.score_max <= high) {
            ids.push_back(l.image_id);
        }
    }
    return ids;
}

std::string metrics_json(const MetricsReport& report) {
    using nlohmann::json;
    json j;
    j["variant"] = report.variant;
    j["images"] = report.images;
    j["rmse"] = report.rmse;
    j["roc"] = json::array();
    for (const auto& r : report.roc) {
        json pts = json::array();
        for (const auto& p : r.points) {
            pts.push_back({{"threshold", std::isinf(p.threshold) ? json(nullptr) : json(p.threshold)},
                           {"tpr", p.tpr},
                           {"fpr", p.fpr}});
        }
        j["roc"].push_back(
            {{"sigma", r.sigma}, {"auc", r.auc}, {"positives", r.positives}, {"negatives", r.negatives}, {"points", pts}});
    }
    if (!report.attribute_accuracy.empty()) {
        json acc = json::object();
        for (std::size_t k = 0; k < report.attribute_accuracy.size() && k < kAttributeNames.size(); ++k) {
            acc[std::string(kAttributeNames[k])] = report.attribute_accuracy[k];
        }
        j["attribute_accuracy"] = acc;
    }
    return j.dump(2) + "\n";
}

std::string roc_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << std::setprecision(17) << "sigma,threshold,tpr,fpr\n";
    for (const auto& r : report.roc) {
        for (const auto& p : r.points) {
            out << r.sigma << ',';
            if (std::isinf(p.threshold)) {
                out << "inf";
            } else {
                out << p.threshold;
            }
            out << ',' << p.tpr << ',' << p.fpr << '\n';
        }
    }
    return out.str();
}

}  // namespace rtk
