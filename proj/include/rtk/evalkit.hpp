#pragma once

#include <array>
#include <string>
#include <vector>

#include "rtk/annotstats.hpp"

namespace rtk {

/// Scores in (low, high] are kept for assessing a new retargeting method.
inline constexpr double kAssessmentLow = 0.0;
inline constexpr double kAssessmentHigh = 0.75;

/// ArgumentError on a length mismatch or empty input.
double rmse(const std::vector<double>& labels, const std::vector<double>& predictions);

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    double sigma = 0.0;
    int positives = 0;
    int negatives = 0;
    std::vector<RocPoint> points;  // from (0,0) to (1,1), thresholds descending
    double auc = 0.0;
};

/// Labels at or above sigma are positive. One ROC point per distinct score, so
/// tied scores move TPR and FPR together and the trapezoid area equals the
/// Mann-Whitney statistic with ties counted one half. UndefinedMetricError
/// when either class is empty.
RocCurve roc_auc(const std::vector<double>& labels, const std::vector<double>& scores, double sigma);

/// Fraction of images whose flag agrees, per attribute. ArgumentError when the
/// sets differ in size or are empty.
std::array<double, kAttributeCount> attribute_accuracy(const std::vector<AttributeFlags>& predicted,
                                                       const std::vector<AttributeFlags>& truth);

/// Ids with low < score_max <= high, in input order.
std::vector<std::string> assessment_filter(const std::vector<RetargetabilityLabel>& labels,
                                           double low = kAssessmentLow, double high = kAssessmentHigh);

struct MetricsReport {
    std::string variant;
    int images = 0;
    double rmse = 0.0;
    std::vector<RocCurve> roc;
    std::vector<double> attribute_accuracy;  // empty when the model has no attributes
};

std::string metrics_json(const MetricsReport& report);
/// Plot data: sigma,threshold,tpr,fpr rows.
std::string roc_csv(const MetricsReport& report);

}  // namespace rtk
