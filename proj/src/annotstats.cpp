#include "rtk/annotstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rtk/error.hpp"

namespace rtk {

double level_score(RatingLevel level) {
    switch (level) {
        case RatingLevel::good:
            return 1.0;
        case RatingLevel::acceptable:
            return 0.5;
        case RatingLevel::poor:
            return 0.0;
    }
    throw ArgumentError("unknown rating level");
}

std::string_view level_name(RatingLevel level) {
    switch (level) {
        case RatingLevel::good:
            return "good";
        case RatingLevel::acceptable:
            return "acceptable";
        case RatingLevel::poor:
            return "poor";
    }
    throw ArgumentError("unknown rating level");
}

RatingLevel parse_level(std::string_view name) {
    if (name == "good") {
        return RatingLevel::good;
    }
    if (name == "acceptable") {
        return RatingLevel::acceptable;
    }
    if (name == "poor") {
        return RatingLevel::poor;
    }
    throw ArgumentError("unknown rating level '" + std::string(name) + "'");
}

void validate_flags(const AttributeFlags& flags) {
    for (int f : flags) {
        if (f != 1 && f != -1) {
            throw ArgumentError("attribute flags must be -1 or +1");
        }
    }
}

std::vector<RetargetabilityLabel> aggregate_ratings(std::span<const RatingRecord> records, Aggregation mode) {
    struct Acc {
        std::array<double, 4> sum{};
        std::array<int, 4> count{};
    };
    std::map<std::string, Acc> per_image;
    std::set<std::tuple<std::string, int, std::string>> seen;
    for (const auto& r : records) {
        const int m = static_cast<int>(r.method);
        if (!seen.emplace(r.image_id, m, r.rater_id).second) {
            throw ArgumentError("duplicate rating for image '" + r.image_id + "', method " +
                                std::string(engine_name(r.method)) + ", rater '" + r.rater_id + "'");
        }
        auto& acc = per_image[r.image_id];
        acc.sum[static_cast<std::size_t>(m)] += level_score(r.level);
        ++acc.count[static_cast<std::size_t>(m)];
    }

    std::string gaps;
    for (const auto& [id, acc] : per_image) {
        for (auto e : kAllEngines) {
            if (acc.count[static_cast<std::size_t>(e)] == 0) {
                gaps += (gaps.empty() ? "" : ", ") + id + "/" + std::string(engine_name(e));
            }
        }
    }
    if (!gaps.empty()) {
        throw IncompleteDataError("methods without ratings: " + gaps);
    }

    std::vector<RetargetabilityLabel> out;
    out.reserve(per_image.size());
    for (const auto& [id, acc] : per_image) {
        RetargetabilityLabel label;
        label.image_id = id;
        label.mode = mode;
        for (std::size_t m = 0; m < 4; ++m) {
            label.method_means[m] = acc.sum[m] / acc.count[m];
        }
        label.score_max = *std::max_element(label.method_means.begin(), label.method_means.end());
        label.score_mean =
            std::accumulate(label.method_means.begin(), label.method_means.end(), 0.0) / 4.0;
        out.push_back(std::move(label));
    }
    return out;
}

// --- Kendall's W -------------------------------------------------------------

namespace {

double log_gamma(double a) { return std::lgamma(a); }

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    if (x <= 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < kMaxIter; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * kEps) {
                break;
            }
        }
        return std::clamp(1.0 - sum * std::exp(-x + a * std::log(x) - log_gamma(a)), 0.0, 1.0);
    }
    // Modified Lentz evaluation of the continued fraction.
    constexpr double kTiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = b + an / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            break;
        }
    }
    return std::clamp(std::exp(-x + a * std::log(x) - log_gamma(a)) * h, 0.0, 1.0);
}

// Mid-ranks (1-based, ascending) and the tie term sum(t^3 - t).
std::vector<double> mid_ranks(const std::vector<double>& v, double& tie_term) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double chi_square_survival(double x, int degrees_of_freedom) {
    if (degrees_of_freedom < 1) {
        throw ArgumentError("chi-square: degrees of freedom must be >= 1");
    }
    return gamma_q(0.5 * degrees_of_freedom, 0.5 * x);
}

KendallResult kendalls_w(const std::vector<std::vector<double>>& scores) {
    const std::size_t m = scores.size();
    if (m < 2) {
        throw ArgumentError("kendalls_w: need at least 2 raters");
    }
    const std::size_t n = scores.front().size();
    if (n < 2) {
        throw ArgumentError("kendalls_w: need at least 2 items");
    }
    std::vector<double> rank_sum(n, 0.0);
    double ties = 0.0;
    for (const auto& rater : scores) {
        if (rater.size() != n) {
            throw ArgumentError("kendalls_w: raters scored different numbers of items");
        }
        double t = 0.0;
        const auto r = mid_ranks(rater, t);
        ties += t;
        for (std::size_t j = 0; j < n; ++j) {
            rank_sum[j] += r[j];
        }
    }
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double mean = md * (nd + 1.0) / 2.0;
    double s = 0.0;
    for (double r : rank_sum) {
        s += (r - mean) * (r - mean);
    }
    const double denom = md * md * (nd * nd * nd - nd) - md * ties;

    KendallResult out;
    out.degrees_of_freedom = static_cast<int>(n) - 1;
    if (denom <= 0.0) {
        return out;
    }
    out.w = std::clamp(12.0 * s / denom, 0.0, 1.0);
    out.chi_square = md * (nd - 1.0) * out.w;
    out.p_value = chi_square_survival(out.chi_square, out.degrees_of_freedom);
    return out;
}

// --- Ridit -------------------------------------------------------------------

std::vector<double> ridit_values(std::span<const double> reference_counts) {
    double total = 0.0;
    for (double c : reference_counts) {
        if (!(c >= 0.0)) {
            throw ArgumentError("ridit: counts must be non-negative");
        }
        total += c;
    }
    if (!(total > 0.0)) {
        throw ArgumentError("ridit: empty reference distribution");
    }
    std::vector<double> out;
    out.reserve(reference_counts.size());
    double below = 0.0;
    for (double c : reference_counts) {
        out.push_back((below + 0.5 * c) / total);
        below += c;
    }
    return out;
}

RiditAnalysis ridit_analysis(std::span<const double> reference_counts, std::span<const RiditGroup> groups) {
    RiditAnalysis out;
    out.category_ridits = ridit_values(reference_counts);
    for (const auto& g : groups) {
        if (g.counts.size() != reference_counts.size()) {
            throw ArgumentError("ridit: group '" + g.name + "' has a different number of categories");
        }
        double n = 0.0;
        double acc = 0.0;
        for (std::size_t k = 0; k < g.counts.size(); ++k) {
            n += g.counts[k];
            acc += g.counts[k] * out.category_ridits[k];
        }
        if (!(n > 0.0)) {
            out.skipped.push_back(g.name);
            continue;
        }
        const double mean = acc / n;
        const double half = 1.96 / std::sqrt(12.0 * n);
        out.groups.push_back({g.name, n, mean, mean - half, mean + half});
    }
    return out;
}

int score_category(double score) {
    if (score < 0.25) {
        return 0;
    }
    return score < 0.75 ? 1 : 2;
}

// --- attribute correlation ---------------------------------------------------

CorrelationMatrix attribute_correlation(std::span<const ImageAnnotation> annotations) {
    if (annotations.size() < 2) {
        throw ArgumentError("attribute_correlation: need at least 2 images");
    }
    const double n = static_cast<double>(annotations.size());
    std::array<double, kAttributeCount> mean{};
    for (const auto& a : annotations) {
        validate_flags(a.attributes);
        for (int k = 0; k < kAttributeCount; ++k) {
            mean[static_cast<std::size_t>(k)] += a.attributes[static_cast<std::size_t>(k)];
        }
    }
    for (double& m : mean) {
        m /= n;
    }
    CorrelationMatrix cov{};
    for (const auto& a : annotations) {
        for (std::size_t i = 0; i < kAttributeCount; ++i) {
            for (std::size_t j = 0; j < kAttributeCount; ++j) {
                cov[i][j] += (a.attributes[i] - mean[i]) * (a.attributes[j] - mean[j]);
            }
        }
    }
    CorrelationMatrix out{};
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
        for (std::size_t j = 0; j < kAttributeCount; ++j) {
            if (i == j) {
                out[i][j] = 1.0;
            } else if (cov[i][i] > 0.0 && cov[j][j] > 0.0) {
                out[i][j] = std::clamp(cov[i][j] / std::sqrt(cov[i][i] * cov[j][j]), -1.0, 1.0);
            }
        }
    }
    return out;
}

// --- manifest ----------------------------------------------------------------

const ManifestEntry* Manifest::find(std::string_view image_id) const {
    for (const auto& e : entries) {
        if (e.image_id == image_id) {
            return &e;
        }
    }
    return nullptr;
}

std::vector<RatingRecord> Manifest::rating_records() const {
    std::vector<RatingRecord> out;
    for (const auto& e : entries) {
        for (const auto& r : e.ratings) {
            out.push_back({e.image_id, r.method, r.rater, r.level, r.ts});
        }
    }
    return out;
}

std::vector<ImageAnnotation> Manifest::annotations() const {
    std::vector<ImageAnnotation> out;
    for (const auto& e : entries) {
        if (e.attributes) {
            out.push_back({e.image_id, *e.attributes});
        }
    }
    return out;
}

namespace {

using nlohmann::json;

ManifestEntry entry_from_json(const json& j) {
    ManifestEntry e;
    e.image_id = j.at("image_id").get<std::string>();
    e.file = j.at("file").get<std::string>();
    if (e.image_id.empty()) {
        throw ArgumentError("empty image_id");
    }
    if (j.contains("attributes") && !j.at("attributes").is_null()) {
        const auto& a = j.at("attributes");
        if (!a.is_array() || a.size() != kAttributeCount) {
            throw ArgumentError("attributes must hold exactly 14 flags");
        }
        AttributeFlags flags{};
        for (std::size_t k = 0; k < kAttributeCount; ++k) {
            flags[k] = a[k].get<int>();
        }
        validate_flags(flags);
        e.attributes = flags;
    }
    if (j.contains("ratings")) {
        for (const auto& r : j.at("ratings")) {
            e.ratings.push_back({parse_engine(r.at("method").get<std::string>()), r.at("rater").get<std::string>(),
                                 parse_level(r.at("level").get<std::string>()), r.value("ts", std::string())});
        }
    }
    return e;
}

json entry_to_json(const ManifestEntry& e) {
    json j;
    j["image_id"] = e.image_id;
    j["file"] = e.file;
    if (e.attributes) {
        j["attributes"] = *e.attributes;
    }
    j["ratings"] = json::array();
    for (const auto& r : e.ratings) {
        j["ratings"].push_back(
            {{"method", engine_name(r.method)}, {"rater", r.rater}, {"level", level_name(r.level)}, {"ts", r.ts}});
    }
    return j;
}

}  // namespace

Manifest parse_manifest(std::istream& in) {
    Manifest m;
    std::set<std::string> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto entry = entry_from_json(json::parse(line));
            if (!ids.insert(entry.image_id).second) {
                throw ArgumentError("duplicate image_id '" + entry.image_id + "'");
            }
            m.entries.push_back(std::move(entry));
        } catch (const json::exception& e) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return m;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
    for (const auto& e : manifest.entries) {
        out << entry_to_json(e).dump() << '\n';
    }
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }
    return parse_manifest(in);
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ostringstream buf;
    write_manifest(buf, manifest);
    const auto text = buf.str();
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
    const std::filesystem::path file(entry.file);
    if (file.is_absolute()) {
        return file;
    }
    return manifest_path.parent_path() / file;
}

}  // namespace rtk
