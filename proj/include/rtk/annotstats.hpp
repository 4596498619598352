#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtk/engines.hpp"

namespace rtk {

inline constexpr int kAttributeCount = 14;

/// Fixed attribute order of every flag vector.
inline constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "people_faces",    "lines_boundaries", "single_object", "multiple_objects", "diagonal_composition",
    "texture",         "repeating_patterns", "geometric_structures", "perspective", "fuzzy",
    "text",            "shading_contrast", "content_rich",  "symmetry"};

using AttributeFlags = std::array<int, kAttributeCount>;  // each -1 or +1

enum class RatingLevel { poor, acceptable, good };

/// good / acceptable / poor -> 1 / 0.5 / 0.
double level_score(RatingLevel level);
std::string_view level_name(RatingLevel level);
RatingLevel parse_level(std::string_view name);

struct ImageAnnotation {
    std::string image_id;
    AttributeFlags attributes{};
};

/// ArgumentError unless every flag is -1 or +1.
void validate_flags(const AttributeFlags& flags);

struct RatingRecord {
    std::string image_id;
    EngineId method = EngineId::crop;
    std::string rater_id;
    RatingLevel level = RatingLevel::poor;
    std::string timestamp;
};

enum class Aggregation { max_de, mean_de };

struct RetargetabilityLabel {
    std::string image_id;
    std::array<double, 4> method_means{};  // indexed by EngineId
    double score_max = 0.0;
    double score_mean = 0.0;
    Aggregation mode = Aggregation::max_de;

    double score() const { return mode == Aggregation::max_de ? score_max : score_mean; }
};

/// Per-method rater means and the image label, one entry per image in
/// ascending id order. IncompleteDataError lists every (image, method) gap;
/// a repeated (image, method, rater) triple is an ArgumentError.
std::vector<RetargetabilityLabel> aggregate_ratings(std::span<const RatingRecord> records,
                                                    Aggregation mode = Aggregation::max_de);

// --- Kendall's W -------------------------------------------------------------

struct KendallResult {
    double w = 0.0;
    double chi_square = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
};

/// Coefficient of concordance of m raters over n items; scores[rater][item].
/// Mid-ranks for ties with the usual tie correction; W = 0 when the
/// denominator vanishes.
KendallResult kendalls_w(const std::vector<std::vector<double>>& scores);

/// Upper tail of the chi-square distribution, via the regularized incomplete
/// gamma function (series below a+1, continued fraction above).
double chi_square_survival(double x, int degrees_of_freedom);

/// Ratings are "consistent" at this significance level.
inline constexpr double kConcordanceAlpha = 0.05;

// --- Ridit analysis ----------------------------------------------------------

/// Ridit of each category of a reference distribution:
/// (count below + half the count of the category) / total.
std::vector<double> ridit_values(std::span<const double> reference_counts);

struct RiditGroup {
    std::string name;
    std::vector<double> counts;
};

struct RiditResult {
    std::string name;
    double n = 0.0;
    double mean_ridit = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct RiditAnalysis {
    std::vector<double> category_ridits;
    std::vector<RiditResult> groups;
    std::vector<std::string> skipped;  // empty groups
};

RiditAnalysis ridit_analysis(std::span<const double> reference_counts, std::span<const RiditGroup> groups);

/// Rating category of a continuous score: nearest of {0, 0.5, 1}, exact
/// midpoints go up. Returns 0, 1 or 2.
int score_category(double score);

// --- attributes --------------------------------------------------------------

using CorrelationMatrix = std::array<std::array<double, kAttributeCount>, kAttributeCount>;

/// Pearson correlation of the flag vectors; a constant attribute correlates 0
/// with everything else, 1 with itself.
CorrelationMatrix attribute_correlation(std::span<const ImageAnnotation> annotations);

// --- dataset manifest --------------------------------------------------------

struct ManifestRating {
    EngineId method = EngineId::crop;
    std::string rater;
    RatingLevel level = RatingLevel::poor;
    std::string ts;
};

struct ManifestEntry {
    std::string image_id;
    std::string file;
    std::optional<AttributeFlags> attributes;
    std::vector<ManifestRating> ratings;
};

/// JSON-lines dataset description, one object per image.
struct Manifest {
    std::vector<ManifestEntry> entries;

    const ManifestEntry* find(std::string_view image_id) const;
    std::vector<RatingRecord> rating_records() const;
    std::vector<ImageAnnotation> annotations() const;
};

/// FormatError names the offending line; duplicate ids are rejected.
Manifest parse_manifest(std::istream& in);
void write_manifest(std::ostream& out, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Manifest image path resolved against the manifest's directory.
std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry);

}  // namespace rtk
