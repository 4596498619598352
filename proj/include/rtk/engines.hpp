#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtk/imaging.hpp"
#include "rtk/importance.hpp"

namespace rtk {

enum class EngineId { multi_operator = 0, aad_warp = 1, shift_map = 2, crop = 3 };

/// Fixed engine order; also the tie order for method suggestion.
inline constexpr std::array<EngineId, 4> kAllEngines = {EngineId::multi_operator, EngineId::aad_warp,
                                                         EngineId::shift_map, EngineId::crop};

std::string_view engine_name(EngineId id);
/// Accepts canonical names and the CLI short forms (mo, aad, shiftmap, crop).
EngineId parse_engine(std::string_view name);

/// Smallest allowed extent along the changed dimension.
inline constexpr int kMinTargetExtent = 4;
/// Shift-map removes at most this fraction of the width.
inline constexpr double kShiftMapMaxReduction = 0.5;

struct ShiftMapParams {
    double data_weight = 3.0;      // multiplies importance of skipped pixels
    double gradient_weight = 1.0;  // gradient discontinuity vs color discontinuity
    int coarse_max_width = 128;
    int refine_radius = 2;
    int max_expansion_cycles = 8;
    int max_refine_sweeps = 8;
};

struct EngineParams {
    double seam_importance_weight = 2.0;
    int aad_grid_columns = 25;
    double aad_min_width = 1.0;
    double aad_saliency_floor = 1e-3;
    ShiftMapParams shift_map{};
    double multi_operator_step = 0.25;
    int multi_operator_similarity_side = 64;
};

struct RetargetJob {
    RasterImage source;
    ImportanceMap importance;
    EngineId engine = EngineId::crop;
    int target_width = 0;
    int target_height = 0;
};

struct RetargetOutcome {
    RasterImage result;
    EngineId engine = EngineId::crop;
    std::map<std::string, double> diagnostics;
};

/// Throws ArgumentError unless the job changes at most one dimension, shrinks
/// it to no less than kMinTargetExtent and importance matches the source.
void validate_job(const RetargetJob& job);

/// Runs the job's engine. Height changes run the width engine on the
/// transposed image. A zero-change job returns the source unchanged.
RetargetOutcome retarget(const RetargetJob& job, const EngineParams& params = {});

// --- cropping ----------------------------------------------------------------

struct CropWindow {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    double retained = 0.0;  // summed weight inside the window
    double total = 0.0;     // summed weight of the whole field
    double retention() const { return total > 0.0 ? retained / total : 1.0; }
};

/// Window of the given size maximizing summed weight; ties go to the smallest
/// y, then the smallest x.
CropWindow find_best_window(const ScalarField& weights, int width, int height);

RetargetOutcome crop_optimal(const RasterImage& img, const ImportanceMap& imp, int target_width, int target_height);

// --- seam carving ------------------------------------------------------------

/// Per-pixel seam energy: sum over channels of the central-difference
/// gradient magnitude, plus `importance_weight` x importance.
ScalarField seam_energy(const RasterImage& img, const ImportanceMap& imp, double importance_weight);

/// Recomputes the seam energy of a single pixel (same formula as seam_energy).
double seam_energy_at(const RasterImage& img, const ImportanceMap& imp, double importance_weight, int x, int y);

struct Seam {
    std::vector<int> columns;  // one column index per row
    double energy = 0.0;
};

/// Minimum-energy 8-connected vertical seam by dynamic programming. Equal
/// parents resolve to the leftmost; equal end points to the leftmost.
Seam find_vertical_seam(const ScalarField& energy);

enum class SeamAxis { vertical, horizontal };  // vertical seams shrink the width

struct SeamCarveResult {
    RasterImage image;
    ImportanceMap importance;
    double total_energy = 0.0;
};

/// Removes seams one at a time, keeping the seam energy up to date in a band
/// around each removed seam.
class SeamCarver {
public:
    SeamCarver(RasterImage img, ImportanceMap imp, double importance_weight);

    /// Removes one vertical seam and returns it (columns in pre-removal
    /// coordinates).
    Seam remove_one();
    void remove(int count);

    const RasterImage& image() const noexcept { return image_; }
    const ImportanceMap& importance() const noexcept { return importance_; }
    const ScalarField& energy() const noexcept { return energy_; }
    double total_energy() const noexcept { return total_energy_; }

private:
    RasterImage image_;
    ImportanceMap importance_;
    double weight_;
    ScalarField energy_;
    double total_energy_ = 0.0;
};

SeamCarveResult seam_carve(const RasterImage& img, const ImportanceMap& imp, int n_seams, SeamAxis axis,
                           double importance_weight = 2.0);

// --- axis-aligned deformation -----------------------------------------------

struct ColumnWidthSolution {
    std::vector<double> widths;
    std::vector<bool> at_lower_bound;
    double objective = 0.0;
    double constraint_residual = 0.0;  // |sum(widths) - target|
    double kkt_residual = 0.0;         // stationarity spread on the inactive set
    double dual_violation = 0.0;       // max negative bound multiplier
    int iterations = 0;
};

/// min sum_j weights_j (w_j - rest_j)^2  s.t.  sum_j w_j = target, w_j >= min_width.
/// Closed-form Lagrange solution with iterative clamping of active bounds.
/// InfeasibleError when n * min_width > target.
ColumnWidthSolution solve_column_widths(std::span<const double> rest, std::span<const double> weights,
                                        double target, double min_width);

RetargetOutcome aad_warp(const RasterImage& img, const ImportanceMap& imp, int target_width, int target_height,
                         const EngineParams& params = {});

// --- shift-map ---------------------------------------------------------------

/// Monotone horizontal shift labels over the output grid.
struct ShiftLabeling {
    int output_width = 0;
    int height = 0;
    int max_shift = 0;
    std::vector<int> shifts;  // row-major, output_width * height

    int at(int x, int y) const { return shifts[static_cast<std::size_t>(y * output_width + x)]; }
    int& at(int x, int y) { return shifts[static_cast<std::size_t>(y * output_width + x)]; }
    bool is_monotone() const;
};

struct ShiftMapEnergy {
    double data = 0.0;
    double smoothness = 0.0;
    double total() const { return data + smoothness; }
};

/// Energy model of a width reduction by shift labels.
///
/// Output pixel (x, y) with label s copies source pixel (x + s, y). The data
/// term charges data_weight x importance for every skipped source pixel. Two
/// neighbouring output pixels p, q with labels a != b pay
/// phi_p(a, b) + phi_q(a, b), where
/// phi_p(a, b) = |I(p+a) - I(p+b)| + gradient_weight * |G(p+a) - G(p+b)|
/// with I the RGB color and G the per-channel (dx, dy) gradient.
class ShiftMapProblem {
public:
    ShiftMapProblem(const RasterImage& img, const ImportanceMap& imp, int target_width, const ShiftMapParams& params);

    int source_width() const noexcept { return source_width_; }
    int output_width() const noexcept { return output_width_; }
    int height() const noexcept { return height_; }
    int max_shift() const noexcept { return source_width_ - output_width_; }

    /// Data cost of label s at output (x, y), offset so that summing over a row
    /// differs from the skipped-importance charge by a per-row constant.
    double unary(int x, int y, int s) const;
    double phi(int x, int y, int a, int b) const;
    double horizontal(int x, int y, int a, int b) const { return a == b ? 0.0 : phi(x, y, a, b) + phi(x + 1, y, a, b); }
    double vertical(int x, int y, int a, int b) const { return a == b ? 0.0 : phi(x, y, a, b) + phi(x, y + 1, a, b); }

    ShiftMapEnergy energy(const ShiftLabeling& labels) const;

private:
    int source_width_;
    int output_width_;
    int height_;
    double data_weight_;
    double gradient_weight_;
    std::vector<double> color_;     // 3 per source pixel
    std::vector<double> gradient_;  // 6 per source pixel
    std::vector<double> importance_;
    std::vector<double> row_importance_;
};

struct ShiftMapSolveStats {
    int expansion_moves = 0;
    int refine_sweeps = 0;
    bool coarse_to_fine = false;
};

/// Full optimizer: row-wise initialization, alpha-expansion with max-flow,
/// alternated with per-row dynamic programming refinement.
ShiftLabeling optimize_shift_labels(const ShiftMapProblem& problem, const ShiftMapParams& params,
                                    ShiftMapSolveStats* stats = nullptr,
                                    const std::optional<ShiftLabeling>& initial = std::nullopt);

/// Renders output pixels from the labeling.
RasterImage render_shift_map(const RasterImage& img, const ShiftLabeling& labels);

RetargetOutcome shift_map(const RasterImage& img, const ImportanceMap& imp, int target_width,
                          const ShiftMapParams& params = {});

// --- multi-operator ----------------------------------------------------------

struct OperatorMix {
    double crop = 0.0;
    double seam = 0.0;
    double scale = 0.0;
};

struct MultiOperatorCandidate {
    OperatorMix mix;
    int crop_pixels = 0;
    int seam_pixels = 0;
    int scale_pixels = 0;
    double retention = 0.0;
    double similarity = 0.0;
    double score = 0.0;
};

struct MultiOperatorTrace {
    std::vector<MultiOperatorCandidate> candidates;
    std::size_t selected = 0;
};

/// Normalized cross-correlation of two equally sized fields. Two flat fields
/// correlate perfectly (1); one flat field against a varying one gives 0.
double normalized_cross_correlation(const ScalarField& a, const ScalarField& b);

RetargetOutcome multi_operator(const RasterImage& img, const ImportanceMap& imp, int target_width,
                               const EngineParams& params = {}, MultiOperatorTrace* trace = nullptr);

}  // namespace rtk
