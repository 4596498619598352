#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rtk/engines.hpp"
#include "rtk/imaging.hpp"
#include "rtk/importance.hpp"

namespace rtk {

inline constexpr int kMinRegionSide = 16;
inline constexpr double kSplitLow = 0.35;
inline constexpr double kSplitHigh = 0.65;

struct Region {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    double aspect() const { return static_cast<double>(width) / height; }
    bool operator==(const Region&) const = default;
};

struct CollageLayout {
    int canvas_width = 0;
    int canvas_height = 0;
    std::vector<Region> regions;
    std::vector<std::string> assignment;  // image id per region, may be empty before assignment
};

/// Slicing tree: repeatedly splits the largest region (lowest index on ties)
/// across its width at even depth and across its height at odd depth, at
/// ratio() of the extent. A split that would leave a side under 16 px uses
/// the other orientation; a region that cannot split either way is passed
/// over. The first part keeps the region's index, the second follows it.
/// LayoutError when n regions cannot be made.
std::vector<Region> slice_layout(int canvas_width, int canvas_height, int n, const std::function<double()>& ratio);
/// Ratios drawn uniformly from [0.35, 0.65] by a seeded generator.
std::vector<Region> slice_layout(int canvas_width, int canvas_height, int n, std::uint64_t seed);

/// LayoutError unless the regions tile the canvas exactly and the assignment,
/// when present, names one distinct image per region.
void validate_layout(const CollageLayout& layout);

struct CollageItem {
    std::string image_id;
    double retargetability = 0.0;
    double aspect = 1.0;  // width / height
};

/// |log(image aspect / region aspect)|.
double aspect_mismatch(double image_aspect, double region_aspect);

struct AssignmentStep {
    std::string image_id;
    int region = 0;
    double mismatch = 0.0;
    std::vector<int> available;  // unassigned regions at this step
};

struct Assignment {
    std::vector<std::string> region_image;
    std::vector<AssignmentStep> trace;
};

/// Images in ascending retargetability (input order on ties) each take the
/// free region of least aspect mismatch, lowest index on ties.
Assignment assign_by_retargetability(const std::vector<CollageItem>& items, const std::vector<Region>& regions);
/// Baseline ignoring retargetability: a seeded shuffle.
Assignment shuffled_assignment(const std::vector<CollageItem>& items, const std::vector<Region>& regions,
                               std::uint64_t seed);

struct CollageImage {
    std::string image_id;
    RasterImage image;
    ImportanceMap importance;
    EngineId method = EngineId::crop;
};

/// Fits `img` into a w x h region: uniform scale to cover the region, then the
/// engine removes the overflow along one axis. For shift_map the overflow is
/// first squeezed to the engine's maximum reduction.
RasterImage fit_to_region(const RasterImage& img, const ImportanceMap& imp, EngineId method, int w, int h,
                          const EngineParams& params = {});

/// Composes the canvas. Engine failures become LayoutError naming the region.
RasterImage render_collage(const CollageLayout& layout, const std::vector<CollageImage>& images,
                           const EngineParams& params = {});

/// {"canvas":{"w":..,"h":..},"regions":[{"x","y","w","h","image_id"}]}
std::string layout_to_json(const CollageLayout& layout);
/// FormatError on malformed JSON; LayoutError on an invalid tiling.
CollageLayout layout_from_json(const std::string& text);

}  // namespace rtk
