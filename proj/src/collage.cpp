#include "rtk/collage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"
#include "rtk/error.hpp"
#include "rtk/rng.hpp"

namespace rtk {

namespace {

struct Node {
    Region r;
    int depth = 0;
};

// Splits across the width (vertical cut) or the height. False when a part
// would fall under the minimum side.
bool try_split(const Node& n, bool across_width, double ratio, Node& a, Node& b) {
    const int extent = across_width ? n.r.width : n.r.height;
    if (extent < 2 * kMinRegionSide) {
        return false;
    }
    const int cut = std::clamp(static_cast<int>(std::lround(ratio * extent)), kMinRegionSide, extent - kMinRegionSide);
    a = b = Node{n.r, n.depth + 1};
    if (across_width) {
        a.r.width = cut;
        b.r.x += cut;
        b.r.width = extent - cut;
    } else {
        a.r.height = cut;
        b.r.y += cut;
        b.r.height = extent - cut;
    }
    return true;
}

}  // namespace

std::vector<Region> slice_layout(int canvas_width, int canvas_height, int n, const std::function<double()>& ratio) {
    if (n < 1) {
        throw ArgumentError("layout: need at least one region");
    }
    if (canvas_width < kMinRegionSide || canvas_height < kMinRegionSide) {
        throw LayoutError("layout: canvas " + std::to_string(canvas_width) + "x" + std::to_string(canvas_height) +
                          " is smaller than one 16 px region");
    }
    std::vector<Node> nodes = {{{0, 0, canvas_width, canvas_height}, 0}};
    while (static_cast<int>(nodes.size()) < n) {
        std::vector<std::size_t> order(nodes.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return static_cast<long long>(nodes[a].r.width) * nodes[a].r.height >
                   static_cast<long long>(nodes[b].r.width) * nodes[b].r.height;
        });
        bool done = false;
        const double q = ratio();
        for (std::size_t i : order) {
            const bool across_width = nodes[i].depth % 2 == 0;
            Node a, b;
            if (try_split(nodes[i], across_width, q, a, b) || try_split(nodes[i], !across_width, q, a, b)) {
                nodes[i] = a;
                nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(i) + 1, b);
                done = true;
                break;
            }
        }
        if (!done) {
            throw LayoutError("layout: canvas " + std::to_string(canvas_width) + "x" + std::to_string(canvas_height) +
                              " cannot hold " + std::to_string(n) + " regions with 16 px sides");
        }
    }
    std::vector<Region> out;
    for (const auto& nd : nodes) {
        out.push_back(nd.r);
    }
    return out;
}

std::vector<Region> slice_layout(int canvas_width, int canvas_height, int n, std::uint64_t seed) {
    Rng rng(seed);
    return slice_layout(canvas_width, canvas_height, n, [&] { return rng.uniform(kSplitLow, kSplitHigh); });
}

void validate_layout(const CollageLayout& layout) {
    if (layout.canvas_width < 1 || layout.canvas_height < 1) {
        throw LayoutError("layout: empty canvas");
    }
    if (layout.regions.empty()) {
        throw LayoutError("layout: no regions");
    }
    std::vector<unsigned char> cover(static_cast<std::size_t>(layout.canvas_width) * layout.canvas_height, 0);
    for (std::size_t i = 0; i < layout.regions.size(); ++i) {
        const auto& r = layout.regions[i];
        if (r.width < 1 || r.height < 1 || r.x < 0 || r.y < 0 || r.x + r.width > layout.canvas_width ||
            r.y + r.height > layout.canvas_height) {
            throw LayoutError("layout: region " + std::to_string(i) + " lies outside the canvas");
        }
        for (int y = r.y; y < r.y + r.height; ++y) {
            for (int x = r.x; x < r.x + r.width; ++x) {
                auto& c = cover[static_cast<std::size_t>(y) * layout.canvas_width + x];
                if (c != 0) {
                    throw LayoutError("layout: region " + std::to_string(i) + " overlaps another at (" +
                                      std::to_string(x) + ", " + std::to_string(y) + ")");
                }
                c = 1;
            }
        }
    }
    if (std::find(cover.begin(), cover.end(), 0) != cover.end()) {
        throw LayoutError("layout: regions leave part of the canvas uncovered");
    }
    if (!layout.assignment.empty()) {
        if (layout.assignment.size() != layout.regions.size()) {
            throw LayoutError("layout: " + std::to_string(layout.assignment.size()) + " images for " +
                              std::to_string(layout.regions.size()) + " regions");
        }
        std::set<std::string> seen;
        for (const auto& id : layout.assignment) {
            if (!seen.insert(id).second) {
                throw LayoutError("layout: image '" + id + "' is assigned twice");
            }
        }
    }
}

double aspect_mismatch(double image_aspect, double region_aspect) {
    return std::abs(std::log(image_aspect / region_aspect));
}

Assignment assign_by_retargetability(const std::vector<CollageItem>& items, const std::vector<Region>& regions) {
    if (items.size() != regions.size()) {
        throw ArgumentError("collage: " + std::to_string(items.size()) + " images for " +
                            std::to_string(regions.size()) + " regions");
    }
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return items[a].retargetability < items[b].retargetability; });
    Assignment out;
    out.region_image.resize(regions.size());
    std::vector<int> free(regions.size());
    std::iota(free.begin(), free.end(), 0);
    for (std::size_t i : order) {
        AssignmentStep step{items[i].image_id, free.front(), 0.0, free};
        step.mismatch = aspect_mismatch(items[i].aspect, regions[static_cast<std::size_t>(free.front())].aspect());
        for (int r : free) {
            const double m = aspect_mismatch(items[i].aspect, regions[static_cast<std::size_t>(r)].aspect());
            if (m < step.mismatch) {
                step.mismatch = m;
                step.region = r;
            }
        }
        out.region_image[static_cast<std::size_t>(step.region)] = items[i].image_id;
        free.erase(std::find(free.begin(), free.end(), step.region));
        out.trace.push_back(std::move(step));
    }
    return out;
}

Assignment shuffled_assignment(const std::vector<CollageItem>& items, const std::vector<Region>& regions,
                               std::uint64_t seed) {
    if (items.size() != regions.size()) {
        throw ArgumentError("collage: " + std::to_string(items.size()) + " images for " +
                            std::to_string(regions.size()) + " regions");
    }
    std::vector<int> perm(regions.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i) {
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.below(i + 1))]);
    }
    Assignment out;
    out.region_image.resize(regions.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const int r = perm[i];
        out.region_image[static_cast<std::size_t>(r)] = items[i].image_id;
        out.trace.push_back({items[i].image_id, r,
                             aspect_mismatch(items[i].aspect, regions[static_cast<std::size_t>(r)].aspect()), {}});
    }
    return out;
}

RasterImage fit_to_region(const RasterImage& img, const ImportanceMap& imp, EngineId method, int w, int h,
                          const EngineParams& params) {
    if (w < 1 || h < 1) {
        throw ArgumentError("collage: empty region");
    }
    const double s = std::max(static_cast<double>(w) / img.width(), static_cast<double>(h) / img.height());
    int sw = w;
    int sh = h;
    if (static_cast<double>(w) / img.width() >= static_cast<double>(h) / img.height()) {
        sh = std::max(h, static_cast<int>(std::lround(img.height() * s)));
    } else {
        sw = std::max(w, static_cast<int>(std::lround(img.width() * s)));
    }
    if (method == EngineId::shift_map) {
        const double limit = 1.0 / (1.0 - kShiftMapMaxReduction);
        sw = std::min(sw, static_cast<int>(std::floor(limit * w)));
        sh = std::min(sh, static_cast<int>(std::floor(limit * h)));
    }
    RetargetJob job;
    job.source = uniform_scale(img, sw, sh);
    job.importance = ImportanceMap(uniform_scale(imp.field(), sw, sh));
    job.engine = method;
    job.target_width = w;
    job.target_height = h;
    return retarget(job, params).result;
}

RasterImage render_collage(const CollageLayout& layout, const std::vector<CollageImage>& images,
                           const EngineParams& params) {
    validate_layout(layout);
    if (layout.assignment.empty()) {
        throw LayoutError("collage: layout has no assignment");
    }
    RasterImage canvas(layout.canvas_width, layout.canvas_height);
    for (std::size_t i = 0; i < layout.regions.size(); ++i) {
        const auto& r = layout.regions[i];
        const auto& id = layout.assignment[i];
        const auto it = std::find_if(images.begin(), images.end(), [&](const CollageImage& c) { return c.image_id == id; });
        if (it == images.end()) {
            throw LayoutError("collage: region " + std::to_string(i) + " names unknown image '" + id + "'");
        }
        RasterImage part;
        try {
            part = fit_to_region(it->image, it->importance, it->method, r.width, r.height, params);
        } catch (const Error& e) {
            throw LayoutError("collage: region " + std::to_string(i) + " ('" + id + "', " +
                              std::string(engine_name(it->method)) + "): " + e.what());
        }
        for (int y = 0; y < r.height; ++y) {
            for (int x = 0; x < r.width; ++x) {
                for (int c = 0; c < RasterImage::kChannels; ++c) {
                    canvas.at(r.x + x, r.y + y, c) = part.at(x, y, c);
                }
            }
        }
    }
    return canvas;
}

std::string layout_to_json(const CollageLayout& layout) {
    nlohmann::json j;
    j["canvas"] = {{"w", layout.canvas_width}, {"h", layout.canvas_height}};
    j["regions"] = nlohmann::json::array();
    for (std::size_t i = 0; i < layout.regions.size(); ++i) {
        const auto& r = layout.regions[i];
        nlohmann::json e = {{"x", r.x}, {"y", r.y}, {"w", r.width}, {"h", r.height}};
        e["image_id"] = i < layout.assignment.size() ? nlohmann::json(layout.assignment[i]) : nlohmann::json(nullptr);
        j["regions"].push_back(e);
    }
    return j.dump(2) + "\n";
}

CollageLayout layout_from_json(const std::string& text) {
    CollageLayout layout;
    try {
        const auto j = nlohmann::json::parse(text);
        layout.canvas_width = j.at("canvas").at("w").get<int>();
        layout.canvas_height = j.at("canvas").at("h").get<int>();
        bool any_id = false;
        std::vector<std::string> ids;
        for (const auto& e : j.at("regions")) {
            layout.regions.push_back({e.at("x").get<int>(), e.at("y").get<int>(), e.at("w").get<int>(),
                                      e.at("h").get<int>()});
            if (e.contains("image_id") && !e["image_id"].is_null()) {
                any_id = true;
                ids.push_back(e["image_id"].get<std::string>());
            } else {
                ids.emplace_back();
            }
        }
        if (any_id) {
            layout.assignment = std::move(ids);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("layout: ") + e.what());
    }
    validate_layout(layout);
    return layout;
}

}  // namespace rtk
