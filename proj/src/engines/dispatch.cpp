#include <stdexcept>
#include <string>

#include "rtk/engines.hpp"
#include "rtk/error.hpp"

namespace rtk {

std::string_view engine_name(EngineId id) {
    switch (id) {
        case EngineId::multi_operator:
            return "multi_operator";
        case EngineId::aad_warp:
            return "aad_warp";
        case EngineId::shift_map:
            return "shift_map";
        case EngineId::crop:
            return "crop";
    }
    throw ArgumentError("unknown engine id");
}

EngineId parse_engine(std::string_view name) {
    if (name == "multi_operator" || name == "mo") {
        return EngineId::multi_operator;
    }
    if (name == "aad_warp" || name == "aad") {
        return EngineId::aad_warp;
    }
    if (name == "shift_map" || name == "shiftmap") {
        return EngineId::shift_map;
    }
    if (name == "crop") {
        return EngineId::crop;
    }
    throw ArgumentError("unknown engine '" + std::string(name) + "'");
}

void validate_job(const RetargetJob& job) {
    const int w = job.source.width();
    const int h = job.source.height();
    if (job.source.empty()) {
        throw ArgumentError("retarget: empty source image");
    }
    if (job.importance.width() != w || job.importance.height() != h) {
        throw DimensionMismatchError("retarget: importance map does not match the source dimensions");
    }
    if (job.target_width > w || job.target_height > h) {
        throw ArgumentError("retarget: target " + std::to_string(job.target_width) + "x" +
                            std::to_string(job.target_height) + " enlarges the " + std::to_string(w) + "x" +
                            std::to_string(h) + " source");
    }
    const bool width_changes = job.target_width != w;
    const bool height_changes = job.target_height != h;
    if (width_changes && height_changes) {
        throw ArgumentError("retarget: only one of width or height may change");
    }
    if ((width_changes && job.target_width < kMinTargetExtent) ||
        (height_changes && job.target_height < kMinTargetExtent)) {
        throw ArgumentError("retarget: target extent below " + std::to_string(kMinTargetExtent) + " pixels");
    }
}

namespace {

// Width-only engines; height jobs arrive transposed.
RetargetOutcome run_width_engine(EngineId id, const RasterImage& img, const ImportanceMap& imp, int target_width,
                                 const EngineParams& params) {
    switch (id) {
        case EngineId::multi_operator:
            return multi_operator(img, imp, target_width, params);
        case EngineId::aad_warp:
            return aad_warp(img, imp, target_width, img.height(), params);
        case EngineId::shift_map:
            return shift_map(img, imp, target_width, params.shift_map);
        case EngineId::crop:
            return crop_optimal(img, imp, target_width, img.height());
    }
    throw ArgumentError("unknown engine id");
}

std::string context(EngineId id, const char* what) { return std::string(engine_name(id)) + ": " + what; }

}  // namespace

RetargetOutcome retarget(const RetargetJob& job, const EngineParams& params) {
    validate_job(job);
    const int w = job.source.width();
    const int h = job.source.height();

    RetargetOutcome outcome;
    if (job.target_width == w && job.target_height == h) {
        outcome = {job.source, job.engine, {{"identity", 1.0}}};
        return outcome;
    }

    try {
        if (job.target_width != w) {
            outcome = run_width_engine(job.engine, job.source, job.importance, job.target_width, params);
        } else {
            const auto img_t = transpose(job.source);
            const ImportanceMap imp_t(transpose(job.importance.field()));
            outcome = run_width_engine(job.engine, img_t, imp_t, job.target_height, params);
            outcome.result = transpose(outcome.result);
        }
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(context(job.engine, e.what()));
    } catch (const ArgumentError& e) {
        throw ArgumentError(context(job.engine, e.what()));
    } catch (const Error& e) {
        throw Error(context(job.engine, e.what()));
    }

    if (outcome.result.width() != job.target_width || outcome.result.height() != job.target_height) {
        throw std::logic_error(context(job.engine, "result dimensions differ from the target"));
    }
    outcome.engine = job.engine;
    return outcome;
}

}  // namespace rtk
