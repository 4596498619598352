#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rtk/annotstats.hpp"
#include "rtk/engines.hpp"

namespace rtk {

/// A method "retargets the image well" when its rater mean reaches acceptable.
inline constexpr double kWellRetargeted = 0.5;

struct SelectionLabel {
    std::string image_id;
    std::array<int, 4> positive{};  // +1 / -1, indexed by EngineId
    std::vector<EngineId> best;     // argmax of the method means, ties kept, engine order
    bool trainable = false;         // at least one positive method
};

std::vector<SelectionLabel> build_selection_labels(const std::vector<RetargetabilityLabel>& labels);

struct SelectorParams {
    double lambda = 1e-3;
    int epochs = 50;
    std::uint64_t seed = 1;
};

/// Linear classifier trained with Pegasos (hinge loss, squared-norm
/// regularization, unregularized bias).
struct MethodClassifier {
    EngineId method = EngineId::crop;
    std::vector<double> weights;
    double bias = 0.0;
    bool trained = false;

    /// StateError when untrained, ArgumentError on a dimension mismatch.
    double decision(std::span<const double> x) const;
};

/// rows[i] is the shared representation of sample i; labels are +1 / -1.
MethodClassifier train_classifier(EngineId method, const std::vector<std::vector<double>>& rows,
                                  const std::vector<int>& labels, const SelectorParams& params = {});

class MethodSelector {
public:
    MethodSelector() = default;
    explicit MethodSelector(std::array<MethodClassifier, 4> classifiers) : classifiers_(std::move(classifiers)) {}

    const MethodClassifier& classifier(EngineId id) const { return classifiers_[static_cast<std::size_t>(id)]; }
    /// Indexed by EngineId.
    std::array<double, 4> decision_values(std::span<const double> shared) const;
    EngineId suggest(std::span<const double> shared) const;

private:
    std::array<MethodClassifier, 4> classifiers_{};
};

/// Argmax over the values (indexed by EngineId); ties go to the earliest
/// engine in multi_operator, aad_warp, shift_map, crop order.
EngineId suggest_method(const std::array<double, 4>& values);

/// Trains all four classifiers on the trainable images.
/// shared[i] belongs to labels[i].
MethodSelector train_selector(const std::vector<SelectionLabel>& labels, const std::vector<std::vector<double>>& shared,
                              const SelectorParams& params = {});

/// "RTGC", u32 version 1, u32 dim, then per engine: u32 id, u32 trained,
/// f64 bias, dim f64 weights.
std::vector<std::uint8_t> encode_selector(const MethodSelector& selector);
MethodSelector decode_selector(const std::vector<std::uint8_t>& bytes);
void save_selector(const std::filesystem::path& path, const MethodSelector& selector);
MethodSelector load_selector(const std::filesystem::path& path);

}  // namespace rtk
