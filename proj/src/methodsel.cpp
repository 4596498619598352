#include "rtk/methodsel.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "rtk/error.hpp"
#include "rtk/rng.hpp"

namespace rtk {

std::vector<SelectionLabel> build_selection_labels(const std::vector<RetargetabilityLabel>& labels) {
    std::vector<SelectionLabel> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        SelectionLabel s;
        s.image_id = l.image_id;
        const double best = *std::max_element(l.method_means.begin(), l.method_means.end());
        for (EngineId e : kAllEngines) {
            const auto i = static_cast<std::size_t>(e);
            s.positive[i] = l.method_means[i] >= kWellRetargeted ? 1 : -1;
            s.trainable = s.trainable || s.positive[i] == 1;
            if (l.method_means[i] == best) {
                s.best.push_back(e);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

double MethodClassifier::decision(std::span<const double> x) const {
    if (!trained) {
        throw StateError("classifier for " + std::string(engine_name(method)) + " is not trained");
    }
    if (x.size() != weights.size()) {
        throw ArgumentError("classifier: representation has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(weights.size()));
    }
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += weights[i] * x[i];
    }
    return s;
}

MethodClassifier train_classifier(EngineId method, const std::vector<std::vector<double>>& rows,
                                  const std::vector<int>& labels, const SelectorParams& params) {
    if (rows.size() != labels.size() || rows.empty()) {
        throw ArgumentError("classifier: need one label per sample and at least one sample");
    }
    if (!(params.lambda > 0.0) || params.epochs < 1) {
        throw ArgumentError("classifier: lambda must be positive and epochs at least 1");
    }
    const std::size_t dim = rows.front().size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != dim) {
            throw ArgumentError("classifier: sample " + std::to_string(i) + " has the wrong dimension");
        }
        if (labels[i] != 1 && labels[i] != -1) {
            throw ArgumentError("classifier: labels must be +1 or -1");
        }
    }
    MethodClassifier c;
    c.method = method;
    c.weights.assign(dim, 0.0);
    Rng rng(params.seed ^ (0x9E37ULL * (static_cast<std::uint64_t>(method) + 1)));
    const int n = static_cast<int>(rows.size());
    long long t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (int step = 0; step < n; ++step) {
            ++t;
            const int i = rng.below(n);
            const auto& x = rows[static_cast<std::size_t>(i)];
            const double y = labels[static_cast<std::size_t>(i)];
            const double eta = 1.0 / (params.lambda * static_cast<double>(t));
            double margin = c.bias;
            for (std::size_t d = 0; d < dim; ++d) {
                margin += c.weights[d] * x[d];
            }
            margin *= y;
            const double shrink = 1.0 - eta * params.lambda;
            for (auto& w : c.weights) {
                w *= shrink;
            }
            if (margin < 1.0) {
                for (std::size_t d = 0; d < dim; ++d) {
                    c.weights[d] += eta * y * x[d];
                }
                c.bias += y / std::sqrt(static_cast<double>(t));
            }
        }
    }
    c.trained = true;
    return c;
}

std::array<double, 4> MethodSelector::decision_values(std::span<const double> shared) const {
    std::array<double, 4> v{};
    for (EngineId e : kAllEngines) {
        v[static_cast<std::size_t>(e)] = classifier(e).decision(shared);
    }
    return v;
}

EngineId MethodSelector::suggest(std::span<const double> shared) const { return suggest_method(decision_values(shared)); }

EngineId suggest_method(const std::array<double, 4>& values) {
    EngineId best = kAllEngines.front();
    for (EngineId e : kAllEngines) {
        if (values[static_cast<std::size_t>(e)] > values[static_cast<std::size_t>(best)]) {
            best = e;
        }
    }
    return best;
}

MethodSelector train_selector(const std::vector<SelectionLabel>& labels, const std::vector<std::vector<double>>& shared,
                              const SelectorParams& params) {
    if (labels.size() != shared.size()) {
        throw ArgumentError("selector: " + std::to_string(labels.size()) + " labels but " +
                            std::to_string(shared.size()) + " representations");
    }
    std::vector<std::vector<double>> rows;
    std::vector<const SelectionLabel*> used;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].trainable) {
            rows.push_back(shared[i]);
            used.push_back(&labels[i]);
        }
    }
    if (rows.empty()) {
        throw IncompleteDataError("selector: no image has an acceptable method, nothing to train on");
    }
    std::array<MethodClassifier, 4> cls{};
    for (EngineId e : kAllEngines) {
        std::vector<int> y;
        for (const auto* l : used) {
            y.push_back(l->positive[static_cast<std::size_t>(e)]);
        }
        cls[static_cast<std::size_t>(e)] = train_classifier(e, rows, y, params);
    }
    return MethodSelector(std::move(cls));
}

std::vector<std::uint8_t> encode_selector(const MethodSelector& selector) {
    std::size_t dim = 0;
    for (EngineId e : kAllEngines) {
        dim = std::max(dim, selector.classifier(e).weights.size());
    }
    bin::Writer w;
    w.magic("RTGC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(dim));
    for (EngineId e : kAllEngines) {
        const auto& c = selector.classifier(e);
        if (c.trained && c.weights.size() != dim) {
            throw ArgumentError("selector: classifiers disagree on the representation size");
        }
        w.u32(static_cast<std::uint32_t>(e));
        w.u32(c.trained ? 1 : 0);
        w.f64(c.bias);
        for (std::size_t i = 0; i < dim; ++i) {
            w.f64(c.trained ? c.weights[i] : 0.0);
        }
    }
    return w.take();
}

MethodSelector decode_selector(const std::vector<std::uint8_t>& bytes) {
    bin::Reader r(bytes, "classifier file");
    r.expect_magic("RTGC");
    const auto version = r.u32();
    if (version != 1) {
        throw FormatError("classifier file: unsupported version " + std::to_string(version));
    }
    const auto dim = r.u32();
    std::array<MethodClassifier, 4> cls{};
    for (EngineId e : kAllEngines) {
        const auto id = r.u32();
        if (id != static_cast<std::uint32_t>(e)) {
            throw FormatError("classifier file: expected engine " + std::to_string(static_cast<int>(e)) + ", found " +
                              std::to_string(id));
        }
        auto& c = cls[static_cast<std::size_t>(e)];
        c.method = e;
        c.trained = r.u32() != 0;
        c.bias = r.f64();
        r.need(static_cast<std::size_t>(dim) * 8);
        c.weights.resize(dim);
        for (auto& v : c.weights) {
            v = r.f64();
        }
        if (!c.trained) {
            c.weights.clear();
        }
    }
    if (!r.at_end()) {
        throw FormatError("classifier file: trailing bytes");
    }
    return MethodSelector(std::move(cls));
}

void save_selector(const std::filesystem::path& path, const MethodSelector& selector) {
    write_file_bytes(path, encode_selector(selector));
}

MethodSelector load_selector(const std::filesystem::path& path) { return decode_selector(read_file_bytes(path)); }

}  // namespace rtk
