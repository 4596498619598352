#include <csignal>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "rtk/annoserve.hpp"
#include "rtk/annoserve_http.hpp"
#include "rtk/annotstats.hpp"
#include "rtk/collage.hpp"
#include "rtk/engines.hpp"
#include "rtk/error.hpp"
#include "rtk/evalkit.hpp"
#include "rtk/features.hpp"
#include "rtk/imaging.hpp"
#include "rtk/importance.hpp"
#include "rtk/methodsel.hpp"
#include "rtk/mtlnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtk;

namespace {

std::string read_text(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> image_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_image_file(e.path())) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<int, int> parse_canvas(const std::string& text) {
    int w = 0;
    int h = 0;
    char x = 0;
    std::istringstream in(text);
    if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof() || w < 1 || h < 1) {
        throw ArgumentError("canvas must look like 800x600, got '" + text + "'");
    }
    return {w, h};
}

std::pair<double, double> parse_band(const std::string& text) {
    const auto colon = text.find(':');
    try {
        if (colon != std::string::npos) {
            std::size_t used_lo = 0;
            std::size_t used_hi = 0;
            const double lo = std::stod(text.substr(0, colon), &used_lo);
            const double hi = std::stod(text.substr(colon + 1), &used_hi);
            if (used_lo == colon && used_hi == text.size() - colon - 1 && lo < hi) {
                return {lo, hi};
            }
        }
    } catch (const std::exception&) {
    }
    throw ArgumentError("band must look like 0.0:0.75 with low < high, got '" + text + "'");
}

std::vector<ImportanceMap> load_masks(const std::vector<std::string>& paths) {
    std::vector<ImportanceMap> masks;
    for (const auto& p : paths) {
        masks.push_back(load_external_mask(p));
    }
    return masks;
}

std::vector<RetargetabilityLabel> manifest_labels(const Manifest& m) {
    const auto records = m.rating_records();
    return aggregate_ratings(records);
}

FeatureVector model_features(const MtlNetwork& net, const RasterImage& img) {
    if (net.shape().input_dim != kBaselineDim) {
        throw ArgumentError("model expects " + std::to_string(net.shape().input_dim) +
                            "-dim features; images can only be described by the built-in " +
                            std::to_string(kBaselineDim) + "-dim extractor, pass --features instead");
    }
    const auto policy = variant_crop_policy(net.variant());
    return extract(img, policy == CropPolicy::single_resize ? ExtractorSpec::single_resize() : ExtractorSpec{});
}

const FeatureVector& need_features(const FeatureTable& table, const std::string& id) {
    const auto* f = table.find(id);
    if (f == nullptr) {
        throw IncompleteDataError("no features for image '" + id + "'");
    }
    return *f;
}

json flags_json(const Prediction& p) {
    json a = json::array();
    for (bool b : p.attributes) {
        a.push_back(b ? 1 : -1);
    }
    return a;
}

AttributeFlags predicted_flags(const Prediction& p) {
    AttributeFlags f{};
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = p.attributes[k] ? 1 : -1;
    }
    return f;
}

EngineId suggest_for(const MtlNetwork& net, const MethodSelector& sel, const RasterImage& img) {
    return sel.suggest(predict(net, model_features(net, img)).shared);
}

// --- subcommands --------------------------------------------------------------

struct RetargetOpts {
    std::string in, out, engine = "crop", axis = "long", model, classifiers;
    double ratio = 0.5;
    std::vector<std::string> masks;
};

void run_retarget(const RetargetOpts& o) {
    if (!(o.ratio > 0.0 && o.ratio <= 1.0)) {
        throw ArgumentError("--ratio must lie in (0, 1]");
    }
    RetargetJob job;
    job.source = load_image(o.in);
    const auto masks = load_masks(o.masks);
    job.importance = build_importance(job.source, masks);
    if (o.engine == "auto") {
        if (o.model.empty() || o.classifiers.empty()) {
            throw ArgumentError("--engine auto needs --model and --classifiers");
        }
        job.engine = suggest_for(load_model(o.model), load_selector(o.classifiers), job.source);
        std::cerr << "suggested engine: " << engine_name(job.engine) << "\n";
    } else {
        job.engine = parse_engine(o.engine);
    }
    const int w = job.source.width();
    const int h = job.source.height();
    const bool width = o.axis == "w" || (o.axis == "long" && w >= h);
    job.target_width = width ? static_cast<int>(std::lround(o.ratio * w)) : w;
    job.target_height = width ? h : static_cast<int>(std::lround(o.ratio * h));
    save_png(o.out, retarget(job).result);
}

struct ImportanceOpts {
    std::string in, out;
    std::vector<std::string> masks;
};

void run_importance(const ImportanceOpts& o) {
    const auto img = load_image(o.in);
    const auto masks = load_masks(o.masks);
    write_file_bytes(o.out, encode_gray_png(build_importance(img, masks).field()));
}

struct DatasetOpts {
    std::string manifest, images, out;
    bool force = false;
};

void run_dataset_init(const DatasetOpts& o) {
    if (fs::exists(o.manifest) && !o.force) {
        throw ArgumentError(o.manifest + " already exists; pass --force to overwrite");
    }
    const auto base = fs::absolute(fs::path(o.manifest)).parent_path();
    Manifest m;
    for (const auto& p : image_files(o.images)) {
        m.entries.push_back({p.stem().string(), fs::relative(fs::absolute(p), base).generic_string(), std::nullopt, {}});
    }
    save_manifest(o.manifest, m);
    std::cout << "wrote " << m.entries.size() << " images to " << o.manifest << "\n";
}

void run_dataset_validate(const DatasetOpts& o) {
    const auto m = load_manifest(o.manifest);
    std::vector<std::string> problems;
    int annotated = 0;
    for (const auto& e : m.entries) {
        if (!fs::exists(resolve_image_path(o.manifest, e))) {
            problems.push_back("image '" + e.image_id + "': file " + e.file + " not found");
        }
        annotated += e.attributes ? 1 : 0;
    }
    const auto records = m.rating_records();
    std::size_t labelled = 0;
    if (!records.empty()) {
        try {
            labelled = aggregate_ratings(records).size();
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    std::cout << "images: " << m.entries.size() << "\nratings: " << records.size()
              << "\nlabelled images: " << labelled << "\nannotated images: " << annotated << "\n";
    for (const auto& p : problems) {
        std::cout << "problem: " << p << "\n";
    }
    if (!problems.empty()) {
        throw ValidationError(std::to_string(problems.size()) + " problem(s) in " + o.manifest);
    }
    std::cout << "ok\n";
}

void run_dataset_stats(const DatasetOpts& o) {
    const auto m = load_manifest(o.manifest);
    const auto labels = manifest_labels(m);
    fs::create_directories(o.out);

    std::map<std::string, std::map<std::string, std::array<double, 4>>> by_image;  // image -> rater -> scores
    std::map<std::string, std::map<std::string, int>> seen;
    for (const auto& r : m.rating_records()) {
        by_image[r.image_id][r.rater_id][static_cast<std::size_t>(r.method)] = level_score(r.level);
        ++seen[r.image_id][r.rater_id];
    }
    json per_image = json::array();
    double w_sum = 0.0;
    int evaluated = 0;
    int consistent = 0;
    for (const auto& [image, raters] : by_image) {
        std::vector<std::vector<double>> scores;
        for (const auto& [rater, s] : raters) {
            if (seen[image][rater] == 4) {
                scores.emplace_back(s.begin(), s.end());
            }
        }
        if (scores.size() < 2) {
            continue;
        }
        const auto k = kendalls_w(scores);
        ++evaluated;
        w_sum += k.w;
        consistent += k.p_value < kConcordanceAlpha ? 1 : 0;
        per_image.push_back({{"image_id", image}, {"raters", scores.size()}, {"w", k.w}, {"p_value", k.p_value}});
    }
    json kendall = {{"images_evaluated", evaluated},
                    {"mean_w", evaluated > 0 ? json(w_sum / evaluated) : json(nullptr)},
                    {"consistent_fraction", evaluated > 0 ? json(static_cast<double>(consistent) / evaluated) : json(nullptr)},
                    {"alpha", kConcordanceAlpha},
                    {"images", per_image}};
    write_text(fs::path(o.out) / "kendall.json", kendall.dump(2) + "\n");

    std::vector<double> reference(3, 0.0);
    std::vector<RiditGroup> groups;
    for (auto name : kAttributeNames) {
        groups.push_back({std::string(name), std::vector<double>(3, 0.0)});
    }
    for (const auto& l : labels) {
        const int c = score_category(l.score_max);
        reference[static_cast<std::size_t>(c)] += 1.0;
        const auto* e = m.find(l.image_id);
        if (e != nullptr && e->attributes) {
            for (std::size_t k = 0; k < groups.size(); ++k) {
                if ((*e->attributes)[k] == 1) {
                    groups[k].counts[static_cast<std::size_t>(c)] += 1.0;
                }
            }
        }
    }
    std::ostringstream ridit;
    ridit << "attribute,n,mean_ridit,ci_low,ci_high\n";
    if (!labels.empty()) {
        const auto r = ridit_analysis(reference, groups);
        for (const auto& g : r.groups) {
            ridit << g.name << ',' << g.n << ',' << g.mean_ridit << ',' << g.ci_low << ',' << g.ci_high << '\n';
        }
        for (const auto& s : r.skipped) {
            std::cerr << "ridit: attribute " << s << " has no images, skipped\n";
        }
    }
    write_text(fs::path(o.out) / "ridit.csv", ridit.str());

    const auto annotations = m.annotations();
    std::ostringstream corr;
    corr << "attribute";
    for (auto name : kAttributeNames) corr << ',' << name;
    corr << '\n';
    if (annotations.size() >= 2) {
        const auto c = attribute_correlation(annotations);
        for (std::size_t i = 0; i < c.size(); ++i) {
            corr << kAttributeNames[i];
            for (double v : c[i]) corr << ',' << v;
            corr << '\n';
        }
    }
    write_text(fs::path(o.out) / "attribute_correlation.csv", corr.str());
    std::cout << "kendall: " << evaluated << " images, mean W "
              << (evaluated > 0 ? std::to_string(w_sum / evaluated) : std::string("n/a")) << ", consistent "
              << consistent << "\nwrote kendall.json, ridit.csv, attribute_correlation.csv to " << o.out << "\n";
}

struct FeaturesOpts {
    std::string manifest, out, from, policy = "dense_crop";
    int crops = kDenseCrops;
};

void run_features_extract(const FeaturesOpts& o) {
    ExtractorSpec spec;
    spec.policy = parse_crop_policy(o.policy);
    spec.crops = spec.policy == CropPolicy::single_resize ? 1 : o.crops;
    spec.validate();
    const auto m = load_manifest(o.manifest);
    std::vector<FeatureVector> out(m.entries.size());
    std::vector<std::exception_ptr> errors(m.entries.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < m.entries.size(); i += workers) {
                try {
                    out[i] = extract(load_image(resolve_image_path(o.manifest, m.entries[i])), spec);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    FeatureTable table;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        if (errors[i]) {
            std::rethrow_exception(errors[i]);
        }
        table.add(m.entries[i].image_id, std::move(out[i]));
    }
    export_features(o.out, table);
    std::cout << "wrote " << table.records.size() << " x " << table.dim << " features to " << o.out << "\n";
}

void run_features_import(const FeaturesOpts& o) {
    const auto m = load_manifest(o.manifest);
    std::ifstream in(o.from);
    if (!in) {
        throw IoError("cannot open " + o.from);
    }
    FeatureTable table;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string id;
        std::getline(cells, id, ',');
        FeatureVector v;
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError(o.from + " row " + std::to_string(row) + ": '" + cell + "' is not a number");
            }
            if (!std::isfinite(v.back())) {
                throw FormatError(o.from + " row " + std::to_string(row) + ": non-finite value");
            }
        }
        if (m.find(id) == nullptr) {
            throw ValidationError(o.from + " row " + std::to_string(row) + ": image '" + id + "' is not in the manifest");
        }
        table.add(id, std::move(v));
    }
    for (const auto& e : m.entries) {
        if (table.find(e.image_id) == nullptr) {
            std::cerr << "warning: no imported features for '" << e.image_id << "'\n";
        }
    }
    export_features(o.out, table);
    std::cout << "imported " << table.records.size() << " x " << table.dim << " features to " << o.out << "\n";
}

struct TrainOpts {
    std::string manifest, features, variant = "full", config, model_out, aggregation = "max";
    std::optional<std::uint64_t> seed;
};

void run_train(const TrainOpts& o) {
    const auto variant = parse_variant(o.variant);
    const auto m = load_manifest(o.manifest);
    const auto table = import_features(o.features);
    NetShape shape = NetShape::desk(table.dim);
    Hyperparams hp;
    if (!o.config.empty()) {
        hp = parse_config(read_text(o.config), &shape);
        shape.input_dim = table.dim;
    }
    if (o.seed) {
        hp.seed = *o.seed;
    }
    const auto mode = o.aggregation == "mean" ? Aggregation::mean_de : Aggregation::max_de;
    const auto records = m.rating_records();
    const auto labels = aggregate_ratings(records, mode);
    const bool needs_attributes = variant_terms(variant).binary;
    TrainingSet data;
    data.features.resize(table.dim, static_cast<Eigen::Index>(labels.size()));
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& f = need_features(table, labels[i].image_id);
        data.features.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(f.data(), table.dim);
        data.labels.push_back(labels[i].score());
        const auto* e = m.find(labels[i].image_id);
        AttributeFlags flags{};
        flags.fill(-1);
        if (e->attributes) {
            flags = *e->attributes;
        } else if (needs_attributes) {
            missing.push_back(labels[i].image_id);
        }
        data.attributes.push_back(flags);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
        throw IncompleteDataError("variant " + o.variant + " needs attribute flags; missing for " +
                                  std::to_string(missing.size()) + " image(s): " + list);
    }
    const auto result = train(data, hp, variant, shape);
    save_model(o.model_out, result.network);
    std::cout << "trained " << variant_name(variant) << " on " << data.size() << " images, final epoch loss "
              << result.epoch_losses.back() << "\nwrote " << o.model_out << "\n";
}

struct PredictOpts {
    std::string model, in, features, classifiers;
    bool json_out = false;
};

json prediction_json(const Prediction& p, const std::optional<EngineId>& suggested) {
    json j = {{"retargetability", p.retargetability}, {"attributes", flags_json(p)}};
    if (suggested) {
        j["suggested_method"] = engine_name(*suggested);
    }
    return j;
}

void run_predict(const PredictOpts& o) {
    if (o.in.empty() == o.features.empty()) {
        throw ArgumentError("give exactly one of --in and --features");
    }
    const auto net = load_model(o.model);
    std::optional<MethodSelector> sel;
    if (!o.classifiers.empty()) {
        sel = load_selector(o.classifiers);
    }
    auto one = [&](const FeatureVector& f) {
        const auto p = predict(net, f);
        std::optional<EngineId> s;
        if (sel) s = sel->suggest(p.shared);
        return std::pair{p, s};
    };
    if (!o.in.empty()) {
        const auto [p, s] = one(model_features(net, load_image(o.in)));
        if (o.json_out) {
            std::cout << prediction_json(p, s).dump() << "\n";
        } else {
            std::cout << p.retargetability << (s ? "\t" + std::string(engine_name(*s)) : "") << "\n";
        }
        return;
    }
    const auto table = import_features(o.features);
    json all = json::array();
    for (const auto& r : table.records) {
        const auto [p, s] = one(r.values);
        if (o.json_out) {
            auto j = prediction_json(p, s);
            j["image_id"] = r.id;
            all.push_back(j);
        } else {
            std::cout << r.id << "\t" << p.retargetability << (s ? "\t" + std::string(engine_name(*s)) : "") << "\n";
        }
    }
    if (o.json_out) {
        std::cout << all.dump() << "\n";
    }
}

struct EvaluateOpts {
    std::string model, manifest, features, out, roc_csv;
    std::vector<double> sigma = {0.95};
};

void run_evaluate(const EvaluateOpts& o) {
    const auto net = load_model(o.model);
    const auto m = load_manifest(o.manifest);
    const auto table = import_features(o.features);
    const auto labels = manifest_labels(m);
    std::vector<double> y;
    std::vector<double> yhat;
    std::vector<AttributeFlags> predicted;
    std::vector<AttributeFlags> truth;
    bool attributes = net.has_branches();
    for (const auto& l : labels) {
        const auto p = predict(net, need_features(table, l.image_id));
        y.push_back(l.score());
        yhat.push_back(p.retargetability);
        const auto* e = m.find(l.image_id);
        if (attributes && e->attributes) {
            predicted.push_back(predicted_flags(p));
            truth.push_back(*e->attributes);
        } else {
            attributes = false;
        }
    }
    MetricsReport report;
    report.variant = std::string(variant_name(net.variant()));
    report.images = static_cast<int>(y.size());
    report.rmse = rmse(y, yhat);
    for (double s : o.sigma) {
        report.roc.push_back(roc_auc(y, yhat, s));
    }
    if (attributes) {
        const auto acc = attribute_accuracy(predicted, truth);
        report.attribute_accuracy.assign(acc.begin(), acc.end());
    }
    const auto text = metrics_json(report);
    std::cout << text;
    if (!o.out.empty()) write_text(o.out, text);
    if (!o.roc_csv.empty()) write_text(o.roc_csv, roc_csv(report));
}

struct SelectOpts {
    std::string model, classifiers, in;
    bool json_out = false;
};

void run_select(const SelectOpts& o) {
    const auto net = load_model(o.model);
    const auto sel = load_selector(o.classifiers);
    const auto p = predict(net, model_features(net, load_image(o.in)));
    const auto best = sel.suggest(p.shared);
    if (!o.json_out) {
        std::cout << engine_name(best) << "\n";
        return;
    }
    json values;
    const auto v = sel.decision_values(p.shared);
    for (EngineId e : kAllEngines) values[std::string(engine_name(e))] = v[static_cast<std::size_t>(e)];
    std::cout << json{{"suggested_method", engine_name(best)}, {"decision_values", values}}.dump() << "\n";
}

struct SelectorTrainOpts {
    std::string model, manifest, features, out;
    double lambda = 1e-3;
    int epochs = 50;
    std::uint64_t seed = 1;
};

void run_train_selector(const SelectorTrainOpts& o) {
    const auto net = load_model(o.model);
    const auto m = load_manifest(o.manifest);
    const auto table = import_features(o.features);
    const auto labels = manifest_labels(m);
    std::vector<std::vector<double>> shared;
    for (const auto& l : labels) {
        shared.push_back(predict(net, need_features(table, l.image_id)).shared);
    }
    const auto sel = train_selector(build_selection_labels(labels), shared, {o.lambda, o.epochs, o.seed});
    save_selector(o.out, sel);
    std::cout << "wrote " << o.out << "\n";
}

struct AssessOpts {
    std::string manifest, band = "0.0:0.75", out;
};

void run_assess(const AssessOpts& o) {
    const auto [lo, hi] = parse_band(o.band);
    const auto ids = assessment_filter(manifest_labels(load_manifest(o.manifest)), lo, hi);
    std::string text;
    for (const auto& id : ids) text += id + "\n";
    write_text(o.out, text);
    std::cout << ids.size() << " image(s) in (" << lo << ", " << hi << "]\n";
}

struct CollageOpts {
    std::string images, model, classifiers, canvas, out, layout_out;
    std::uint64_t seed = 1;
    bool shuffled = false;
};

void run_collage(const CollageOpts& o) {
    const auto [cw, ch] = parse_canvas(o.canvas);
    const auto net = load_model(o.model);
    std::optional<MethodSelector> sel;
    if (!o.classifiers.empty()) sel = load_selector(o.classifiers);
    std::vector<CollageImage> images;
    std::vector<CollageItem> items;
    for (const auto& p : image_files(o.images)) {
        auto img = load_image(p);
        const auto pred = predict(net, model_features(net, img));
        const EngineId method = sel ? sel->suggest(pred.shared) : EngineId::crop;
        items.push_back({p.stem().string(), pred.retargetability, static_cast<double>(img.width()) / img.height()});
        auto imp = build_importance(img);
        images.push_back({p.stem().string(), std::move(img), std::move(imp), method});
    }
    if (images.empty()) {
        throw ArgumentError("no PNG or JPEG images in " + o.images);
    }
    CollageLayout layout{cw, ch, slice_layout(cw, ch, static_cast<int>(images.size()), o.seed), {}};
    layout.assignment = (o.shuffled ? shuffled_assignment(items, layout.regions, o.seed)
                                    : assign_by_retargetability(items, layout.regions))
                            .region_image;
    save_png(o.out, render_collage(layout, images));
    if (!o.layout_out.empty()) write_text(o.layout_out, layout_to_json(layout));
    std::cout << "wrote " << o.out << " (" << cw << "x" << ch << ", " << images.size() << " images)\n";
}

struct ServeOpts {
    std::string manifest, static_dir, raters, log, snapshot, host = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 1;
};

void run_serve(const ServeOpts& o) {
    AnnotationOptions ao;
    std::istringstream list(o.raters);
    for (std::string r; std::getline(list, r, ',');) {
        if (!r.empty()) ao.raters.push_back(r);
    }
    if (ao.raters.empty()) {
        throw ArgumentError("--raters needs at least one rater id");
    }
    const fs::path mp(o.manifest);
    ao.seed = o.seed;
    ao.log_path = o.log.empty() ? fs::path(mp.string() + ".events.jsonl") : fs::path(o.log);
    ao.snapshot_path = o.snapshot.empty() ? mp.parent_path() / (mp.stem().string() + ".snapshot.jsonl")
                                          : fs::path(o.snapshot);
    AnnotationStore store(load_manifest(mp), ao);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    AnnotationServer server(store, mp, o.static_dir);
    const int port = server.bind(o.host, o.port);
    std::cout << "serving http://" << o.host << ":" << port << "/ (log " << ao.log_path.string() << ")" << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    server.run();
    waiter.join();
    store.write_snapshot();
    std::cout << "snapshot written to " << ao.snapshot_path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Content-aware image retargeting toolkit"};
    app.require_subcommand(1);

    RetargetOpts ro;
    auto* retarget = app.add_subcommand("retarget", "Retarget one image");
    retarget->add_option("--in", ro.in, "Input image")->required();
    retarget->add_option("--engine", ro.engine, "mo|aad|shiftmap|crop|auto")
        ->check(CLI::IsMember({"mo", "aad", "shiftmap", "crop", "auto", "multi_operator", "aad_warp", "shift_map"}));
    retarget->add_option("--ratio", ro.ratio, "Kept fraction of the changed side")->default_val(0.5);
    retarget->add_option("--axis", ro.axis, "long|w|h")->check(CLI::IsMember({"long", "w", "h"}));
    retarget->add_option("--mask", ro.masks, "External grayscale importance mask (repeatable)");
    retarget->add_option("--model", ro.model, "Model file for --engine auto");
    retarget->add_option("--classifiers", ro.classifiers, "Classifier file for --engine auto");
    retarget->add_option("--out", ro.out, "Output image")->required();
    retarget->callback([&] { run_retarget(ro); });

    ImportanceOpts io;
    auto* importance = app.add_subcommand("importance", "Write the importance map as a grayscale PNG");
    importance->add_option("--in", io.in, "Input image")->required();
    importance->add_option("--mask", io.masks, "External grayscale importance mask (repeatable)");
    importance->add_option("--out", io.out, "Output PNG")->required();
    importance->callback([&] { run_importance(io); });

    DatasetOpts dso;
    auto* dataset = app.add_subcommand("dataset", "Manage the dataset manifest");
    dataset->require_subcommand(1);
    auto* ds_init = dataset->add_subcommand("init", "Create a manifest from an image directory");
    ds_init->add_option("--manifest", dso.manifest, "Manifest to write")->required();
    ds_init->add_option("--images", dso.images, "Image directory")->required();
    ds_init->add_flag("--force", dso.force, "Overwrite an existing manifest");
    ds_init->callback([&] { run_dataset_init(dso); });
    auto* ds_validate = dataset->add_subcommand("validate", "Check files and rating completeness");
    ds_validate->add_option("--manifest", dso.manifest, "Manifest")->required();
    ds_validate->callback([&] { run_dataset_validate(dso); });
    auto* ds_stats = dataset->add_subcommand("stats", "Kendall's W, Ridit table and attribute correlation");
    ds_stats->add_option("--manifest", dso.manifest, "Manifest")->required();
    ds_stats->add_option("--out", dso.out, "Output directory")->default_val("stats");
    ds_stats->callback([&] { run_dataset_stats(dso); });

    FeaturesOpts fo;
    auto* features = app.add_subcommand("features", "Extract or import image features");
    features->require_subcommand(1);
    auto* f_extract = features->add_subcommand("extract", "Built-in descriptor for every manifest image");
    f_extract->add_option("--manifest", fo.manifest, "Manifest")->required();
    f_extract->add_option("--out", fo.out, "Feature file")->required();
    f_extract->add_option("--policy", fo.policy, "dense_crop|single_resize")
        ->check(CLI::IsMember({"dense_crop", "single_resize"}));
    f_extract->add_option("--crops", fo.crops, "Dense crops per image")->default_val(kDenseCrops);
    f_extract->callback([&] { run_features_extract(fo); });
    auto* f_import = features->add_subcommand("import", "Import external features from CSV (id,v1,...,vD)");
    f_import->add_option("--manifest", fo.manifest, "Manifest")->required();
    f_import->add_option("--from", fo.from, "CSV file")->required();
    f_import->add_option("--out", fo.out, "Feature file")->required();
    f_import->callback([&] { run_features_import(fo); });

    TrainOpts to;
    auto* train_cmd = app.add_subcommand("train", "Train a retargetability model");
    train_cmd->add_option("--manifest", to.manifest, "Manifest with ratings")->required();
    train_cmd->add_option("--features", to.features, "Feature file")->required();
    train_cmd->add_option("--variant", to.variant, "full|net-|net+|net*|net&|net@")
        ->check(CLI::IsMember({"full", "net-", "net+", "net*", "net&", "net@"}));
    train_cmd->add_option("--config", to.config, "JSON hyperparameters");
    train_cmd->add_option("--seed", to.seed, "Overrides the config seed");
    train_cmd->add_option("--aggregation", to.aggregation, "max|mean")->check(CLI::IsMember({"max", "mean"}));
    train_cmd->add_option("--model-out", to.model_out, "Model file")->required();
    train_cmd->callback([&] { run_train(to); });

    PredictOpts po;
    auto* predict_cmd = app.add_subcommand("predict", "Predict retargetability");
    predict_cmd->add_option("--model", po.model, "Model file")->required();
    predict_cmd->add_option("--in", po.in, "Image");
    predict_cmd->add_option("--features", po.features, "Feature file");
    predict_cmd->add_option("--classifiers", po.classifiers, "Classifier file, adds suggested_method");
    predict_cmd->add_flag("--json", po.json_out, "JSON output");
    predict_cmd->callback([&] { run_predict(po); });

    EvaluateOpts eo;
    auto* evaluate = app.add_subcommand("evaluate", "RMSE, ROC/AUC and attribute accuracy");
    evaluate->add_option("--model", eo.model, "Model file")->required();
    evaluate->add_option("--manifest", eo.manifest, "Manifest with ratings")->required();
    evaluate->add_option("--features", eo.features, "Feature file")->required();
    evaluate->add_option("--sigma", eo.sigma, "Positive-label thresholds")->default_val(std::vector<double>{0.95});
    evaluate->add_option("--out", eo.out, "Also write the JSON report here");
    evaluate->add_option("--roc-csv", eo.roc_csv, "ROC plot data");
    evaluate->callback([&] { run_evaluate(eo); });

    SelectOpts so;
    auto* select = app.add_subcommand("select-method", "Suggest a retargeting engine for an image");
    select->add_option("--model", so.model, "Model file")->required();
    select->add_option("--classifiers", so.classifiers, "Classifier file")->required();
    select->add_option("--in", so.in, "Image")->required();
    select->add_flag("--json", so.json_out, "JSON output with decision values");
    select->callback([&] { run_select(so); });

    SelectorTrainOpts sto;
    auto* train_sel = app.add_subcommand("train-selector", "Train the per-engine classifiers");
    train_sel->add_option("--model", sto.model, "Model file")->required();
    train_sel->add_option("--manifest", sto.manifest, "Manifest with ratings")->required();
    train_sel->add_option("--features", sto.features, "Feature file")->required();
    train_sel->add_option("--lambda", sto.lambda, "Regularization")->default_val(1e-3);
    train_sel->add_option("--epochs", sto.epochs, "Passes over the data")->default_val(50);
    train_sel->add_option("--seed", sto.seed, "Seed")->default_val(1);
    train_sel->add_option("--out", sto.out, "Classifier file")->required();
    train_sel->callback([&] { run_train_selector(sto); });

    AssessOpts ao;
    auto* assess = app.add_subcommand("assess-set", "List images whose label lies in the assessment band");
    assess->add_option("--manifest", ao.manifest, "Manifest with ratings")->required();
    assess->add_option("--band", ao.band, "low:high, low exclusive")->default_val("0.0:0.75");
    assess->add_option("--out", ao.out, "Output list")->required();
    assess->callback([&] { run_assess(ao); });

    CollageOpts co;
    auto* collage = app.add_subcommand("collage", "Compose a collage ordered by retargetability");
    collage->add_option("--images", co.images, "Image directory")->required();
    collage->add_option("--model", co.model, "Model file")->required();
    collage->add_option("--classifiers", co.classifiers, "Classifier file; crop is used without it");
    collage->add_option("--canvas", co.canvas, "WxH")->required();
    collage->add_option("--seed", co.seed, "Layout seed")->default_val(1);
    collage->add_flag("--shuffled", co.shuffled, "Ignore retargetability when assigning regions");
    collage->add_option("--layout-out", co.layout_out, "Write the layout JSON");
    collage->add_option("--out", co.out, "Output image")->required();
    collage->callback([&] { run_collage(co); });

    ServeOpts sv;
    auto* serve = app.add_subcommand("serve", "Run the annotation service");
    serve->add_option("--manifest", sv.manifest, "Manifest")->required();
    serve->add_option("--port", sv.port, "Port, 0 picks a free one")->default_val(8080);
    serve->add_option("--host", sv.host, "Bind address")->default_val("127.0.0.1");
    serve->add_option("--static", sv.static_dir, "UI bundle directory")->required();
    serve->add_option("--raters", sv.raters, "Comma-separated rater ids")->required();
    serve->add_option("--log", sv.log, "Event log, default <manifest>.events.jsonl");
    serve->add_option("--snapshot", sv.snapshot, "Manifest snapshot, default <stem>.snapshot.jsonl");
    serve->add_option("--seed", sv.seed, "Variant shuffle seed")->default_val(1);
    serve->callback([&] { run_serve(sv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
