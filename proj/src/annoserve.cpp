#include "rtk/annoserve.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "json.hpp"
#include "rtk/error.hpp"
#include "rtk/rng.hpp"

namespace rtk {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix(std::uint64_t seed, std::string_view a, std::string_view b = {}, std::uint64_t salt = 0) {
    std::uint64_t h = fnv1a(b, fnv1a(a, fnv1a("|", seed * 0x9E3779B97F4A7C15ULL + 1)) ^ 0x2F);
    Rng r(h ^ (salt * 0xD1B54A32D192ED03ULL));
    return r.next();
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

EngineId engine_at(const json& j, const char* key) { return parse_engine(j.at(key).get<std::string>()); }

}  // namespace

std::string_view choice_name(Choice c) {
    switch (c) {
        case Choice::left:
            return "left";
        case Choice::right:
            return "right";
        case Choice::comparable:
            return "comparable";
    }
    return "comparable";
}

Choice parse_choice(std::string_view name) {
    if (name == "left") {
        return Choice::left;
    }
    if (name == "right") {
        return Choice::right;
    }
    if (name == "comparable") {
        return Choice::comparable;
    }
    throw ValidationError("choice must be left, right or comparable, got '" + std::string(name) + "'");
}

bool is_vigilance_position(int position) { return position > 0 && position % kVigilancePeriod == 0; }

bool RaterState::flagged() const {
    return vigilance_answered > 0 && vigilance_failed > kVigilanceFailLimit * vigilance_answered;
}

VoteTally AnnotationState::tally() const {
    VoteTally t;
    for (const auto& [id, trial] : trials) {
        if (!trial.vote || trial.vigilance) {
            continue;
        }
        const auto r = raters.find(trial.rater_id);
        if (r != raters.end() && r->second.flagged()) {
            continue;
        }
        const auto l = static_cast<std::size_t>(trial.left);
        const auto rr = static_cast<std::size_t>(trial.right);
        ++t.votes;
        switch (*trial.vote) {
            case Choice::left:
                ++t.wins[l];
                ++t.losses[rr];
                break;
            case Choice::right:
                ++t.wins[rr];
                ++t.losses[l];
                break;
            case Choice::comparable:
                ++t.comparable[l];
                ++t.comparable[rr];
                break;
        }
    }
    return t;
}

void apply_event(AnnotationState& state, const std::string& line) {
    const auto j = json::parse(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "ratings") {
        const auto rater = j.at("rater").get<std::string>();
        const auto image = j.at("image").get<std::string>();
        for (const auto& r : j.at("records")) {
            state.ratings.push_back({image, engine_at(r, "method"), rater, parse_level(r.at("level").get<std::string>()),
                                     r.at("ts").get<std::string>()});
        }
        state.raters[rater].rated_images.insert(image);
    } else if (type == "attributes") {
        const auto rater = j.at("rater").get<std::string>();
        const auto image = j.at("image").get<std::string>();
        const auto flags = j.at("flags").get<AttributeFlags>();
        validate_flags(flags);
        state.attributes[image][rater] = flags;
        state.raters[rater].annotated_images.insert(image);
    } else if (type == "trial") {
        ComparisonTrial t;
        t.trial_id = j.at("id").get<std::string>();
        t.rater_id = j.at("rater").get<std::string>();
        t.position = j.at("position").get<int>();
        t.image_id = j.at("image").get<std::string>();
        t.left = engine_at(j, "left");
        t.right = engine_at(j, "right");
        t.vigilance = j.at("vigilance").get<bool>();
        auto& rs = state.raters[t.rater_id];
        rs.trials = t.position;
        rs.open_trial = t.trial_id;
        state.trials[t.trial_id] = std::move(t);
    } else if (type == "vote") {
        auto& t = state.trials.at(j.at("trial").get<std::string>());
        t.vote = parse_choice(j.at("choice").get<std::string>());
        auto& rs = state.raters[t.rater_id];
        rs.open_trial.clear();
        if (t.vigilance) {
            ++rs.vigilance_answered;
            rs.vigilance_failed += *t.vote != Choice::comparable ? 1 : 0;
        }
    } else {
        throw FormatError("unknown event type '" + type + "'");
    }
    ++state.events;
}

AnnotationState AnnotationStore::replay(const std::vector<std::string>& lines) {
    AnnotationState s;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            apply_event(s, lines[i]);
        } catch (const std::exception& e) {
            throw FormatError("event log line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return s;
}

AnnotationStore::AnnotationStore(Manifest manifest, AnnotationOptions options)
    : manifest_(std::move(manifest)), options_(std::move(options)) {
    if (!options_.clock) {
        options_.clock = utc_now;
    }
    for (const auto& e : manifest_.entries) {
        image_ids_.insert(e.image_id);
    }
    if (!options_.log_path.empty()) {
        if (std::ifstream in(options_.log_path); in) {
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty()) {
                    lines_.push_back(line);
                }
            }
        }
        state_ = replay(lines_);
        for (const auto& [id, t] : state_.trials) {
            remember_keys(t.rater_id, t.image_id);
        }
        log_.open(options_.log_path, std::ios::app | std::ios::binary);
        if (!log_) {
            throw IoError("cannot open event log " + options_.log_path.string());
        }
    }
}

void AnnotationStore::require_rater(const std::string& rater) const {
    if (std::find(options_.raters.begin(), options_.raters.end(), rater) == options_.raters.end()) {
        throw NotFoundError("unknown rater '" + rater + "'");
    }
}

std::string AnnotationStore::variant_key(const std::string& rater, const std::string& image, EngineId method) const {
    return "v-" + hex(mix(options_.seed, rater, image, static_cast<std::uint64_t>(method) + 11));
}

std::array<EngineId, 4> AnnotationStore::variant_order(const std::string& rater, const std::string& image) const {
    std::array<EngineId, 4> order = kAllEngines;
    Rng rng(mix(options_.seed, rater, image, 3));
    for (int i = 3; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.below(i + 1))]);
    }
    return order;
}

void AnnotationStore::remember_keys(const std::string& rater, const std::string& image) {
    for (EngineId m : kAllEngines) {
        keys_[variant_key(rater, image, m)] = {image, m};
    }
}

void AnnotationStore::append(const std::string& line) {
    apply_event(state_, line);
    lines_.push_back(line);
    if (log_.is_open()) {
        log_.write(line.data(), static_cast<std::streamsize>(line.size()));
        log_.put('\n');
        log_.flush();
        if (!log_) {
            throw IoError("cannot append to event log " + options_.log_path.string());
        }
    }
    if (!options_.snapshot_path.empty() && options_.snapshot_every > 0 &&
        state_.events % static_cast<std::uint64_t>(options_.snapshot_every) == 0) {
        const auto tmp = options_.snapshot_path.string() + ".tmp";
        save_manifest(tmp, merged_locked());
        std::filesystem::rename(tmp, options_.snapshot_path);
    }
}

std::optional<RatingTask> AnnotationStore::next_task(const std::string& rater) {
    std::lock_guard lock(mutex_);
    require_rater(rater);
    const auto rs = state_.raters.find(rater);
    for (const auto& image : image_ids_) {
        if (rs != state_.raters.end() && rs->second.rated_images.count(image) != 0) {
            continue;
        }
        const auto* entry = manifest_.find(image);
        const auto prior = std::count_if(entry->ratings.begin(), entry->ratings.end(),
                                         [&](const ManifestRating& r) { return r.rater == rater; });
        if (prior >= 4) {
            continue;
        }
        RatingTask task;
        task.task_id = "k-" + hex(mix(options_.seed, rater, image, 1));
        task.image_id = image;
        task.rater_id = rater;
        task.original_url = "/api/images/" + image;
        const auto order = variant_order(rater, image);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto key = variant_key(rater, image, order[i]);
            task.variants[i] = {key, "/api/images/" + key};
        }
        remember_keys(rater, image);
        return task;
    }
    return std::nullopt;
}

void AnnotationStore::submit_rating(const std::string& task_id, const std::string& rater,
                                    const std::map<std::string, std::string>& levels) {
    std::lock_guard lock(mutex_);
    require_rater(rater);
    const auto it = std::find_if(image_ids_.begin(), image_ids_.end(), [&](const std::string& image) {
        return "k-" + hex(mix(options_.seed, rater, image, 1)) == task_id;
    });
    if (it == image_ids_.end()) {
        throw NotFoundError("unknown task '" + task_id + "' for rater '" + rater + "'");
    }
    const auto& image = *it;
    const auto rs = state_.raters.find(rater);
    if (rs != state_.raters.end() && rs->second.rated_images.count(image) != 0) {
        throw ConflictError("rater '" + rater + "' already rated image '" + image + "'");
    }
    json records = json::array();
    std::size_t matched = 0;
    const auto ts = options_.clock();
    for (EngineId m : kAllEngines) {
        const auto key = variant_key(rater, image, m);
        const auto l = levels.find(key);
        if (l == levels.end()) {
            throw ValidationError("rating for variant '" + key + "' is missing");
        }
        RatingLevel level;
        try {
            level = parse_level(l->second);
        } catch (const Error&) {
            throw ValidationError("variant '" + key + "': level must be good, acceptable or poor, got '" + l->second +
                                  "'");
        }
        ++matched;
        records.push_back({{"method", engine_name(m)}, {"level", level_name(level)}, {"ts", ts}});
    }
    if (matched != levels.size()) {
        throw ValidationError("rating names variants outside this task");
    }
    append(json{{"type", "ratings"}, {"rater", rater}, {"image", image}, {"records", records}}.dump());
}

void AnnotationStore::submit_attributes(const std::string& image_id, const std::string& rater,
                                        const AttributeFlags& flags) {
    std::lock_guard lock(mutex_);
    require_rater(rater);
    if (image_ids_.count(image_id) == 0) {
        throw NotFoundError("unknown image '" + image_id + "'");
    }
    try {
        validate_flags(flags);
    } catch (const ArgumentError& e) {
        throw ValidationError(e.what());
    }
    const auto rs = state_.raters.find(rater);
    if (rs != state_.raters.end() && rs->second.annotated_images.count(image_id) != 0) {
        throw ConflictError("rater '" + rater + "' already annotated image '" + image_id + "'");
    }
    append(json{{"type", "attributes"}, {"rater", rater}, {"image", image_id}, {"flags", flags}}.dump());
}

ComparisonTrial AnnotationStore::next_comparison(const std::string& rater) {
    std::lock_guard lock(mutex_);
    require_rater(rater);
    if (image_ids_.empty()) {
        throw IncompleteDataError("no images to compare");
    }
    const auto rs = state_.raters.find(rater);
    if (rs != state_.raters.end() && !rs->second.open_trial.empty()) {
        return state_.trials.at(rs->second.open_trial);
    }
    const int position = (rs == state_.raters.end() ? 0 : rs->second.trials) + 1;
    Rng rng(mix(options_.seed, rater, "trial", static_cast<std::uint64_t>(position)));
    std::vector<std::string> ids(image_ids_.begin(), image_ids_.end());
    const auto& image = ids[static_cast<std::size_t>(rng.below(static_cast<int>(ids.size())))];
    const bool vigilance = is_vigilance_position(position);
    const int a = rng.below(4);
    int b = a;
    if (!vigilance) {
        b = rng.below(3);
        b += b >= a ? 1 : 0;
    }
    const auto id = "t-" + hex(mix(options_.seed, rater, "trial-id", static_cast<std::uint64_t>(position)));
    append(json{{"type", "trial"},
                {"id", id},
                {"rater", rater},
                {"position", position},
                {"image", image},
                {"left", engine_name(kAllEngines[static_cast<std::size_t>(a)])},
                {"right", engine_name(kAllEngines[static_cast<std::size_t>(b)])},
                {"vigilance", vigilance}}
               .dump());
    remember_keys(rater, image);
    return state_.trials.at(id);
}

void AnnotationStore::submit_vote(const std::string& trial_id, Choice choice) {
    std::lock_guard lock(mutex_);
    const auto it = state_.trials.find(trial_id);
    if (it == state_.trials.end()) {
        throw NotFoundError("unknown trial '" + trial_id + "'");
    }
    if (it->second.vote) {
        throw ConflictError("trial '" + trial_id + "' already has a vote");
    }
    append(json{{"type", "vote"}, {"trial", trial_id}, {"choice", choice_name(choice)}}.dump());
}

std::array<VariantRef, 2> AnnotationStore::trial_candidates(const ComparisonTrial& trial) const {
    const auto l = variant_key(trial.rater_id, trial.image_id, trial.left);
    const auto r = variant_key(trial.rater_id, trial.image_id, trial.right);
    return {VariantRef{l, "/api/images/" + l}, VariantRef{r, "/api/images/" + r}};
}

std::pair<std::string, EngineId> AnnotationStore::resolve_variant(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = keys_.find(key);
    if (it == keys_.end()) {
        throw NotFoundError("unknown image '" + key + "'");
    }
    return it->second;
}

AnnotationState AnnotationStore::state() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::vector<std::string> AnnotationStore::log_lines() const {
    std::lock_guard lock(mutex_);
    return lines_;
}

Manifest AnnotationStore::merged_manifest() const {
    std::lock_guard lock(mutex_);
    return merged_locked();
}

Manifest AnnotationStore::merged_locked() const {
    Manifest m = manifest_;
    for (auto& e : m.entries) {
        for (const auto& r : state_.ratings) {
            if (r.image_id == e.image_id) {
                e.ratings.push_back({r.method, r.rater_id, r.level, r.timestamp});
            }
        }
        const auto a = state_.attributes.find(e.image_id);
        if (a == state_.attributes.end()) {
            continue;
        }
        AttributeFlags merged{};
        for (int k = 0; k < kAttributeCount; ++k) {
            int sum = 0;
            for (const auto& [rater, flags] : a->second) {
                sum += flags[static_cast<std::size_t>(k)];
            }
            merged[static_cast<std::size_t>(k)] = sum > 0 ? 1 : -1;
        }
        e.attributes = merged;
    }
    return m;
}

void AnnotationStore::write_snapshot() const {
    if (options_.snapshot_path.empty()) {
        return;
    }
    std::lock_guard lock(mutex_);
    const auto tmp = options_.snapshot_path.string() + ".tmp";
    save_manifest(tmp, merged_locked());
    std::filesystem::rename(tmp, options_.snapshot_path);
}

std::string AnnotationStore::progress_json() const {
    std::lock_guard lock(mutex_);
    json j;
    j["images"] = image_ids_.size();
    j["ratings"] = state_.ratings.size();
    j["raters"] = json::array();
    for (const auto& id : options_.raters) {
        const auto it = state_.raters.find(id);
        const RaterState rs = it == state_.raters.end() ? RaterState{} : it->second;
        j["raters"].push_back({{"id", id},
                               {"rated", rs.rated_images.size()},
                               {"annotated", rs.annotated_images.size()},
                               {"trials", rs.trials},
                               {"vigilance_answered", rs.vigilance_answered},
                               {"vigilance_failed", rs.vigilance_failed},
                               {"flagged", rs.flagged()}});
    }
    const auto t = state_.tally();
    j["tally"]["votes"] = t.votes;
    for (EngineId m : kAllEngines) {
        const auto i = static_cast<std::size_t>(m);
        j["tally"]["methods"][std::string(engine_name(m))] = {
            {"wins", t.wins[i]}, {"losses", t.losses[i]}, {"comparable", t.comparable[i]}};
    }
    return j.dump();
}

}  // namespace rtk
