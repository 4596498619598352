#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtk/annotstats.hpp"

namespace rtk {

inline constexpr int kVigilancePeriod = 10;
inline constexpr double kVigilanceFailLimit = 0.5;

struct VariantRef {
    std::string key;  // opaque, resolvable only server-side
    std::string url;
};

struct RatingTask {
    std::string task_id;
    std::string image_id;
    std::string rater_id;
    std::string original_url;
    std::array<VariantRef, 4> variants;  // shuffled per (rater, image)
};

enum class Choice { left, right, comparable };

std::string_view choice_name(Choice c);
/// ValidationError for anything but left / right / comparable.
Choice parse_choice(std::string_view name);

struct ComparisonTrial {
    std::string trial_id;
    std::string rater_id;
    int position = 0;  // 1-based per rater
    std::string image_id;
    EngineId left = EngineId::crop;
    EngineId right = EngineId::crop;
    bool vigilance = false;
    std::optional<Choice> vote;

    bool operator==(const ComparisonTrial&) const = default;
};

/// Trial at 1-based position p is a vigilance trial iff p is a multiple of 10.
bool is_vigilance_position(int position);

struct RaterState {
    std::set<std::string> rated_images;
    std::set<std::string> annotated_images;
    int trials = 0;
    int vigilance_answered = 0;
    int vigilance_failed = 0;
    std::string open_trial;

    /// More than half of the answered vigilance trials failed.
    bool flagged() const;
    bool operator==(const RaterState&) const = default;
};

struct StoredRating {
    std::string image_id;
    EngineId method = EngineId::crop;
    std::string rater_id;
    RatingLevel level = RatingLevel::poor;
    std::string timestamp;

    bool operator==(const StoredRating&) const = default;
};

/// Pairwise preference counts over non-vigilance votes of unflagged raters.
struct VoteTally {
    std::array<int, 4> wins{};
    std::array<int, 4> losses{};
    std::array<int, 4> comparable{};
    int votes = 0;

    bool operator==(const VoteTally&) const = default;
};

struct AnnotationState {
    std::map<std::string, RaterState> raters;
    std::vector<StoredRating> ratings;
    std::map<std::string, std::map<std::string, AttributeFlags>> attributes;  // image -> rater -> flags
    std::map<std::string, ComparisonTrial> trials;
    std::uint64_t events = 0;

    VoteTally tally() const;
    bool operator==(const AnnotationState&) const = default;
};

struct AnnotationOptions {
    std::vector<std::string> raters;
    std::uint64_t seed = 1;
    std::filesystem::path log_path;       // empty keeps events in memory only
    std::filesystem::path snapshot_path;  // empty disables snapshots
    int snapshot_every = 50;
    std::function<std::string()> clock;  // defaults to UTC ISO-8601
};

/// Event-sourced annotation store. Every accepted write is one JSON line in
/// the log; replaying the log through the same apply step rebuilds the
/// state. All public members are serialized by one mutex.
class AnnotationStore {
public:
    /// Replays an existing log at options.log_path before accepting writes.
    AnnotationStore(Manifest manifest, AnnotationOptions options);

    std::optional<RatingTask> next_task(const std::string& rater);
    /// `levels` maps variant key -> level name. ValidationError for a missing,
    /// unknown or invalid entry; ConflictError when already submitted.
    void submit_rating(const std::string& task_id, const std::string& rater,
                       const std::map<std::string, std::string>& levels);
    void submit_attributes(const std::string& image_id, const std::string& rater, const AttributeFlags& flags);
    /// Returns the rater's unanswered trial if any, else issues the next one.
    ComparisonTrial next_comparison(const std::string& rater);
    void submit_vote(const std::string& trial_id, Choice choice);

    /// Candidate payload for a trial; both keys are equal on vigilance trials.
    std::array<VariantRef, 2> trial_candidates(const ComparisonTrial& trial) const;
    /// NotFoundError for keys never issued.
    std::pair<std::string, EngineId> resolve_variant(const std::string& key) const;

    AnnotationState state() const;
    const Manifest& manifest() const { return manifest_; }
    /// Manifest with every stored rating and the latest attribute flags merged in.
    Manifest merged_manifest() const;
    void write_snapshot() const;
    std::string progress_json() const;
    std::vector<std::string> log_lines() const;

    /// Rebuilds the state from log lines; FormatError names the bad line.
    static AnnotationState replay(const std::vector<std::string>& lines);

private:
    void require_rater(const std::string& rater) const;
    std::string variant_key(const std::string& rater, const std::string& image, EngineId method) const;
    std::array<EngineId, 4> variant_order(const std::string& rater, const std::string& image) const;
    void append(const std::string& line);
    void remember_keys(const std::string& rater, const std::string& image);
    Manifest merged_locked() const;

    Manifest manifest_;
    AnnotationOptions options_;
    std::set<std::string> image_ids_;
    AnnotationState state_;
    std::vector<std::string> lines_;
    std::unordered_map<std::string, std::pair<std::string, EngineId>> keys_;
    std::ofstream log_;
    mutable std::mutex mutex_;
};

/// Applies one event line to `state`. Shared by live writes and replay.
void apply_event(AnnotationState& state, const std::string& line);

}  // namespace rtk
