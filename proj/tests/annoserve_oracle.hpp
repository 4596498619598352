#pragma once

// Log-level oracle and a scripted rater session shared by test_annoserve and
// the acceptance binary.

#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "rtk/annoserve.hpp"
#include "rtk/error.hpp"

namespace rtk::test {

using nlohmann::json;

// Aggregates recomputed straight from the log text, without apply_event.
struct LogTotals {
    std::map<std::tuple<std::string, std::string, std::string>, std::string> ratings;  // image, method, rater
    std::array<int, 4> wins{};
    std::array<int, 4> losses{};
    std::array<int, 4> comparable{};
    int votes = 0;
    std::map<std::string, std::pair<int, int>> vigilance;  // rater -> failed, answered
};

inline LogTotals totals_from_log(const std::vector<std::string>& lines) {
    LogTotals t;
    std::map<std::string, json> trials;
    std::vector<std::pair<json, std::string>> votes;
    for (const auto& line : lines) {
        const auto j = json::parse(line);
        if (j["type"] == "ratings") {
            for (const auto& r : j["records"]) {
                t.ratings[{j["image"], r["method"], j["rater"]}] = r["level"];
            }
        } else if (j["type"] == "trial") {
            trials[j["id"]] = j;
        } else if (j["type"] == "vote") {
            const auto& trial = trials.at(j["trial"]);
            votes.emplace_back(trial, j["choice"]);
            if (trial["vigilance"].get<bool>()) {
                auto& v = t.vigilance[trial["rater"]];
                v.first += j["choice"] != "comparable" ? 1 : 0;
                v.second += 1;
            }
        }
    }
    for (const auto& [trial, choice] : votes) {
        const auto& v = t.vigilance[trial["rater"]];
        if (trial["vigilance"].get<bool>() || 2 * v.first > v.second) {
            continue;
        }
        const auto l = static_cast<std::size_t>(parse_engine(trial["left"].get<std::string>()));
        const auto r = static_cast<std::size_t>(parse_engine(trial["right"].get<std::string>()));
        ++t.votes;
        if (choice == "left") {
            ++t.wins[l];
            ++t.losses[r];
        } else if (choice == "right") {
            ++t.wins[r];
            ++t.losses[l];
        } else {
            ++t.comparable[l];
            ++t.comparable[r];
        }
    }
    return t;
}

// Random ratings, attributes and votes, including rejected submissions. The
// last rater always answers "right" and so fails every vigilance trial; the
// others pass theirs.
inline void scripted_session(AnnotationStore& store, const std::vector<std::string>& raters, int images,
                             std::mt19937_64& rng, int steps) {
    const char* levels[3] = {"good", "acceptable", "poor"};
    for (int step = 0; step < steps; ++step) {
        const auto rater = raters[rng() % raters.size()];
        const auto action = rng() % 4;
        try {
            if (action == 0) {
                if (const auto t = store.next_task(rater)) {
                    std::map<std::string, std::string> m;
                    for (const auto& v : t->variants) m[v.key] = levels[rng() % 3];
                    if (rng() % 5 == 0) m.erase(m.begin());
                    store.submit_rating(t->task_id, rater, m);
                }
            } else if (action == 1) {
                AttributeFlags f{};
                for (auto& x : f) x = rng() % 2 == 0 ? 1 : -1;
                store.submit_attributes("img" + std::to_string(1 + rng() % static_cast<unsigned>(images)), rater, f);
            } else {
                const auto t = store.next_comparison(rater);
                Choice c = static_cast<Choice>(rng() % 3);
                if (rater == raters.back()) {
                    c = Choice::right;
                } else if (t.vigilance) {
                    c = Choice::comparable;
                }
                store.submit_vote(t.trial_id, c);
            }
        } catch (const ValidationError&) {
        } catch (const ConflictError&) {
        }
    }
}

}  // namespace rtk::test
