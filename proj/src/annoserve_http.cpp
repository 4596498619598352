#include "rtk/annoserve_http.hpp"

#include <map>
#include <mutex>

#include "httplib.h"
#include "json.hpp"
#include "rtk/error.hpp"
#include "rtk/imaging.hpp"
#include "rtk/importance.hpp"

namespace rtk {

using nlohmann::json;

namespace {

void send_error(httplib::Response& res, int status, const char* code, const std::string& message) {
    res.status = status;
    res.set_content(json{{"code", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& j) { res.set_content(j.dump(), "application/json"); }

std::string need_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) {
        throw ArgumentError(std::string("missing query parameter '") + name + "'");
    }
    return req.get_param_value(name);
}

json body_of(const httplib::Request& req) {
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) {
            throw ArgumentError("request body must be a JSON object");
        }
        return j;
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("malformed JSON body: ") + e.what());
    }
}

template <class T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) {
        throw ValidationError(std::string("field '") + name + "' is missing");
    }
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + name + "' has the wrong type");
    }
}

}  // namespace

struct AnnotationServer::Impl {
    AnnotationStore& store;
    std::filesystem::path manifest_path;
    EngineParams params;
    httplib::Server server;
    std::mutex cache_mutex;
    std::map<std::string, std::string> png_cache;

    Impl(AnnotationStore& s, std::filesystem::path m, EngineParams p)
        : store(s), manifest_path(std::move(m)), params(p) {}

    std::string image_png(const std::string& key) {
        {
            std::lock_guard lock(cache_mutex);
            if (const auto it = png_cache.find(key); it != png_cache.end()) {
                return it->second;
            }
        }
        std::string image_id = key;
        std::optional<EngineId> method;
        if (store.manifest().find(key) == nullptr) {
            const auto [id, m] = store.resolve_variant(key);
            image_id = id;
            method = m;
        }
        const auto* entry = store.manifest().find(image_id);
        auto img = load_image(resolve_image_path(manifest_path, *entry));
        if (method) {
            RetargetJob job;
            job.importance = build_importance(img);
            job.engine = *method;
            job.target_width = img.width();
            job.target_height = img.height();
            if (img.width() >= img.height()) {
                job.target_width = std::max(kMinTargetExtent, img.width() / 2);
            } else {
                job.target_height = std::max(kMinTargetExtent, img.height() / 2);
            }
            job.source = std::move(img);
            img = retarget(job, params).result;
        }
        const auto bytes = encode_png(img);
        std::string png(bytes.begin(), bytes.end());
        std::lock_guard lock(cache_mutex);
        png_cache.emplace(key, png);
        return png;
    }

    json task_json(const std::optional<RatingTask>& task) const {
        if (!task) {
            return {{"done", true}};
        }
        json variants = json::array();
        for (const auto& v : task->variants) {
            variants.push_back({{"key", v.key}, {"url", v.url}});
        }
        return {{"done", false},
                {"task_id", task->task_id},
                {"image_id", task->image_id},
                {"rater", task->rater_id},
                {"original", task->original_url},
                {"variants", variants}};
    }

    json trial_json(const ComparisonTrial& t) const {
        const auto c = store.trial_candidates(t);
        return {{"trial_id", t.trial_id},
                {"original", "/api/images/" + t.image_id},
                {"left", {{"key", c[0].key}, {"url", c[0].url}}},
                {"right", {{"key", c[1].key}, {"url", c[1].url}}}};
    }

    void routes() {
        server.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, task_json(store.next_task(need_param(req, "rater"))));
        });
        server.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
            const auto j = body_of(req);
            const auto levels = field<std::map<std::string, std::string>>(j, "levels");
            store.submit_rating(field<std::string>(j, "task_id"), field<std::string>(j, "rater"), levels);
            send_json(res, {{"ok", true}, {"records", 4}});
        });
        server.Post("/api/attributes", [this](const httplib::Request& req, httplib::Response& res) {
            const auto j = body_of(req);
            const auto flags = field<std::vector<int>>(j, "flags");
            if (flags.size() != static_cast<std::size_t>(kAttributeCount)) {
                throw ValidationError("flags must hold 14 entries, got " + std::to_string(flags.size()));
            }
            AttributeFlags f{};
            std::copy(flags.begin(), flags.end(), f.begin());
            store.submit_attributes(field<std::string>(j, "image_id"), field<std::string>(j, "rater"), f);
            send_json(res, {{"ok", true}});
        });
        server.Get("/api/comparisons/next", [this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, trial_json(store.next_comparison(need_param(req, "rater"))));
        });
        server.Post("/api/votes", [this](const httplib::Request& req, httplib::Response& res) {
            const auto j = body_of(req);
            store.submit_vote(field<std::string>(j, "trial_id"), parse_choice(field<std::string>(j, "choice")));
            send_json(res, {{"ok", true}});
        });
        server.Get(R"(/api/images/([A-Za-z0-9_.\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            res.set_content(image_png(req.matches[1]), "image/png");
        });
        server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(store.progress_json(), "application/json");
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const NotFoundError& e) {
                send_error(res, 404, "not_found", e.what());
            } catch (const ConflictError& e) {
                send_error(res, 409, "conflict", e.what());
            } catch (const ValidationError& e) {
                send_error(res, 422, "validation", e.what());
            } catch (const ArgumentError& e) {
                send_error(res, 400, "bad_request", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            } catch (...) {
                send_error(res, 500, "internal", "unknown error");
            }
        });
    }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, std::filesystem::path manifest_path,
                                   std::filesystem::path static_dir, EngineParams params)
    : impl_(std::make_unique<Impl>(store, std::move(manifest_path), params)) {
    impl_->routes();
    if (!static_dir.empty() && !impl_->server.set_mount_point("/", static_dir.string())) {
        throw IoError("static directory " + static_dir.string() + " does not exist");
    }
}

AnnotationServer::~AnnotationServer() = default;

int AnnotationServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) {
            throw IoError("cannot bind " + host);
        }
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void AnnotationServer::run() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() { impl_->server.stop(); }

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace rtk
