#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "rtk/annoserve.hpp"
#include "rtk/engines.hpp"

namespace rtk {

/// HTTP/JSON front end of an AnnotationStore plus a static mount at "/".
/// Errors are JSON {code, message}: 404 not_found, 409 conflict,
/// 422 validation, 400 bad_request, 500 internal.
class AnnotationServer {
public:
    AnnotationServer(AnnotationStore& store, std::filesystem::path manifest_path, std::filesystem::path static_dir,
                     EngineParams params = {});
    ~AnnotationServer();

    /// Port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rtk
