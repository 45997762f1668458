#pragma once

#include "motioncloud/classifier.hpp"
#include "motioncloud/indexer.hpp"
#include "motioncloud/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace motioncloud {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  ///< 0 picks a free port
    int default_top = 10;
    MetricParams metric;
};

/// Outcome of a query request: HTTP status plus a JSON body.
struct ServiceResponse {
    int status = 200;
    std::string body;
};

/// Read-only HTTP front end over a trained model and its index.
class QueryService {
public:
    QueryService(ActionModel model, std::vector<IndexRecord> index, ServiceConfig cfg = {});
    /// Loads both artifacts; throws when either is missing or corrupt.
    QueryService(const std::filesystem::path& model_dir, const std::filesystem::path& index_path,
                 ServiceConfig cfg = {});
    ~QueryService();

    QueryService(const QueryService&) = delete;
    QueryService& operator=(const QueryService&) = delete;

    /// Binds the listening socket and returns the bound port.
    int bind();
    /// Serves until stop(); bind() is called first if needed.
    void run();
    void stop();

    ServiceResponse health() const;
    ServiceResponse videos() const;
    ServiceResponse annotations(const std::string& video_id) const;
    ServiceResponse query(std::span<const std::uint8_t> archive, int top, double rho) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace motioncloud
