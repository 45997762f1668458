#include "motioncloud/service.hpp"

#include "motioncloud/archive.hpp"
#include "motioncloud/error.hpp"
#include "serialization.hpp"

#include <httplib.h>

#include <chrono>
#include <set>

namespace motioncloud {

using json = nlohmann::json;

namespace {

ServiceResponse error_response(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump()};
}

void reply(httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
}

}  // namespace

struct QueryService::Impl {
    ActionModel model;
    std::vector<IndexRecord> index;
    ServiceConfig cfg;
    httplib::Server server;
    int bound_port = -1;
};

QueryService::QueryService(ActionModel model, std::vector<IndexRecord> index, ServiceConfig cfg)
    : impl_(std::make_unique<Impl>()) {
    if (index.empty()) throw InvalidArgument("service: the index is empty");
    for (const auto& r : index) {
        if (r.signature.centroid.size() != model.eigen.eigenvalues.size()) {
            throw InvalidArgument("service: index dimension does not match the model");
        }
    }
    impl_->model = std::move(model);
    impl_->index = std::move(index);
    impl_->cfg = std::move(cfg);

    auto& srv = impl_->server;
    srv.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
    srv.Get("/v1/videos", [this](const httplib::Request&, httplib::Response& res) { reply(res, videos()); });
    srv.Get(R"(/v1/videos/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, annotations(req.matches[1].str()));
    });
    srv.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) {
        int top = impl_->cfg.default_top;
        double rho = impl_->cfg.metric.rho;
        try {
            if (req.has_param("top")) {
                std::size_t used = 0;
                const std::string v = req.get_param_value("top");
                top = std::stoi(v, &used);
                if (used != v.size() || top < 1) throw std::invalid_argument("top");
            }
            if (req.has_param("rho")) {
                std::size_t used = 0;
                const std::string v = req.get_param_value("rho");
                rho = std::stod(v, &used);
                if (used != v.size() || !(rho >= 0.0)) throw std::invalid_argument("rho");
            }
        } catch (const std::exception&) {
            reply(res, error_response(400, "invalid query parameter: top must be a positive integer, rho >= 0"));
            return;
        }
        if (req.is_multipart_form_data()) {
            if (req.files.empty()) {
                reply(res, error_response(400, "multipart upload carries no file part"));
                return;
            }
            const auto& part = req.has_file("clip") ? req.get_file_value("clip") : req.files.begin()->second;
            const auto* p = reinterpret_cast<const std::uint8_t*>(part.content.data());
            reply(res, query({p, part.content.size()}, top, rho));
            return;
        }
        const auto* p = reinterpret_cast<const std::uint8_t*>(req.body.data());
        reply(res, query({p, req.body.size()}, top, rho));
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            res.set_content(json{{"error", httplib::status_message(res.status)}}.dump(), "application/json");
        }
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", what}}.dump(), "application/json");
    });
}

QueryService::QueryService(const std::filesystem::path& model_dir, const std::filesystem::path& index_path,
                           ServiceConfig cfg)
    : QueryService(load_action_model(model_dir), load_index(index_path), std::move(cfg)) {}

QueryService::~QueryService() { stop(); }

int QueryService::bind() {
    if (impl_->bound_port >= 0) return impl_->bound_port;
    auto& srv = impl_->server;
    if (impl_->cfg.port == 0) {
        impl_->bound_port = srv.bind_to_any_port(impl_->cfg.host);
    } else if (srv.bind_to_port(impl_->cfg.host, impl_->cfg.port)) {
        impl_->bound_port = impl_->cfg.port;
    }
    if (impl_->bound_port < 0) {
        throw IoError("service: cannot bind " + impl_->cfg.host + ":" + std::to_string(impl_->cfg.port));
    }
    return impl_->bound_port;
}

void QueryService::run() {
    bind();
    impl_->server.listen_after_bind();
}

void QueryService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

ServiceResponse QueryService::health() const {
    std::set<std::string> ids;
    for (const auto& r : impl_->index) ids.insert(r.video_id);
    return {200, json{{"status", "ok"}, {"videos", ids.size()}}.dump()};
}

ServiceResponse QueryService::videos() const {
    std::map<std::string, int> windows;
    for (const auto& r : impl_->index) windows[r.video_id] += 1;
    json list = json::array();
    for (const auto& [id, n] : windows) list.push_back({{"video_id", id}, {"windows", n}});
    return {200, json{{"videos", list}}.dump()};
}

ServiceResponse QueryService::annotations(const std::string& video_id) const {
    json records = json::array();
    for (const auto& r : impl_->index) {
        if (r.video_id == video_id) records.push_back(detail::index_record_json(r));
    }
    if (records.empty()) return error_response(404, "unknown video '" + video_id + "'");
    return {200, json{{"video_id", video_id}, {"records", records}}.dump()};
}

ServiceResponse QueryService::query(std::span<const std::uint8_t> archive, int top, double rho) const {
    const auto t0 = std::chrono::steady_clock::now();
    if (archive.empty()) return error_response(400, "empty upload");
    QueryResult result;
    try {
        const FrameSequence clip = sequence_from_archive(archive, impl_->model.config.frame_size);
        MetricParams metric = impl_->cfg.metric;
        metric.rho = rho;
        result = query_similarity(clip, impl_->model, impl_->index, top, metric);
    } catch (const InvalidArgument& e) {
        return error_response(400, e.what());
    } catch (const IoError& e) {
        return error_response(400, e.what());
    }
    json hits = json::array();
    for (const auto& h : result.hits) {
        hits.push_back({{"video_id", h.video_id},
                        {"window", {h.start_frame, h.end_frame}},
                        {"similarity_pct", detail::round9(h.similarity)},
                        {"predicted_class", h.predicted}});
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return {200, json{{"results", hits}, {"null_query", result.null_query}, {"timing_ms", ms}}.dump()};
}

}  // namespace motioncloud
