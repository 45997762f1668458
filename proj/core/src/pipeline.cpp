#include "motioncloud/pipeline.hpp"

#include "motioncloud/error.hpp"
#include "motioncloud/file_util.hpp"
#include "motioncloud/model_io.hpp"
#include "serialization.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace motioncloud {

namespace detail {

json signature_json(const CloudSignature& sig) {
    json j;
    j["centroid"] = vector_json(sig.centroid);
    j["radius"] = round9(sig.mean_radius);
    j["binormal"] = sig.mean_binormal ? vector_json(*sig.mean_binormal) : json(nullptr);
    j["points"] = sig.point_count;
    json segments = json::array();
    for (const auto& s : sig.segments) {
        segments.push_back({{"t", vector_json(s.tangent)},
                            {"n", vector_json(s.normal)},
                            {"b", vector_json(s.binormal)},
                            {"kappa", round9(s.mean_curvature)},
                            {"tau", round9(s.mean_torsion)},
                            {"s", {round9(s.s_start), round9(s.s_end)}},
                            {"valid", s.valid}});
    }
    j["segments"] = std::move(segments);
    if (!sig.label.empty()) j["label"] = sig.label;
    return j;
}

CloudSignature signature_from_json(const json& j) {
    CloudSignature sig;
    sig.centroid = vector_from_json(j.at("centroid"));
    sig.mean_radius = j.at("radius").get<double>();
    if (!j.at("binormal").is_null()) sig.mean_binormal = vector3_from_json(j.at("binormal"));
    sig.point_count = j.value("points", 0);
    for (const auto& s : j.at("segments")) {
        SegmentFrame seg;
        seg.tangent = vector3_from_json(s.at("t"));
        seg.normal = vector3_from_json(s.at("n"));
        seg.binormal = vector3_from_json(s.at("b"));
        seg.mean_curvature = s.at("kappa").get<double>();
        seg.mean_torsion = s.at("tau").get<double>();
        if (s.contains("s")) {
            seg.s_start = s.at("s").at(0).get<double>();
            seg.s_end = s.at("s").at(1).get<double>();
            seg.midpoint = 0.5 * (seg.s_start + seg.s_end);
        }
        seg.valid = s.value("valid", true);
        sig.segments.push_back(seg);
    }
    sig.label = j.value("label", std::string{});
    return sig;
}

json pipeline_config_json(const PipelineConfig& cfg) {
    json j;
    j["frame_size"] = {cfg.frame_size.width, cfg.frame_size.height};
    j["flow"] = {{"pyramid_levels", cfg.flow.pyramid_levels},
                 {"window_radius", cfg.flow.window_radius},
                 {"grid_spacing", cfg.flow.grid_spacing},
                 {"min_texture", cfg.flow.min_texture},
                 {"max_iterations", cfg.flow.max_iterations},
                 {"convergence", cfg.flow.convergence}};
    j["mvfi"] = {{"magnitude_floor", cfg.mvfi.magnitude_floor},
                 {"magnitude_cap", cfg.mvfi.magnitude_cap},
                 {"length_gain", cfg.mvfi.length_gain},
                 {"min_length", cfg.mvfi.min_length},
                 {"max_length", cfg.mvfi.max_length},
                 {"box_width", cfg.mvfi.box_width},
                 {"min_intensity", cfg.mvfi.min_intensity},
                 {"max_intensity", cfg.mvfi.max_intensity}};
    j["feature_side"] = cfg.feature_side;
    j["train_stride"] = cfg.train_stride;
    j["dimensions"] = cfg.dimensions;
    j["kind"] = cfg.kind == EigenKind::linear ? "linear" : "polynomial";
    j["degree"] = cfg.degree ? json(*cfg.degree) : json(nullptr);
    j["degree_range"] = cfg.degree_range;
    j["kernel_offset"] = cfg.kernel_offset;
    j["input_scale"] = cfg.input_scale;
    const auto& seg = cfg.geometry.segments;
    j["geometry"] = {{"smoothing", cfg.geometry.smoothing},
                     {"segments", seg.count},
                     {"overlap", seg.overlap},
                     {"end_trim", seg.end_trim},
                     {"samples", seg.samples},
                     {"min_curvature", seg.min_curvature}};
    const auto& m = cfg.metric;
    j["metric"] = {{"beta", m.alpha.beta},
                   {"lambda1", m.alpha.lambda1},
                   {"lambda2", m.alpha.lambda2},
                   {"alpha_variant", m.alpha.variant == AlphaVariant::peaked ? "peaked" : "literal"},
                   {"rho", m.rho},
                   {"fuzzy_neighbors", m.fuzzy.neighbors},
                   {"fuzzifier", m.fuzzy.fuzzifier},
                   {"epsilon", m.fuzzy.epsilon},
                   {"normalize_by_radii", m.normalize_by_radii}};
    j["knn_k"] = cfg.knn_k;
    j["null_threshold"] = cfg.null_threshold;
    return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig cfg;
    cfg.frame_size = {j.at("frame_size").at(0).get<int>(), j.at("frame_size").at(1).get<int>()};
    const auto& f = j.at("flow");
    cfg.flow.pyramid_levels = f.at("pyramid_levels");
    cfg.flow.window_radius = f.at("window_radius");
    cfg.flow.grid_spacing = f.at("grid_spacing");
    cfg.flow.min_texture = f.at("min_texture");
    cfg.flow.max_iterations = f.at("max_iterations");
    cfg.flow.convergence = f.at("convergence");
    const auto& v = j.at("mvfi");
    cfg.mvfi.magnitude_floor = v.at("magnitude_floor");
    cfg.mvfi.magnitude_cap = v.at("magnitude_cap");
    cfg.mvfi.length_gain = v.at("length_gain");
    cfg.mvfi.min_length = v.at("min_length");
    cfg.mvfi.max_length = v.at("max_length");
    cfg.mvfi.box_width = v.at("box_width");
    cfg.mvfi.min_intensity = v.at("min_intensity");
    cfg.mvfi.max_intensity = v.at("max_intensity");
    cfg.feature_side = j.at("feature_side");
    cfg.train_stride = j.at("train_stride");
    cfg.dimensions = j.at("dimensions");
    cfg.kind = j.at("kind") == "linear" ? EigenKind::linear : EigenKind::polynomial;
    if (!j.at("degree").is_null()) cfg.degree = j.at("degree").get<int>();
    cfg.degree_range = j.at("degree_range").get<std::vector<int>>();
    cfg.kernel_offset = j.at("kernel_offset");
    cfg.input_scale = j.at("input_scale");
    const auto& g = j.at("geometry");
    cfg.geometry.smoothing = g.at("smoothing");
    cfg.geometry.segments.count = g.at("segments");
    cfg.geometry.segments.overlap = g.at("overlap");
    cfg.geometry.segments.end_trim = g.at("end_trim");
    cfg.geometry.segments.samples = g.at("samples");
    cfg.geometry.segments.min_curvature = g.at("min_curvature");
    const auto& m = j.at("metric");
    cfg.metric.alpha.beta = m.at("beta");
    cfg.metric.alpha.lambda1 = m.at("lambda1");
    cfg.metric.alpha.lambda2 = m.at("lambda2");
    cfg.metric.alpha.variant = m.at("alpha_variant") == "literal" ? AlphaVariant::literal : AlphaVariant::peaked;
    cfg.metric.rho = m.at("rho");
    cfg.metric.fuzzy.neighbors = m.at("fuzzy_neighbors");
    cfg.metric.fuzzy.fuzzifier = m.at("fuzzifier");
    cfg.metric.fuzzy.epsilon = m.at("epsilon");
    cfg.metric.normalize_by_radii = m.at("normalize_by_radii");
    cfg.knn_k = j.at("knn_k");
    cfg.null_threshold = j.at("null_threshold");
    return cfg;
}

}  // namespace detail

namespace {

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace

ClipFeatures extract_features(const FrameSequence& seq, const PipelineConfig& cfg, std::string clip_id,
                              std::string label) {
    FrameSequence sized;
    const FrameSequence* source = &seq;
    if (seq.width() != cfg.frame_size.width || seq.height() != cfg.frame_size.height) {
        sized.fps = seq.fps;
        for (const auto& f : seq.frames) sized.frames.push_back(resize_frame(f, cfg.frame_size));
        source = &sized;
    }
    const auto templates = sequence_templates(*source, cfg.flow, cfg.mvfi);
    return {std::move(clip_id), std::move(label), template_features(templates, cfg.feature_side)};
}

std::vector<std::string> ActionModel::classes() const {
    std::set<std::string> unique;
    for (const auto& c : clouds) unique.insert(c.label);
    return {unique.begin(), unique.end()};
}

Trajectory ActionModel::trajectory(const Eigen::MatrixXd& features) const {
    return project_sequence(eigen, features);
}

CloudSignature ActionModel::signature(const Trajectory& traj, std::string label) const {
    CloudSignature sig = cloud_signature(traj, config.geometry);
    sig.label = std::move(label);
    return sig;
}

bool ActionModel::is_null(const CloudSignature& sig, double threshold) const {
    const double offset = (sig.centroid - rest_point).norm();
    return offset < threshold * rest_centroid_scale && sig.mean_radius < threshold * rest_radius_scale;
}

double ActionModel::similarity(double distance) const {
    const double scale = reference_distance > 0.0 ? reference_distance : 1.0;
    return std::clamp(100.0 * std::exp(-std::max(distance, 0.0) / scale), 0.0, 100.0);
}

Classification ActionModel::classify(const CloudSignature& sig, const Trajectory& traj,
                                     const MetricParams& metric) const {
    if (metric.rho > 0.0) {
        const auto query_points = tag_points(traj, sig, {});
        const FuzzyContext context{query_points, points};
        return classify_cloud(sig, clouds, metric, &context);
    }
    return classify_cloud(sig, clouds, metric, nullptr);
}

KnnVote ActionModel::classify_knn(const Trajectory& traj, int k) const {
    return baseline_knn(traj.points, points, k);
}

ActionModel train_action_model(const std::vector<ClipFeatures>& clips, const PipelineConfig& cfg) {
    if (clips.empty()) {
        throw InvalidArgument("train_action_model: no training clips");
    }
    if (cfg.train_stride < 1) {
        throw InvalidArgument("train_stride must be >= 1");
    }
    std::set<std::string> labels;
    Eigen::Index rows = 0;
    for (const auto& c : clips) {
        if (c.label.empty()) throw InvalidArgument("training clip '" + c.clip_id + "' has no label");
        labels.insert(c.label);
        rows += (c.features.rows() + cfg.train_stride - 1) / cfg.train_stride;
    }
    const Eigen::Index dim = clips.front().features.cols();
    TrainingSet data;
    data.samples.resize(rows, dim);
    Eigen::Index r = 0;
    for (const auto& c : clips) {
        if (c.features.cols() != dim) throw InvalidArgument("training clips disagree on feature length");
        for (Eigen::Index i = 0; i < c.features.rows(); i += cfg.train_stride) {
            data.samples.row(r++) = c.features.row(i);
            data.labels.push_back(c.label);
            data.clip_ids.push_back(c.clip_id);
        }
    }

    ActionModel model;
    model.config = cfg;
    if (cfg.kind == EigenKind::linear) {
        model.eigen = train_pca(data, cfg.dimensions);
    } else {
        int degree = cfg.degree.value_or(0);
        if (!cfg.degree) {
            if (labels.size() < 2) throw InvalidArgument("degree tuning needs at least two classes");
            const auto sweep =
                tune_kernel_degree(data, cfg.dimensions, cfg.degree_range, cfg.kernel_offset, cfg.input_scale);
            degree = sweep.best_degree;
            for (const auto& [d, ratio] : sweep.curve) {
                model.degree_curve_degrees.push_back(d);
                model.degree_curve_ratios.push_back(ratio);
            }
            model.config.degree = degree;
        }
        model.eigen = train_kpca(data, cfg.dimensions, {degree, cfg.kernel_offset, cfg.input_scale});
    }

    for (const auto& c : clips) {
        const Trajectory traj = model.trajectory(c.features);
        CloudSignature sig = model.signature(traj, c.label);
        auto tagged = tag_points(traj, sig, c.label);
        model.points.insert(model.points.end(), std::make_move_iterator(tagged.begin()),
                            std::make_move_iterator(tagged.end()));
        model.clouds.push_back(std::move(sig));
        model.clip_ids.push_back(c.clip_id);
    }

    MetricParams plain = cfg.metric;
    plain.rho = 0.0;
    std::vector<double> cross;
    for (std::size_t i = 0; i < model.clouds.size(); ++i) {
        for (std::size_t j = i + 1; j < model.clouds.size(); ++j) {
            if (model.clouds[i].label != model.clouds[j].label) {
                cross.push_back(cloud_distance(model.clouds[i], model.clouds[j], plain).total);
            }
        }
    }
    const double d0 = median(cross);
    model.reference_distance = d0 > 0.0 ? d0 : 1.0;

    model.rest_point = model.eigen.project(Eigen::VectorXd::Zero(dim));
    std::vector<double> offsets, radii;
    for (const auto& c : model.clouds) {
        offsets.push_back((c.centroid - model.rest_point).norm());
        radii.push_back(c.mean_radius);
    }
    model.rest_centroid_scale = median(offsets);
    model.rest_radius_scale = median(radii);
    return model;
}

void save_action_model(const ActionModel& model, const std::filesystem::path& dir) {
    using detail::json;
    std::filesystem::create_directories(dir);
    save_eigen_model(model.eigen, dir / "eigenspace.json", dir / "eigenspace.bin");

    json doc;
    doc["format"] = "mcmodel";
    doc["version"] = 1;
    doc["config"] = detail::pipeline_config_json(model.config);
    doc["reference_distance"] = model.reference_distance;
    doc["rest_point"] = std::vector<double>(model.rest_point.data(), model.rest_point.data() + model.rest_point.size());
    doc["rest_centroid_scale"] = model.rest_centroid_scale;
    doc["rest_radius_scale"] = model.rest_radius_scale;
    doc["degree_curve"] = json::array();
    for (std::size_t i = 0; i < model.degree_curve_degrees.size(); ++i) {
        doc["degree_curve"].push_back({model.degree_curve_degrees[i], model.degree_curve_ratios[i]});
    }
    json clouds = json::array();
    for (std::size_t i = 0; i < model.clouds.size(); ++i) {
        json c = detail::signature_json(model.clouds[i]);
        c["clip_id"] = model.clip_ids[i];
        clouds.push_back(std::move(c));
    }
    doc["clouds"] = std::move(clouds);
    json points = json::array();
    for (const auto& p : model.points) {
        points.push_back({{"y", detail::vector_json(p.position)},
                          {"t", detail::vector_json(p.local.tangent)},
                          {"kappa", detail::round9(p.local.curvature)},
                          {"tau", detail::round9(p.local.torsion)},
                          {"label", p.label}});
    }
    doc["points"] = std::move(points);
    atomic_write(dir / "model.json", doc.dump());
}

ActionModel load_action_model(const std::filesystem::path& dir) {
    using detail::json;
    ActionModel model;
    model.eigen = load_eigen_model(dir / "eigenspace.json", dir / "eigenspace.bin");
    try {
        const json doc = json::parse(read_text(dir / "model.json"));
        if (doc.at("format") != "mcmodel" || doc.at("version") != 1) {
            throw IoError("model.json: unsupported format or version");
        }
        model.config = detail::pipeline_config_from_json(doc.at("config"));
        model.reference_distance = doc.at("reference_distance");
        model.rest_point = detail::vector_from_json(doc.at("rest_point"));
        model.rest_centroid_scale = doc.at("rest_centroid_scale");
        model.rest_radius_scale = doc.at("rest_radius_scale");
        for (const auto& e : doc.at("degree_curve")) {
            model.degree_curve_degrees.push_back(e.at(0));
            model.degree_curve_ratios.push_back(e.at(1));
        }
        for (const auto& c : doc.at("clouds")) {
            model.clouds.push_back(detail::signature_from_json(c));
            model.clip_ids.push_back(c.value("clip_id", std::string{}));
        }
        for (const auto& p : doc.at("points")) {
            TaggedPoint t;
            t.position = detail::vector_from_json(p.at("y"));
            t.local.tangent = detail::vector3_from_json(p.at("t"));
            t.local.curvature = p.at("kappa");
            t.local.torsion = p.at("tau");
            t.label = p.at("label");
            model.points.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw IoError("model.json: " + std::string(e.what()));
    }
    if (model.eigen.dims() != model.rest_point.size()) {
        throw IoError("model.json does not match the stored eigenspace");
    }
    return model;
}

}  // namespace motioncloud

namespace motioncloud {

std::string signature_to_json(const CloudSignature& sig, int indent) {
    return detail::signature_json(sig).dump(indent);
}

}  // namespace motioncloud
