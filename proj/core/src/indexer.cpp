#include "motioncloud/indexer.hpp"

#include "motioncloud/error.hpp"
#include "motioncloud/file_util.hpp"
#include "serialization.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace motioncloud {

using detail::json;

std::vector<std::pair<int, int>> window_ranges(int frame_count, const IndexerConfig& cfg) {
    if (cfg.stride < 1 || cfg.window <= cfg.stride) {
        throw InvalidArgument("indexer: need window > stride >= 1");
    }
    if (frame_count < 2) {
        throw InvalidArgument("indexer: video needs at least 2 frames");
    }
    std::vector<std::pair<int, int>> out;
    if (frame_count < cfg.window) {
        out.emplace_back(0, frame_count);
        return out;
    }
    for (int start = 0; start + cfg.window <= frame_count; start += cfg.stride) {
        out.emplace_back(start, start + cfg.window);
    }
    return out;
}

namespace {

void fill_scores(IndexRecord& rec, const Classification& cls, const ActionModel& model) {
    rec.scores = cls.scores;
    for (const auto& [label, d] : cls.scores) rec.similarity[label] = model.similarity(d);
}

}  // namespace

std::vector<IndexRecord> index_timeline(const std::string& video_id, const FrameSequence& video,
                                        const ActionModel& model, const IndexerConfig& cfg) {
    const auto ranges = window_ranges(static_cast<int>(video.size()), cfg);
    const ClipFeatures all = extract_features(video, model.config, video_id);
    std::vector<IndexRecord> records;
    records.reserve(ranges.size());
    for (const auto& [start, end] : ranges) {
        // templates [start, end-1) come from the window's own frame pairs
        const Eigen::MatrixXd window = all.features.middleRows(start, end - start - 1);
        const Trajectory traj = model.trajectory(window);
        IndexRecord rec;
        rec.video_id = video_id;
        rec.start_frame = start;
        rec.end_frame = end;
        rec.signature = model.signature(traj);
        rec.null = model.is_null(rec.signature, cfg.null_threshold);
        const Classification cls = model.classify(rec.signature, traj, model.config.metric);
        fill_scores(rec, cls, model);
        if (!rec.null) rec.predicted = cls.label;
        records.push_back(std::move(rec));
    }
    return records;
}

json detail::index_record_json(const IndexRecord& r) {
    json j = detail::signature_json(r.signature);
    json line;
    line["video_id"] = r.video_id;
    line["start_frame"] = r.start_frame;
    line["end_frame"] = r.end_frame;
    line["centroid"] = j["centroid"];
    line["radius"] = j["radius"];
    line["binormal"] = j["binormal"];
    line["points"] = j["points"];
    line["segments"] = j["segments"];
    json scores = json::object();
    for (const auto& [label, d] : r.scores) scores[label] = detail::round9(d);
    line["scores"] = std::move(scores);
    line["predicted"] = r.predicted;
    line["null"] = r.null;
    return line;
}

void save_index(std::span<const IndexRecord> records, const std::filesystem::path& path, int dimensions) {
    std::ostringstream out;
    out << json{{"format", "mcidx"}, {"version", kIndexVersion}, {"K", dimensions}}.dump() << '\n';
    for (const auto& r : records) out << detail::index_record_json(r).dump() << '\n';
    atomic_write(path, out.str());
}

std::vector<IndexRecord> load_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open index " + path.string());
    }
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        return IoError(path.filename().string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (!std::getline(in, line)) {
        line_no = 1;
        throw fail("missing header line");
    }
    ++line_no;
    int dims = 0;
    try {
        const json header = json::parse(line);
        if (header.at("format") != "mcidx") throw fail("not an mcidx index");
        if (header.at("version").get<int>() != kIndexVersion) {
            throw fail("unsupported index version " + header.at("version").dump());
        }
        dims = header.at("K").get<int>();
    } catch (const json::exception& e) {
        throw fail(e.what());
    }
    std::vector<IndexRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            IndexRecord r;
            r.video_id = j.at("video_id");
            r.start_frame = j.at("start_frame");
            r.end_frame = j.at("end_frame");
            r.signature = detail::signature_from_json(j);
            if (r.signature.centroid.size() != dims) throw fail("centroid dimension does not match header K");
            r.signature.point_count = j.value("points", 0);
            for (const auto& [label, d] : j.at("scores").items()) r.scores[label] = d.get<double>();
            r.predicted = j.value("predicted", std::string{});
            r.null = j.at("null").get<bool>();
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw fail(e.what());
        }
    }
    return records;
}

QueryResult query_similarity(const CloudSignature& query, const Trajectory& traj, const ActionModel& model,
                             std::span<const IndexRecord> index, int top_k, const MetricParams& metric) {
    if (index.empty()) {
        throw InvalidArgument("query: the index is empty");
    }
    QueryResult result;
    if (model.is_null(query)) {
        result.null_query = true;
        return result;
    }
    std::vector<TaggedPoint> query_points;
    FuzzyContext context;
    const FuzzyContext* ctx = nullptr;
    if (metric.rho > 0.0) {
        query_points = tag_points(traj, query, {});
        context = {query_points, model.points};
        ctx = &context;
    }
    for (const auto& rec : index) {
        if (rec.null) continue;
        CloudSignature target = rec.signature;
        target.label = rec.predicted;
        const double d = cloud_distance(query, target, metric, ctx).total;
        result.hits.push_back({rec.video_id, rec.start_frame, rec.end_frame, model.similarity(d), d, rec.predicted});
    }
    std::stable_sort(result.hits.begin(), result.hits.end(),
                     [](const QueryHit& a, const QueryHit& b) { return a.distance < b.distance; });
    if (top_k >= 0 && result.hits.size() > static_cast<std::size_t>(top_k)) {
        result.hits.resize(static_cast<std::size_t>(top_k));
    }
    return result;
}

QueryResult query_similarity(const FrameSequence& clip, const ActionModel& model, std::span<const IndexRecord> index,
                             int top_k, const MetricParams& metric) {
    if (index.empty()) {
        throw InvalidArgument("query: the index is empty");
    }
    const ClipFeatures features = extract_features(clip, model.config);
    if (features.features.rows() < 5) {
        throw InvalidArgument("query clip too short: need at least 5 usable trajectory points (6 frames)");
    }
    const Trajectory traj = model.trajectory(features.features);
    const CloudSignature sig = model.signature(traj);
    return query_similarity(sig, traj, model, index, top_k, metric);
}

std::map<std::string, BinaryCounts> annotate_intervals(std::span<const IndexRecord> records,
                                                       std::span<const LabeledInterval> truth,
                                                       std::span<const std::string> classes) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].end_frame <= truth[i].start_frame) {
            throw InvalidArgument("ground truth interval with non-positive length");
        }
        for (std::size_t j = i + 1; j < truth.size(); ++j) {
            const auto& a = truth[i];
            const auto& b = truth[j];
            if (a.video_id == b.video_id && a.label != b.label && a.start_frame < b.end_frame &&
                b.start_frame < a.end_frame) {
                throw InvalidArgument("contradictory ground truth: '" + a.label + "' and '" + b.label +
                                      "' overlap in " + a.video_id);
            }
        }
    }
    std::map<std::string, BinaryCounts> out;
    for (const auto& c : classes) out[c];
    for (const auto& rec : records) {
        const int length = rec.end_frame - rec.start_frame;
        for (const auto& c : classes) {
            // same-label intervals may overlap; count each frame once
            std::vector<char> hit(static_cast<std::size_t>(std::max(length, 0)), 0);
            for (const auto& t : truth) {
                if (t.video_id != rec.video_id || t.label != c) continue;
                for (int f = std::max(rec.start_frame, t.start_frame); f < std::min(rec.end_frame, t.end_frame); ++f) {
                    hit[static_cast<std::size_t>(f - rec.start_frame)] = 1;
                }
            }
            const int covered = static_cast<int>(std::count(hit.begin(), hit.end(), 1));
            const bool positive = length > 0 && 2 * covered >= length;
            const bool predicted = rec.predicted == c;
            auto& counts = out[c];
            if (predicted && positive) ++counts.tp;
            else if (predicted) ++counts.fp;
            else if (positive) ++counts.fn;
            else ++counts.tn;
        }
    }
    return out;
}

}  // namespace motioncloud
