#pragma once

#include "motioncloud/pipeline.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace motioncloud {

struct IndexerConfig {
    int window = 250;  ///< frames per window
    int stride = 50;   ///< frames between window starts
    double null_threshold = 0.15;
};

/// One timeline window of an indexed video.
struct IndexRecord {
    std::string video_id;
    int start_frame = 0;
    int end_frame = 0;  ///< exclusive
    CloudSignature signature;
    std::map<std::string, double> scores;      ///< per-class cloud distance
    std::map<std::string, double> similarity;  ///< per-class similarity %, derived from scores
    std::string predicted;                     ///< empty for null windows
    bool null = false;
};

/// Half-open frame ranges [start, end) of the sliding windows.
std::vector<std::pair<int, int>> window_ranges(int frame_count, const IndexerConfig& cfg);

std::vector<IndexRecord> index_timeline(const std::string& video_id, const FrameSequence& video,
                                        const ActionModel& model, const IndexerConfig& cfg = {});

inline constexpr int kIndexVersion = 1;

/// JSON Lines: a header object followed by one record per line.
void save_index(std::span<const IndexRecord> records, const std::filesystem::path& path, int dimensions);
std::vector<IndexRecord> load_index(const std::filesystem::path& path);

struct QueryHit {
    std::string video_id;
    int start_frame = 0;
    int end_frame = 0;
    double similarity = 0.0;
    double distance = 0.0;
    std::string predicted;
};

struct QueryResult {
    std::vector<QueryHit> hits;  ///< similarity non-increasing
    bool null_query = false;
};

/// Ranks the non-null records of `index` by similarity to `clip`.
QueryResult query_similarity(const FrameSequence& clip, const ActionModel& model, std::span<const IndexRecord> index,
                             int top_k, const MetricParams& metric);
QueryResult query_similarity(const CloudSignature& query, const Trajectory& traj, const ActionModel& model,
                             std::span<const IndexRecord> index, int top_k, const MetricParams& metric);

struct BinaryCounts {
    int tp = 0;
    int tn = 0;
    int fp = 0;
    int fn = 0;

    double tpr() const { return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0; }
    double tnr() const { return tn + fp > 0 ? static_cast<double>(tn) / (tn + fp) : 1.0; }
};

struct LabeledInterval {
    std::string video_id;
    int start_frame = 0;
    int end_frame = 0;  ///< exclusive
    std::string label;
};

/// One-vs-rest counts per class. A window is a positive for class c when at
/// least half of it overlaps ground-truth intervals labelled c.
std::map<std::string, BinaryCounts> annotate_intervals(std::span<const IndexRecord> records,
                                                       std::span<const LabeledInterval> truth,
                                                       std::span<const std::string> classes);

}  // namespace motioncloud
