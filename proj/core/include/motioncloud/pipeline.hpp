#pragma once

#include "motioncloud/classifier.hpp"
#include "motioncloud/eigenspace.hpp"
#include "motioncloud/geometry.hpp"
#include "motioncloud/image.hpp"
#include "motioncloud/templates.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace motioncloud {

/// Everything needed to turn frames into a classified cloud.
struct PipelineConfig {
    FrameSize frame_size{256, 256};
    FlowConfig flow;
    MvfiConfig mvfi;
    int feature_side = 32;   ///< templates are block-averaged to side x side before projection
    int train_stride = 3;    ///< every n-th template of a clip enters eigenspace training
    int dimensions = kDefaultDimensions;
    EigenKind kind = EigenKind::polynomial;
    std::optional<int> degree;  ///< empty: pick by separation sweep over degree_range
    std::vector<int> degree_range{1, 2, 3, 4, 5, 6, 7, 8};
    double kernel_offset = 1.0;
    double input_scale = 0.0;
    GeometryConfig geometry;
    MetricParams metric;
    int knn_k = 7;
    double null_threshold = 0.15;
};

/// Flattened templates of one clip.
struct ClipFeatures {
    std::string clip_id;
    std::string label;
    Eigen::MatrixXd features;  ///< one row per template
};

ClipFeatures extract_features(const FrameSequence& seq, const PipelineConfig& cfg, std::string clip_id = {},
                              std::string label = {});

/// Trained eigenspace together with the labelled training clouds.
struct ActionModel {
    PipelineConfig config;
    EigenModel eigen;
    std::vector<CloudSignature> clouds;  ///< labelled, one per training clip
    std::vector<std::string> clip_ids;   ///< parallel to clouds
    std::vector<TaggedPoint> points;     ///< every training trajectory point
    std::vector<int> degree_curve_degrees;
    std::vector<double> degree_curve_ratios;

    double reference_distance = 1.0;  ///< median cross-class cloud distance (similarity scale)
    Eigen::VectorXd rest_point;       ///< projection of an all-black template
    double rest_centroid_scale = 0.0; ///< median training distance of r_CM from rest_point
    double rest_radius_scale = 0.0;   ///< median training mean radius

    std::vector<std::string> classes() const;

    Trajectory trajectory(const Eigen::MatrixXd& features) const;
    CloudSignature signature(const Trajectory& traj, std::string label = {}) const;
    /// Motionless clip test: the cloud sits at the rest point and is compact.
    bool is_null(const CloudSignature& sig, double threshold) const;
    bool is_null(const CloudSignature& sig) const { return is_null(sig, config.null_threshold); }
    double similarity(double distance) const;

    Classification classify(const CloudSignature& sig, const Trajectory& traj, const MetricParams& metric) const;
    KnnVote classify_knn(const Trajectory& traj, int k) const;
};

/// Trains the eigenspace on the clips' features (subsampled by
/// config.train_stride), then projects every clip and builds its cloud.
ActionModel train_action_model(const std::vector<ClipFeatures>& clips, const PipelineConfig& cfg);

/// Signature dump for plotting: segments, mean binormal, centroid, radius.
std::string signature_to_json(const CloudSignature& sig, int indent = 2);

void save_action_model(const ActionModel& model, const std::filesystem::path& dir);
ActionModel load_action_model(const std::filesystem::path& dir);

}  // namespace motioncloud
