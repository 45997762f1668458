#pragma once

#include "motioncloud/geometry.hpp"

#include <map>
#include <span>
#include <string>

namespace motioncloud {

enum class AlphaVariant {
    peaked,   ///< beta e^{-l1 x} (1 - e^{-l2 x}): zero at full overlap
    literal,  ///< beta e^{-l1 x} (1 - e^{-l2 x}) / x, tends to beta l2 at 0
};

struct AlphaParams {
    double beta = 1.0;
    double lambda1 = 2.5;
    double lambda2 = 25.0;
    AlphaVariant variant = AlphaVariant::peaked;
};

struct FuzzyParams {
    int neighbors = 7;
    double fuzzifier = 2.0;
    double epsilon = 1e-9;
};

struct MetricParams {
    AlphaParams alpha;
    double rho = 0.0;
    FuzzyParams fuzzy;
    bool normalize_by_radii = true;
};

/// Terms of the cloud distance; total = centroid_separation + alpha * plane_angle + rho * fuzzy.
struct DistanceBreakdown {
    double centroid_separation = 0.0;
    double plane_angle = 0.0;  ///< radians, [0, pi/2]
    double alpha = 0.0;
    double fuzzy = 0.0;
    double total = 0.0;
};

/// Plane-term modulation as a function of the (normalised) centroid separation.
double alpha(double separation, const AlphaParams& p = {});

/// Training points and the query's own tagged points for the fuzzy term.
struct FuzzyContext {
    std::span<const TaggedPoint> query;
    std::span<const TaggedPoint> training;
};

/// Distance between two clouds. The fuzzy term contributes only when
/// rho > 0 and a context is supplied; it measures the query's membership
/// in the class named by `other.label`.
DistanceBreakdown cloud_distance(const CloudSignature& query, const CloudSignature& other, const MetricParams& p,
                                 const FuzzyContext* context = nullptr);

/// Affinity of two local tuples in (0, 1].
double local_affinity(const LocalTuple& a, const LocalTuple& b, double epsilon = 1e-9);

/// 1 - mean fuzzy membership of the query points in class `cls`.
double fuzzy_penalty(std::span<const TaggedPoint> query, const std::string& cls,
                     std::span<const TaggedPoint> training, const FuzzyParams& p = {});

struct Classification {
    std::string label;
    std::map<std::string, double> scores;  ///< per class: smallest distance to a cloud of that class
};

Classification classify_cloud(const CloudSignature& query, std::span<const CloudSignature> model,
                              const MetricParams& p = {}, const FuzzyContext* context = nullptr);

struct KnnVote {
    std::string label;
    double fraction = 0.0;  ///< share of query points voting for `label`
};

/// Per-point majority vote among the k nearest training points, then a
/// clip-level majority over points.
KnnVote baseline_knn(const Eigen::MatrixXd& query, std::span<const TaggedPoint> training, int k = 7);

}  // namespace motioncloud
