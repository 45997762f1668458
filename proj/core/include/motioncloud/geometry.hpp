#pragma once

#include "motioncloud/eigenspace.hpp"
#include "motioncloud/spline.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace motioncloud {

struct CurvatureTorsion {
    double curvature = 0.0;
    double torsion = 0.0;
    /// Set when r' x r'' vanishes: the osculating plane is undefined and
    /// torsion is reported as zero.
    bool degenerate = false;
};

/// Curvature and torsion at arc position s in [0, L].
CurvatureTorsion curvature_torsion_at(const SplineCurve& curve, double s);

/// Local Frenet-Serret frame and averaged curvature/torsion of one arc segment.
struct SegmentFrame {
    double s_start = 0.0;
    double s_end = 0.0;
    double midpoint = 0.0;
    Eigen::Vector3d tangent = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    Eigen::Vector3d binormal = Eigen::Vector3d::Zero();
    double mean_curvature = 0.0;
    double mean_torsion = 0.0;
    bool valid = false;

    double length() const { return s_end - s_start; }
};

struct SegmentConfig {
    int count = 10;           ///< segments of length span / count before overlap
    double overlap = 0.5;     ///< fraction of each segment shared with the next
    double end_trim = 0.1;    ///< fraction of L excluded at each end
    int samples = 16;         ///< quadrature samples per segment
    double min_curvature = 1e-8;
};

/// Equal-length overlapping windows over the trimmed arc range.
std::vector<SegmentFrame> segment_curve(const SplineCurve& curve, const SegmentConfig& cfg = {});

/// Curvature-weighted (1/kappa^2), sign-aligned average of the valid
/// segment binormals, normalised. Throws NumericalError("plane undefined")
/// when no segment is valid.
Eigen::Vector3d mean_binormal(std::span<const SegmentFrame> segments);

/// Least-variance direction of the centred points (first three columns).
Eigen::Vector3d fit_plane_svd(const Eigen::MatrixXd& points);

struct GeometryConfig {
    double smoothing = 0.05;
    SegmentConfig segments;
};

/// Trajectory point cloud descriptor.
struct CloudSignature {
    std::vector<SegmentFrame> segments;
    std::optional<Eigen::Vector3d> mean_binormal;  ///< empty when the plane is undefined
    Eigen::VectorXd centroid;
    double mean_radius = 0.0;
    int point_count = 0;
    std::string label;
    /// Index into `segments` of the segment nearest each trajectory point;
    /// -1 when there are no segments. Not serialised.
    std::vector<int> point_segment;

    bool plane_defined() const { return mean_binormal.has_value(); }
};

CloudSignature cloud_signature(const Trajectory& traj, const GeometryConfig& cfg = {});

/// Local tuple attached to an eigenspace point for fuzzy membership.
struct LocalTuple {
    Eigen::Vector3d tangent = Eigen::Vector3d::Zero();
    double curvature = 0.0;
    double torsion = 0.0;
};

struct TaggedPoint {
    Eigen::VectorXd position;
    LocalTuple local;
    std::string label;
};

/// Pairs every trajectory point with the tuple of its nearest segment.
std::vector<TaggedPoint> tag_points(const Trajectory& traj, const CloudSignature& sig, const std::string& label);

}  // namespace motioncloud
