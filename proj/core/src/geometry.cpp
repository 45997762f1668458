#include "motioncloud/geometry.hpp"

#include "motioncloud/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace motioncloud {

namespace {

struct LocalFrame {
    CurvatureTorsion ct;
    Eigen::Vector3d tangent = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    Eigen::Vector3d binormal = Eigen::Vector3d::Zero();
};

LocalFrame frame_at_parameter(const SplineCurve& curve, double u) {
    const auto d = curve.derivatives(u);
    LocalFrame f;
    const double speed = d.first.norm();
    if (!(speed > 0.0)) {
        f.ct.degenerate = true;
        return f;
    }
    f.tangent = d.first / speed;
    const Eigen::Vector3d cross = d.first.cross(d.second);
    const double cross_sq = cross.squaredNorm();
    f.ct.curvature = std::sqrt(cross_sq) / (speed * speed * speed);
    // |r' x r''|^2 on the unit-speed scale
    if (cross_sq / std::pow(speed, 6) < 1e-16) {
        f.ct.degenerate = true;
        return f;
    }
    f.ct.torsion = cross.dot(d.third) / cross_sq;
    f.binormal = cross / std::sqrt(cross_sq);
    f.normal = f.binormal.cross(f.tangent);
    return f;
}

void fix_sign(Eigen::Vector3d& v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0) v = -v;
}

}  // namespace

CurvatureTorsion curvature_torsion_at(const SplineCurve& curve, double s) {
    const double length = curve.length();
    const double tol = 1e-9 * std::max(length, 1.0);
    if (s < -tol || s > length + tol) {
        throw InvalidArgument("curvature_torsion_at: arc position outside [0, L]");
    }
    return frame_at_parameter(curve, curve.parameter_at_arc(std::clamp(s, 0.0, length))).ct;
}

std::vector<SegmentFrame> segment_curve(const SplineCurve& curve, const SegmentConfig& cfg) {
    if (cfg.count < 2) {
        throw InvalidArgument("segment_curve: segment count must be >= 2");
    }
    if (cfg.overlap < 0.0 || cfg.overlap > 0.9) {
        throw InvalidArgument("segment_curve: overlap must lie in [0, 0.9]");
    }
    if (cfg.end_trim < 0.0 || cfg.end_trim >= 0.5) {
        throw InvalidArgument("segment_curve: end_trim must lie in [0, 0.5)");
    }
    if (cfg.samples < 1) {
        throw InvalidArgument("segment_curve: need at least one sample per segment");
    }
    const double length = curve.length();
    if (!(length > 1e-12)) {
        throw NumericalError("segment_curve: curve shorter than numerical resolution");
    }
    const double begin = cfg.end_trim * length;
    const double span = length * (1.0 - 2.0 * cfg.end_trim);
    const double sigma = span / cfg.count;
    const double stride = sigma * (1.0 - cfg.overlap);
    const int total = static_cast<int>(std::floor((span - sigma) / stride + 1e-9)) + 1;

    std::vector<SegmentFrame> segments;
    segments.reserve(static_cast<std::size_t>(total));
    for (int k = 0; k < total; ++k) {
        SegmentFrame seg;
        seg.s_start = begin + k * stride;
        seg.s_end = seg.s_start + sigma;
        seg.midpoint = seg.s_start + sigma / 2.0;
        double kappa = 0.0, tau = 0.0;
        for (int q = 0; q < cfg.samples; ++q) {
            const double s = seg.s_start + (q + 0.5) * sigma / cfg.samples;
            const auto ct = frame_at_parameter(curve, curve.parameter_at_arc(s)).ct;
            kappa += ct.curvature;
            tau += ct.torsion;
        }
        seg.mean_curvature = kappa / cfg.samples;
        seg.mean_torsion = tau / cfg.samples;
        const auto mid = frame_at_parameter(curve, curve.parameter_at_arc(seg.midpoint));
        seg.tangent = mid.tangent;
        seg.normal = mid.normal;
        seg.binormal = mid.binormal;
        seg.valid = !mid.ct.degenerate && seg.mean_curvature >= cfg.min_curvature;
        segments.push_back(seg);
    }
    return segments;
}

Eigen::Vector3d mean_binormal(std::span<const SegmentFrame> segments) {
    // signs follow the heaviest (least curved) segment
    const SegmentFrame* ref = nullptr;
    for (const auto& seg : segments) {
        if (seg.valid && (!ref || seg.mean_curvature < ref->mean_curvature)) ref = &seg;
    }
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    bool any = false;
    for (const auto& seg : segments) {
        if (!seg.valid) continue;
        Eigen::Vector3d b = seg.binormal;
        if (ref->binormal.dot(b) < 0.0) b = -b;
        sum += b / (seg.mean_curvature * seg.mean_curvature);
        any = true;
    }
    if (!any) {
        throw NumericalError("plane undefined: no segment has a defined binormal");
    }
    const double norm = sum.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericalError("plane undefined: binormal sum vanished");
    }
    return sum / norm;
}

Eigen::Vector3d fit_plane_svd(const Eigen::MatrixXd& points) {
    if (points.rows() < 3) {
        throw InvalidArgument("fit_plane_svd: need at least 3 points");
    }
    const Eigen::Index cols = std::min<Eigen::Index>(points.cols(), 3);
    Eigen::MatrixX3d xyz = Eigen::MatrixX3d::Zero(points.rows(), 3);
    xyz.leftCols(cols) = points.leftCols(cols);
    const Eigen::RowVector3d centroid = xyz.colwise().mean();
    xyz.rowwise() -= centroid;
    Eigen::JacobiSVD<Eigen::MatrixX3d> svd(xyz, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv[0] > 0.0) || sv[1] <= 1e-9 * sv[0]) {
        throw NumericalError("fit_plane_svd: points are collinear or coincident");
    }
    Eigen::Vector3d normal = svd.matrixV().col(2);
    fix_sign(normal);
    return normal;
}

CloudSignature cloud_signature(const Trajectory& traj, const GeometryConfig& cfg) {
    if (traj.size() < 5) {
        throw InvalidArgument("cloud_signature: need at least 5 trajectory points, got " +
                              std::to_string(traj.size()));
    }
    CloudSignature sig;
    sig.point_count = static_cast<int>(traj.size());
    sig.centroid = traj.points.colwise().mean().transpose();
    sig.mean_radius = (traj.points.rowwise() - sig.centroid.transpose()).rowwise().norm().mean();
    sig.point_segment.assign(static_cast<std::size_t>(traj.size()), -1);

    std::optional<SplineCurve> curve;
    try {
        curve = fit_spline(traj.points, cfg.smoothing);
        sig.segments = segment_curve(*curve, cfg.segments);
    } catch (const NumericalError&) {
        // coincident or vanishing trajectories: no local geometry
        sig.segments.clear();
        return sig;
    }
    try {
        sig.mean_binormal = mean_binormal(sig.segments);
    } catch (const NumericalError&) {
        sig.mean_binormal.reset();
    }
    for (std::size_t i = 0; i < sig.point_segment.size(); ++i) {
        const double s = curve->arc_at_parameter(curve->sample_parameters()[i]);
        int best = 0;
        double best_gap = std::abs(sig.segments[0].midpoint - s);
        for (std::size_t k = 1; k < sig.segments.size(); ++k) {
            const double gap = std::abs(sig.segments[k].midpoint - s);
            if (gap < best_gap) {
                best_gap = gap;
                best = static_cast<int>(k);
            }
        }
        sig.point_segment[i] = best;
    }
    return sig;
}

std::vector<TaggedPoint> tag_points(const Trajectory& traj, const CloudSignature& sig, const std::string& label) {
    std::vector<TaggedPoint> out;
    out.reserve(static_cast<std::size_t>(traj.size()));
    for (Eigen::Index i = 0; i < traj.size(); ++i) {
        TaggedPoint p;
        p.position = traj.points.row(i).transpose();
        p.label = label;
        const std::size_t idx = static_cast<std::size_t>(i);
        if (idx < sig.point_segment.size() && sig.point_segment[idx] >= 0) {
            const auto& seg = sig.segments[static_cast<std::size_t>(sig.point_segment[idx])];
            p.local = {seg.tangent, seg.mean_curvature, seg.mean_torsion};
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace motioncloud
