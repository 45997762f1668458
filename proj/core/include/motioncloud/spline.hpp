#pragma once

#include <Eigen/Core>

#include <vector>

namespace motioncloud {

/// Natural cubic (smoothing) spline through 3-D points over a chord-length
/// parameter, with an arc-length lookup table for constant-speed access.
class SplineCurve {
public:
    static constexpr int kArcSamples = 512;

    struct Derivatives {
        Eigen::Vector3d first;
        Eigen::Vector3d second;
        Eigen::Vector3d third;
    };

    Eigen::Vector3d position(double u) const;
    /// Derivatives with respect to the spline parameter u. The third
    /// derivative is recovered from knot-centred differences of the second,
    /// since the raw cubic third derivative is piecewise constant.
    Derivatives derivatives(double u) const;

    double length() const { return arc_s_.back(); }
    double parameter_begin() const { return knots_.front(); }
    double parameter_end() const { return knots_.back(); }

    double parameter_at_arc(double s) const;
    double arc_at_parameter(double u) const;
    Eigen::Vector3d point_at_arc(double s) const { return position(parameter_at_arc(s)); }

    const std::vector<double>& knots() const { return knots_; }
    /// Parameter value of every input point (duplicates share their knot).
    const std::vector<double>& sample_parameters() const { return sample_parameters_; }
    /// Fitted (smoothed) values at the knots, one row per knot.
    const Eigen::MatrixX3d& knot_values() const { return values_; }
    /// Residual sum of squares between input points and the curve.
    double residual() const { return residual_; }

private:
    friend SplineCurve fit_spline(const Eigen::MatrixXd& points, double smoothing);

    std::size_t interval(double u) const;
    void build_arc_table();

    std::vector<double> knots_;
    Eigen::MatrixX3d values_;
    Eigen::MatrixX3d second_;
    Eigen::MatrixX3d third_;
    std::vector<double> arc_u_;
    std::vector<double> arc_s_;
    std::vector<double> sample_parameters_;
    double residual_ = 0.0;
};

/// Fits the first three columns of `points` (missing columns read as 0).
/// `smoothing` sets the residual budget: RSS <= (smoothing * Rbar)^2 * n,
/// Rbar being the mean distance of the points to their centroid.
/// Zero interpolates. Throws InvalidArgument for fewer than 5 points and
/// NumericalError when every point coincides.
SplineCurve fit_spline(const Eigen::MatrixXd& points, double smoothing = 0.05);

}  // namespace motioncloud
