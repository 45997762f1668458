#include "motioncloud/spline.hpp"

#include "motioncloud/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace motioncloud {

namespace {

// Symmetric positive definite matrix with two super-diagonals, factored
// as L D L^T in place.
class PentadiagonalSolver {
public:
    PentadiagonalSolver(std::vector<double> diag, std::vector<double> off1, std::vector<double> off2)
        : d_(diag.size()), l1_(diag.size(), 0.0), l2_(diag.size(), 0.0) {
        // A(i,i) = diag[i], A(i,i+1) = off1[i], A(i,i+2) = off2[i]
        const std::size_t n = diag.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= 2) l2_[i] = off2[i - 2] / d_[i - 2];
            if (i >= 1) {
                double v = off1[i - 1];
                if (i >= 2) v -= l2_[i] * l1_[i - 1] * d_[i - 2];
                l1_[i] = v / d_[i - 1];
            }
            double di = diag[i];
            if (i >= 1) di -= l1_[i] * l1_[i] * d_[i - 1];
            if (i >= 2) di -= l2_[i] * l2_[i] * d_[i - 2];
            d_[i] = di;
        }
    }

    std::vector<double> solve(std::vector<double> b) const {
        const std::size_t n = b.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= 1) b[i] -= l1_[i] * b[i - 1];
            if (i >= 2) b[i] -= l2_[i] * b[i - 2];
        }
        for (std::size_t i = 0; i < n; ++i) b[i] /= d_[i];
        for (std::size_t k = n; k-- > 0;) {
            if (k + 1 < n) b[k] -= l1_[k + 1] * b[k + 1];
            if (k + 2 < n) b[k] -= l2_[k + 2] * b[k + 2];
        }
        return b;
    }

private:
    std::vector<double> d_;
    std::vector<double> l1_, l2_;  // sub-diagonal multipliers: L(i, i-1), L(i, i-2)
};

struct SmoothingSystem {
    std::vector<double> h;                  // knot spacing, n-1
    std::vector<std::array<double, 3>> q;   // column j of Q: rows j, j+1, j+2
};

SmoothingSystem make_system(const std::vector<double>& knots) {
    SmoothingSystem sys;
    const std::size_t n = knots.size();
    sys.h.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) sys.h[i] = knots[i + 1] - knots[i];
    if (n >= 3) {
        sys.q.resize(n - 2);
        for (std::size_t j = 0; j + 2 < n; ++j) {
            sys.q[j] = {1.0 / sys.h[j], -1.0 / sys.h[j] - 1.0 / sys.h[j + 1], 1.0 / sys.h[j + 1]};
        }
    }
    return sys;
}

struct Fit {
    Eigen::MatrixX3d values;
    Eigen::MatrixX3d second;
    double rss = 0.0;
};

// Penalised fit for a given lambda: (R + lambda Q^T Q) gamma = Q^T y,
// g = y - lambda Q gamma.
Fit solve_smoothing(const SmoothingSystem& sys, const Eigen::MatrixX3d& y, double lambda) {
    const std::size_t n = static_cast<std::size_t>(y.rows());
    Fit fit{y, Eigen::MatrixX3d::Zero(y.rows(), 3), 0.0};
    if (n < 3) return fit;
    const std::size_t m = n - 2;
    std::vector<double> diag(m), off1(m > 1 ? m - 1 : 0), off2(m > 2 ? m - 2 : 0);
    for (std::size_t a = 0; a < m; ++a) {
        const auto& qa = sys.q[a];
        diag[a] = (sys.h[a] + sys.h[a + 1]) / 3.0 + lambda * (qa[0] * qa[0] + qa[1] * qa[1] + qa[2] * qa[2]);
        if (a + 1 < m) {
            const auto& qb = sys.q[a + 1];
            off1[a] = sys.h[a + 1] / 6.0 + lambda * (qa[1] * qb[0] + qa[2] * qb[1]);
        }
        if (a + 2 < m) {
            off2[a] = lambda * (qa[2] * sys.q[a + 2][0]);
        }
    }
    const PentadiagonalSolver solver(std::move(diag), std::move(off1), std::move(off2));
    for (int dim = 0; dim < 3; ++dim) {
        std::vector<double> rhs(m);
        for (std::size_t a = 0; a < m; ++a) {
            const auto& qa = sys.q[a];
            rhs[a] = qa[0] * y(a, dim) + qa[1] * y(a + 1, dim) + qa[2] * y(a + 2, dim);
        }
        const auto gamma = solver.solve(std::move(rhs));
        for (std::size_t a = 0; a < m; ++a) {
            fit.second(a + 1, dim) = gamma[a];
            if (lambda > 0.0) {
                const auto& qa = sys.q[a];
                fit.values(a, dim) -= lambda * qa[0] * gamma[a];
                fit.values(a + 1, dim) -= lambda * qa[1] * gamma[a];
                fit.values(a + 2, dim) -= lambda * qa[2] * gamma[a];
            }
        }
    }
    fit.rss = (fit.values - y).squaredNorm();
    return fit;
}

}  // namespace

SplineCurve fit_spline(const Eigen::MatrixXd& points, double smoothing) {
    if (points.rows() < 5) {
        throw InvalidArgument("fit_spline: need at least 5 points, got " + std::to_string(points.rows()));
    }
    if (smoothing < 0.0 || !std::isfinite(smoothing)) {
        throw InvalidArgument("fit_spline: smoothing factor must be finite and >= 0");
    }
    const Eigen::Index cols = std::min<Eigen::Index>(points.cols(), 3);
    Eigen::MatrixX3d xyz = Eigen::MatrixX3d::Zero(points.rows(), 3);
    xyz.leftCols(cols) = points.leftCols(cols);
    if (!xyz.allFinite()) {
        throw InvalidArgument("fit_spline: non-finite coordinates");
    }

    const Eigen::RowVector3d centroid = xyz.colwise().mean();
    const double mean_radius = (xyz.rowwise() - centroid).rowwise().norm().mean();
    const double extent = (xyz.rowwise() - centroid).cwiseAbs().maxCoeff();
    const double merge_tol = 1e-12 * std::max(extent, 1e-300);

    // consecutive coincident points share one knot
    SplineCurve curve;
    std::vector<Eigen::Index> kept;
    curve.sample_parameters_.resize(static_cast<std::size_t>(points.rows()));
    double u = 0.0;
    kept.push_back(0);
    curve.knots_.push_back(0.0);
    curve.sample_parameters_[0] = 0.0;
    for (Eigen::Index i = 1; i < xyz.rows(); ++i) {
        const double step = (xyz.row(i) - xyz.row(kept.back())).norm();
        if (step > merge_tol) {
            u += step;
            kept.push_back(i);
            curve.knots_.push_back(u);
        }
        curve.sample_parameters_[static_cast<std::size_t>(i)] = u;
    }
    if (kept.size() < 2 || !(u > 0.0)) {
        throw NumericalError("fit_spline: zero-length trajectory (all points coincide)");
    }
    Eigen::MatrixX3d y(static_cast<Eigen::Index>(kept.size()), 3);
    for (std::size_t i = 0; i < kept.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = xyz.row(kept[i]);

    const SmoothingSystem sys = make_system(curve.knots_);
    Fit fit = solve_smoothing(sys, y, 0.0);
    const double budget = std::pow(smoothing * mean_radius, 2) * static_cast<double>(points.rows());
    if (smoothing > 0.0 && kept.size() >= 3) {
        // RSS grows monotonically with lambda; bracket then bisect in log space
        const double h_mean = u / static_cast<double>(kept.size() - 1);
        double lo = 0.0;
        double hi = 1e-6 * h_mean * h_mean * h_mean;
        Fit hi_fit = solve_smoothing(sys, y, hi);
        int grow = 0;
        while (hi_fit.rss < budget && grow++ < 80) {
            lo = hi;
            hi *= 10.0;
            hi_fit = solve_smoothing(sys, y, hi);
        }
        if (hi_fit.rss <= budget) {
            fit = hi_fit;
        } else {
            Fit best = lo > 0.0 ? solve_smoothing(sys, y, lo) : fit;
            for (int it = 0; it < 50; ++it) {
                const double mid = lo > 0.0 ? std::sqrt(lo * hi) : hi / 10.0;
                Fit trial = solve_smoothing(sys, y, mid);
                if (trial.rss <= budget) {
                    lo = mid;
                    best = std::move(trial);
                } else {
                    hi = mid;
                }
                if (lo > 0.0 && hi / lo < 1.0 + 1e-6) break;
            }
            fit = std::move(best);
        }
    }
    curve.values_ = fit.values;
    curve.second_ = fit.second;

    // recovered third derivative at knots
    const std::size_t n = kept.size();
    curve.third_ = Eigen::MatrixX3d::Zero(static_cast<Eigen::Index>(n), 3);
    for (std::size_t j = 0; j < n; ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        if (j == 0) {
            curve.third_.row(r) = (curve.second_.row(1) - curve.second_.row(0)) / sys.h[0];
        } else if (j + 1 == n) {
            curve.third_.row(r) = (curve.second_.row(r) - curve.second_.row(r - 1)) / sys.h[j - 1];
        } else {
            curve.third_.row(r) = (curve.second_.row(r + 1) - curve.second_.row(r - 1)) / (sys.h[j - 1] + sys.h[j]);
        }
    }
    // residual against every input point, duplicates included
    double rss = 0.0;
    for (Eigen::Index i = 0; i < xyz.rows(); ++i) {
        rss += (curve.position(curve.sample_parameters_[static_cast<std::size_t>(i)]).transpose() - xyz.row(i))
                   .squaredNorm();
    }
    curve.residual_ = rss;
    curve.build_arc_table();
    return curve;
}

std::size_t SplineCurve::interval(double u) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(i, knots_.size() - 2);
}

Eigen::Vector3d SplineCurve::position(double u) const {
    u = std::clamp(u, knots_.front(), knots_.back());
    const std::size_t i = interval(u);
    const auto r = static_cast<Eigen::Index>(i);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - u) / h;
    const double b = 1.0 - a;
    return (a * values_.row(r) + b * values_.row(r + 1) +
            ((a * a * a - a) * second_.row(r) + (b * b * b - b) * second_.row(r + 1)) * (h * h / 6.0))
        .transpose();
}

SplineCurve::Derivatives SplineCurve::derivatives(double u) const {
    u = std::clamp(u, knots_.front(), knots_.back());
    const std::size_t i = interval(u);
    const auto r = static_cast<Eigen::Index>(i);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - u) / h;
    const double b = 1.0 - a;
    Derivatives d;
    d.first = ((values_.row(r + 1) - values_.row(r)) / h - (3 * a * a - 1) / 6.0 * h * second_.row(r) +
               (3 * b * b - 1) / 6.0 * h * second_.row(r + 1))
                  .transpose();
    d.second = (a * second_.row(r) + b * second_.row(r + 1)).transpose();
    d.third = (a * third_.row(r) + b * third_.row(r + 1)).transpose();
    return d;
}

void SplineCurve::build_arc_table() {
    // 3-point Gauss-Legendre on each of the sampling sub-intervals
    static constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double u0 = knots_.front();
    const double u1 = knots_.back();
    arc_u_.resize(kArcSamples);
    arc_s_.resize(kArcSamples);
    arc_u_[0] = u0;
    arc_s_[0] = 0.0;
    const double step = (u1 - u0) / (kArcSamples - 1);
    for (int k = 1; k < kArcSamples; ++k) {
        const double a = u0 + (k - 1) * step;
        const double b = k + 1 == kArcSamples ? u1 : u0 + k * step;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double piece = 0.0;
        for (int g = 0; g < 3; ++g) {
            piece += weights[static_cast<std::size_t>(g)] *
                     derivatives(mid + half * nodes[static_cast<std::size_t>(g)]).first.norm();
        }
        arc_u_[static_cast<std::size_t>(k)] = b;
        // strictly increasing even across stationary points
        arc_s_[static_cast<std::size_t>(k)] =
            arc_s_[static_cast<std::size_t>(k - 1)] + std::max(piece * half, 1e-15 * (b - a));
    }
}

double SplineCurve::parameter_at_arc(double s) const {
    if (s <= 0.0) return arc_u_.front();
    if (s >= arc_s_.back()) return arc_u_.back();
    auto it = std::upper_bound(arc_s_.begin(), arc_s_.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - arc_s_.begin());
    const double t = (s - arc_s_[k - 1]) / (arc_s_[k] - arc_s_[k - 1]);
    return arc_u_[k - 1] + t * (arc_u_[k] - arc_u_[k - 1]);
}

double SplineCurve::arc_at_parameter(double u) const {
    if (u <= arc_u_.front()) return 0.0;
    if (u >= arc_u_.back()) return arc_s_.back();
    auto it = std::upper_bound(arc_u_.begin(), arc_u_.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - arc_u_.begin());
    const double t = (u - arc_u_[k - 1]) / (arc_u_[k] - arc_u_[k - 1]);
    return arc_s_[k - 1] + t * (arc_s_[k] - arc_s_[k - 1]);
}

}  // namespace motioncloud
