#include "motioncloud/eigenspace.hpp"

#include "motioncloud/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace motioncloud {

std::vector<std::string> TrainingSet::classes() const {
    std::set<std::string> unique(labels.begin(), labels.end());
    return {unique.begin(), unique.end()};
}

void TrainingSet::validate() const {
    if (samples.rows() == 0 || samples.cols() == 0) {
        throw InvalidArgument("training set is empty");
    }
    if (labels.size() != size()) {
        throw InvalidArgument("training set: one label per sample required");
    }
    if (!clip_ids.empty() && clip_ids.size() != size()) {
        throw InvalidArgument("training set: clip id count does not match sample count");
    }
    if (!samples.allFinite()) {
        throw InvalidArgument("training set contains non-finite values");
    }
}

namespace {

constexpr double kRelativeEigenFloor = 1e-10;

struct Spectrum {
    Eigen::VectorXd values;   // descending magnitude
    Eigen::MatrixXd vectors;  // columns
};

// Full symmetric eigendecomposition, reordered by descending |lambda|.
Spectrum sorted_spectrum(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigendecomposition did not converge");
    }
    const auto& vals = solver.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(vals[a]) > std::abs(vals[b]); });
    Spectrum out{Eigen::VectorXd(vals.size()), Eigen::MatrixXd(symmetric.rows(), vals.size())};
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.values[static_cast<Eigen::Index>(i)] = vals[order[i]];
        out.vectors.col(static_cast<Eigen::Index>(i)) = solver.eigenvectors().col(order[i]);
    }
    return out;
}

// Flips v so that its largest-magnitude component is positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0) v = -v;
}

void check_dimensions(const TrainingSet& data, int dimensions) {
    data.validate();
    if (dimensions < 2) {
        throw InvalidArgument("eigenspace dimension K must be >= 2");
    }
    if (static_cast<std::size_t>(dimensions) > data.size()) {
        throw InvalidArgument("eigenspace dimension K=" + std::to_string(dimensions) +
                              " exceeds the training sample count " + std::to_string(data.size()));
    }
}

// Extends the orthonormal rows of `basis` (first `filled` rows) with
// canonical axes orthogonalized against them.
void complete_basis(Eigen::MatrixXd& basis, Eigen::Index filled) {
    const Eigen::Index dim = basis.cols();
    Eigen::Index axis = 0;
    for (Eigen::Index row = filled; row < basis.rows(); ++row) {
        bool placed = false;
        while (!placed && axis < dim) {
            Eigen::VectorXd candidate = Eigen::VectorXd::Unit(dim, axis++);
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index k = 0; k < row; ++k) {
                    candidate -= candidate.dot(basis.row(k).transpose()) * basis.row(k).transpose();
                }
            }
            const double norm = candidate.norm();
            if (norm > 1e-6) {
                candidate /= norm;
                fix_sign(candidate);
                basis.row(row) = candidate.transpose();
                placed = true;
            }
        }
        if (!placed) {
            throw NumericalError("cannot complete eigenspace basis");
        }
    }
}

}  // namespace

EigenModel train_pca(const TrainingSet& data, int dimensions) {
    check_dimensions(data, dimensions);
    if (dimensions > data.dimension()) {
        throw InvalidArgument("eigenspace dimension K exceeds the input dimension");
    }
    const auto n = static_cast<double>(data.size());
    EigenModel model;
    model.kind = EigenKind::linear;
    model.mean = data.samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.samples.rowwise() - model.mean.transpose();

    // N x N surrogate of the D x D covariance
    const Eigen::MatrixXd surrogate = centered * centered.transpose();
    const Spectrum spectrum = sorted_spectrum(surrogate);
    const double leading = std::abs(spectrum.values[0]);
    if (!(leading > 0.0) || centered.cwiseAbs().maxCoeff() == 0.0) {
        throw NumericalError("no variance: all training samples are identical");
    }

    model.eigenvalues = Eigen::VectorXd::Zero(dimensions);
    model.basis = Eigen::MatrixXd::Zero(dimensions, data.dimension());
    Eigen::Index filled = 0;
    for (Eigen::Index i = 0; i < dimensions; ++i) {
        const double mu = spectrum.values[i];
        if (std::abs(mu) <= kRelativeEigenFloor * leading) break;
        Eigen::VectorXd u = centered.transpose() * spectrum.vectors.col(i);
        const double norm = u.norm();
        if (!(norm > 0.0)) break;
        u /= norm;
        fix_sign(u);
        model.basis.row(i) = u.transpose();
        model.eigenvalues[i] = mu / n;
        ++filled;
    }
    complete_basis(model.basis, filled);
    model.training_projections = centered * model.basis.transpose();
    return model;
}

EigenModel train_kpca(const TrainingSet& data, int dimensions, const KernelParams& params) {
    check_dimensions(data, dimensions);
    if (params.degree < 1) {
        throw InvalidArgument("kernel degree must be >= 1");
    }
    const Eigen::Index count = data.samples.rows();
    const auto n = static_cast<double>(count);

    EigenModel model;
    model.kind = EigenKind::polynomial;
    model.degree = params.degree;
    model.offset = params.offset;
    model.input_scale = params.input_scale > 0.0
                            ? params.input_scale
                            : 1.0 / (255.0 * std::sqrt(static_cast<double>(data.dimension())));
    model.mean = data.samples.colwise().mean().transpose();
    model.training = (data.samples.rowwise() - model.mean.transpose()) * model.input_scale;
    if (model.training.cwiseAbs().maxCoeff() == 0.0) {
        throw NumericalError("no variance: all training samples are identical");
    }

    Eigen::MatrixXd gram = model.training * model.training.transpose();
    gram = (gram.array() + model.offset).pow(model.degree).matrix();
    if (!gram.allFinite()) {
        throw NumericalError("kernel Gram matrix is not finite; scale the features down "
                             "(input_scale) or lower the polynomial degree");
    }
    model.gram_column_means = gram.colwise().mean().transpose();
    model.gram_mean = model.gram_column_means.mean();

    // double centering: K - 1K - K1 + 1K1
    Eigen::MatrixXd centered = gram;
    centered.rowwise() -= model.gram_column_means.transpose();
    centered.colwise() -= model.gram_column_means;
    centered.array() += model.gram_mean;

    const Spectrum spectrum = sorted_spectrum(centered);
    const double leading = std::abs(spectrum.values[0]);
    if (!(leading > 0.0)) {
        throw NumericalError("no variance in kernel feature space");
    }

    model.eigenvalues = Eigen::VectorXd::Zero(dimensions);
    model.coefficients = Eigen::MatrixXd::Zero(dimensions, count);
    model.training_projections = Eigen::MatrixXd::Zero(count, dimensions);
    for (Eigen::Index i = 0; i < dimensions; ++i) {
        const double mu = spectrum.values[i];
        if (std::abs(mu) <= kRelativeEigenFloor * leading) break;
        Eigen::VectorXd v = spectrum.vectors.col(i);
        fix_sign(v);
        // lambda' * N * a^T a = 1 with lambda' = mu / N and |v| = 1
        model.coefficients.row(i) = (v / std::sqrt(std::abs(mu))).transpose();
        model.eigenvalues[i] = mu / n;
        model.training_projections.col(i) = centered * model.coefficients.row(i).transpose();
    }
    return model;
}

Eigen::MatrixXd EigenModel::project_rows(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != input_dim()) {
        throw InvalidArgument("projection: expected vectors of length " + std::to_string(input_dim()) + ", got " +
                              std::to_string(rows.cols()));
    }
    const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
    if (kind == EigenKind::linear) {
        return centered * basis.transpose();
    }
    Eigen::MatrixXd k = (centered * input_scale) * training.transpose();  // M x N
    k = (k.array() + offset).pow(degree).matrix();
    const Eigen::VectorXd row_means = k.rowwise().mean();
    k.rowwise() -= gram_column_means.transpose();
    k.colwise() -= row_means;
    k.array() += gram_mean;
    return k * coefficients.transpose();
}

Eigen::VectorXd EigenModel::project(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd single = x.transpose();
    return project_rows(single).row(0).transpose();
}

Trajectory project_sequence(const EigenModel& model, const Eigen::MatrixXd& features) {
    Trajectory traj;
    traj.points = model.project_rows(features);
    if (!traj.points.allFinite()) {
        throw NumericalError("projection produced non-finite coordinates");
    }
    traj.frame_index.resize(static_cast<std::size_t>(features.rows()));
    std::iota(traj.frame_index.begin(), traj.frame_index.end(), 0);
    return traj;
}

double class_separation_ratio(const Eigen::MatrixXd& projected, std::span<const std::string> labels) {
    if (static_cast<std::size_t>(projected.rows()) != labels.size()) {
        throw InvalidArgument("class_separation_ratio: label count mismatch");
    }
    if (std::set<std::string>(labels.begin(), labels.end()).size() < 2) {
        throw InvalidArgument("class_separation_ratio needs at least two classes");
    }
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_count = 0, out_count = 0;
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < projected.rows(); ++j) {
            const double d = (projected.row(i) - projected.row(j)).norm();
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                in_sum += d;
                ++in_count;
            } else {
                out_sum += d;
                ++out_count;
            }
        }
    }
    const double s_in = in_count ? in_sum / static_cast<double>(in_count) : 0.0;
    const double s_out = out_sum / static_cast<double>(out_count);
    if (s_in == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return s_out / s_in;
}

double class_separation_ratio(const EigenModel& model, const TrainingSet& data) {
    data.validate();
    return class_separation_ratio(model.project_rows(data.samples), data.labels);
}

DegreeSweep tune_kernel_degree(const TrainingSet& data, int dimensions, std::span<const int> degrees,
                               double offset, double input_scale) {
    if (degrees.empty()) {
        throw InvalidArgument("tune_kernel_degree: empty degree range");
    }
    std::vector<int> sorted(degrees.begin(), degrees.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    DegreeSweep sweep;
    double best = -std::numeric_limits<double>::infinity();
    for (int d : sorted) {
        const EigenModel model = train_kpca(data, dimensions, {d, offset, input_scale});
        const double ratio = class_separation_ratio(model.training_projections, data.labels);
        sweep.curve.emplace_back(d, ratio);
        if (ratio > best) {
            best = ratio;
            sweep.best_degree = d;
        }
    }
    return sweep;
}

}  // namespace motioncloud
