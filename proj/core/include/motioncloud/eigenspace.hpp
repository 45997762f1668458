#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace motioncloud {

/// Flattened templates (one per row) with their class and clip of origin.
struct TrainingSet {
    Eigen::MatrixXd samples;
    std::vector<std::string> labels;
    std::vector<std::string> clip_ids;

    std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
    Eigen::Index dimension() const { return samples.cols(); }
    /// Sorted distinct labels.
    std::vector<std::string> classes() const;
    /// Throws InvalidArgument on empty data or inconsistent label/clip lengths.
    void validate() const;
};

enum class EigenKind { linear, polynomial };

struct KernelParams {
    int degree = 2;
    double offset = 1.0;
    /// Multiplier applied to mean-subtracted inputs before the kernel.
    /// Zero selects 1 / (255 * sqrt(D)), which keeps Gram entries O(1) for 8-bit templates.
    double input_scale = 0.0;
};

/// Trained covariance eigenspace. Immutable after training; projection is
/// const and safe to call concurrently.
struct EigenModel {
    EigenKind kind = EigenKind::linear;
    Eigen::VectorXd mean;         ///< pixel mean, length D
    Eigen::VectorXd eigenvalues;  ///< covariance eigenvalues, descending magnitude, length K

    // linear
    Eigen::MatrixXd basis;  ///< K x D, orthonormal rows

    // polynomial kernel
    int degree = 1;
    double offset = 0.0;
    double input_scale = 1.0;
    Eigen::MatrixXd training;          ///< N x D centered, scaled training vectors
    Eigen::MatrixXd coefficients;      ///< K x N expansion coefficients
    Eigen::VectorXd gram_column_means; ///< length N
    double gram_mean = 0.0;

    /// Projections of the training rows (N x K); populated by training,
    /// empty on models loaded from disk.
    Eigen::MatrixXd training_projections;

    Eigen::Index dims() const { return eigenvalues.size(); }
    Eigen::Index input_dim() const { return mean.size(); }

    Eigen::VectorXd project(const Eigen::VectorXd& x) const;
    /// Projects every row of `rows` (M x D) and returns M x K.
    Eigen::MatrixXd project_rows(const Eigen::MatrixXd& rows) const;
};

/// Ordered eigenspace points, one per template.
struct Trajectory {
    Eigen::MatrixXd points;  ///< n x K
    std::vector<int> frame_index;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dims() const { return points.cols(); }
};

inline constexpr int kDefaultDimensions = 10;

EigenModel train_pca(const TrainingSet& data, int dimensions = kDefaultDimensions);
EigenModel train_kpca(const TrainingSet& data, int dimensions, const KernelParams& params);

Trajectory project_sequence(const EigenModel& model, const Eigen::MatrixXd& features);

/// Mean out-of-class over mean in-class pairwise distance of the projected
/// training set. Returns +infinity when the in-class mean is zero.
double class_separation_ratio(const EigenModel& model, const TrainingSet& data);
double class_separation_ratio(const Eigen::MatrixXd& projected, std::span<const std::string> labels);

struct DegreeSweep {
    int best_degree = 1;
    std::vector<std::pair<int, double>> curve;  ///< (degree, separation ratio)
};

/// Trains one kernel model per degree and keeps the most separating one;
/// ties go to the smaller degree.
DegreeSweep tune_kernel_degree(const TrainingSet& data, int dimensions, std::span<const int> degrees,
                               double offset = 1.0, double input_scale = 0.0);

}  // namespace motioncloud
