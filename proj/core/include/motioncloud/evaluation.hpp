#pragma once

#include "motioncloud/eigenspace.hpp"
#include "motioncloud/pipeline.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace motioncloud {

/// Rows are true classes, columns predicted classes; entries in percent.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    Eigen::MatrixXd percent;
    Eigen::MatrixXi counts;

    /// Sample-weighted accuracy from the diagonal, in percent.
    double accuracy() const;
};

ConfusionMatrix confusion_matrix(std::span<const std::string> predictions, std::span<const std::string> truths,
                                 std::span<const std::string> classes);

struct ClassifierComparison {
    double tpc_accuracy = 0.0;  ///< percent
    double knn_accuracy = 0.0;
    ConfusionMatrix tpc;
    ConfusionMatrix knn;
    std::vector<std::string> truths;
    std::vector<std::string> tpc_predictions;
    std::vector<std::string> knn_predictions;
    int folds = 0;
};

/// Leave-one-clip-per-class-out: fold f holds out the f-th clip of every
/// class. Both classifiers see identical splits.
ClassifierComparison compare_classifiers(std::span<const ClipFeatures> dataset, const PipelineConfig& cfg);

struct SeparationReport {
    std::vector<std::string> classes;
    Eigen::MatrixXd linear_sums;  ///< per class pair, summed point distances
    Eigen::MatrixXd kernel_sums;
    double linear_max = 0.0;
    double kernel_max = 0.0;
    double ratio = 1.0;   ///< kernel_max / linear_max
    double factor = 1.0;  ///< ratio if kernel_max > linear_max else 1 / ratio
};

SeparationReport separation_report(const Eigen::MatrixXd& linear_points, const Eigen::MatrixXd& kernel_points,
                                   std::span<const std::string> labels);
SeparationReport separation_report(const EigenModel& linear, const EigenModel& kernel, const TrainingSet& data);

}  // namespace motioncloud
