#include "motioncloud/evaluation.hpp"

#include "motioncloud/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace motioncloud {

double ConfusionMatrix::accuracy() const {
    const int total = counts.sum();
    return total > 0 ? 100.0 * counts.trace() / total : 0.0;
}

ConfusionMatrix confusion_matrix(std::span<const std::string> predictions, std::span<const std::string> truths,
                                 std::span<const std::string> classes) {
    if (predictions.size() != truths.size()) {
        throw InvalidArgument("confusion_matrix: predictions and truths differ in length");
    }
    if (classes.empty()) {
        throw InvalidArgument("confusion_matrix: no classes");
    }
    std::map<std::string, int> slot;
    for (const auto& c : classes) {
        if (!slot.emplace(c, static_cast<int>(slot.size())).second) {
            throw InvalidArgument("confusion_matrix: duplicate class '" + c + "'");
        }
    }
    auto index_of = [&](const std::string& label) {
        const auto it = slot.find(label);
        if (it == slot.end()) throw InvalidArgument("confusion_matrix: unknown label '" + label + "'");
        return it->second;
    };
    const auto n = static_cast<Eigen::Index>(classes.size());
    ConfusionMatrix cm;
    cm.classes.assign(classes.begin(), classes.end());
    cm.counts = Eigen::MatrixXi::Zero(n, n);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        cm.counts(index_of(truths[i]), index_of(predictions[i])) += 1;
    }
    cm.percent = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int row_total = cm.counts.row(r).sum();
        if (row_total == 0) {
            throw InvalidArgument("confusion_matrix: class '" + cm.classes[static_cast<std::size_t>(r)] +
                                  "' has no true samples");
        }
        cm.percent.row(r) = cm.counts.row(r).cast<double>() * (100.0 / row_total);
    }
    return cm;
}

ClassifierComparison compare_classifiers(std::span<const ClipFeatures> dataset, const PipelineConfig& cfg) {
    if (dataset.empty()) throw InvalidArgument("compare_classifiers: empty dataset");

    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset[i].label].push_back(i);
    if (by_class.size() < 2) throw InvalidArgument("compare_classifiers: need at least two classes");

    std::size_t folds = 0;
    for (const auto& [_, members] : by_class) folds = std::max(folds, members.size());

    ClassifierComparison out;
    std::vector<std::string> classes;
    for (const auto& [label, _] : by_class) classes.push_back(label);

    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> held;
        std::vector<ClipFeatures> train;
        for (const auto& [_, members] : by_class) {
            for (std::size_t j = 0; j < members.size(); ++j) {
                // single-clip classes stay in training
                if (j == f % members.size() && members.size() > 1) {
                    held.push_back(members[j]);
                } else {
                    train.push_back(dataset[members[j]]);
                }
            }
        }
        if (held.empty()) continue;
        const ActionModel model = train_action_model(train, cfg);
        for (std::size_t h : held) {
            const Trajectory traj = model.trajectory(dataset[h].features);
            const CloudSignature sig = model.signature(traj);
            out.truths.push_back(dataset[h].label);
            out.tpc_predictions.push_back(model.classify(sig, traj, cfg.metric).label);
            out.knn_predictions.push_back(model.classify_knn(traj, cfg.knn_k).label);
        }
        ++out.folds;
    }
    if (out.truths.empty()) {
        throw InvalidArgument("compare_classifiers: every class has a single clip; nothing to hold out");
    }
    out.tpc = confusion_matrix(out.tpc_predictions, out.truths, classes);
    out.knn = confusion_matrix(out.knn_predictions, out.truths, classes);
    out.tpc_accuracy = out.tpc.accuracy();
    out.knn_accuracy = out.knn.accuracy();
    return out;
}

namespace {

Eigen::MatrixXd pair_sums(const Eigen::MatrixXd& points, std::span<const std::string> labels,
                          const std::vector<std::string>& classes) {
    const auto c = static_cast<Eigen::Index>(classes.size());
    std::vector<int> slot(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        slot[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(c, c);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
            const int a = slot[static_cast<std::size_t>(i)];
            const int b = slot[static_cast<std::size_t>(j)];
            if (a == b) continue;
            const double d = (points.row(i) - points.row(j)).norm();
            sums(a, b) += d;
            sums(b, a) += d;
        }
    }
    return sums;
}

}  // namespace

SeparationReport separation_report(const Eigen::MatrixXd& linear_points, const Eigen::MatrixXd& kernel_points,
                                   std::span<const std::string> labels) {
    if (linear_points.rows() != kernel_points.rows() ||
        linear_points.rows() != static_cast<Eigen::Index>(labels.size())) {
        throw InvalidArgument("separation_report: point sets and labels differ in size");
    }
    const std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw InvalidArgument("separation_report: need at least two classes");

    SeparationReport rep;
    rep.classes.assign(distinct.begin(), distinct.end());
    rep.linear_sums = pair_sums(linear_points, labels, rep.classes);
    rep.kernel_sums = pair_sums(kernel_points, labels, rep.classes);
    rep.linear_max = rep.linear_sums.maxCoeff();
    rep.kernel_max = rep.kernel_sums.maxCoeff();
    if (rep.linear_max <= 0.0) throw NumericalError("separation_report: linear space has zero spread");
    rep.ratio = rep.kernel_max / rep.linear_max;
    rep.factor = rep.kernel_max > rep.linear_max ? rep.ratio : 1.0 / rep.ratio;
    return rep;
}

SeparationReport separation_report(const EigenModel& linear, const EigenModel& kernel, const TrainingSet& data) {
    data.validate();
    return separation_report(linear.project_rows(data.samples), kernel.project_rows(data.samples), data.labels);
}

}  // namespace motioncloud
