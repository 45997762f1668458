#include "motioncloud/classifier.hpp"

#include "motioncloud/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace motioncloud {

double alpha(double separation, const AlphaParams& p) {
    const double x = std::max(separation, 0.0);
    const double envelope = p.beta * std::exp(-p.lambda1 * x);
    if (p.variant == AlphaVariant::peaked) {
        return envelope * -std::expm1(-p.lambda2 * x);
    }
    if (x < 1e-12) {
        return p.beta * p.lambda2;
    }
    return envelope * -std::expm1(-p.lambda2 * x) / x;
}

DistanceBreakdown cloud_distance(const CloudSignature& query, const CloudSignature& other, const MetricParams& p,
                                 const FuzzyContext* context) {
    if (query.centroid.size() != other.centroid.size()) {
        throw InvalidArgument("cloud_distance: centroid dimensions differ");
    }
    DistanceBreakdown out;
    const double raw = (query.centroid - other.centroid).norm();
    const double radii = query.mean_radius + other.mean_radius;
    out.centroid_separation = (p.normalize_by_radii && radii > 1e-12) ? raw / radii : raw;
    out.alpha = alpha(out.centroid_separation, p.alpha);
    if (query.plane_defined() && other.plane_defined()) {
        const double dot = std::abs(query.mean_binormal->dot(*other.mean_binormal));
        out.plane_angle = std::acos(std::clamp(dot, 0.0, 1.0));
    }
    if (p.rho > 0.0 && context != nullptr) {
        out.fuzzy = fuzzy_penalty(context->query, other.label, context->training, p.fuzzy);
    }
    out.total = out.centroid_separation + out.alpha * out.plane_angle + p.rho * out.fuzzy;
    return out;
}

double local_affinity(const LocalTuple& a, const LocalTuple& b, double epsilon) {
    const double align = 0.5 * (1.0 + std::abs(a.tangent.dot(b.tangent)));
    const double dk = std::abs(a.curvature - b.curvature) / (a.curvature + b.curvature + epsilon);
    const double dt = std::abs(a.torsion - b.torsion) / (std::abs(a.torsion) + std::abs(b.torsion) + epsilon);
    return align * std::exp(-dk) * std::exp(-dt);
}

double fuzzy_penalty(std::span<const TaggedPoint> query, const std::string& cls,
                     std::span<const TaggedPoint> training, const FuzzyParams& p) {
    if (training.empty()) {
        throw InvalidArgument("fuzzy_penalty: empty training set");
    }
    if (p.neighbors < 1 || !(p.fuzzifier > 1.0)) {
        throw InvalidArgument("fuzzy_penalty: need neighbors >= 1 and fuzzifier > 1");
    }
    if (query.empty()) {
        return 1.0;
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(p.neighbors), training.size());
    const double exponent = 2.0 / (p.fuzzifier - 1.0);
    std::vector<std::pair<double, std::size_t>> dist(training.size());
    double membership_sum = 0.0;
    for (const auto& q : query) {
        for (std::size_t j = 0; j < training.size(); ++j) {
            dist[j] = {(q.position - training[j].position).squaredNorm(), j};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        double total = 0.0, in_class = 0.0;
        for (std::size_t n = 0; n < k; ++n) {
            const auto& t = training[dist[n].second];
            const double d = std::sqrt(dist[n].first);
            const double w = local_affinity(q.local, t.local, p.epsilon) / (std::pow(d, exponent) + p.epsilon);
            total += w;
            if (t.label == cls) in_class += w;
        }
        membership_sum += total > 0.0 ? in_class / total : 0.0;
    }
    const double f = 1.0 - membership_sum / static_cast<double>(query.size());
    return std::clamp(f, 0.0, 1.0);
}

Classification classify_cloud(const CloudSignature& query, std::span<const CloudSignature> model,
                              const MetricParams& p, const FuzzyContext* context) {
    if (model.empty()) {
        throw InvalidArgument("classify_cloud: empty model");
    }
    Classification out;
    std::map<std::string, double> fuzzy_cache;
    for (const auto& cloud : model) {
        DistanceBreakdown d = cloud_distance(query, cloud, p, nullptr);
        if (p.rho > 0.0 && context != nullptr) {
            auto it = fuzzy_cache.find(cloud.label);
            if (it == fuzzy_cache.end()) {
                it = fuzzy_cache.emplace(cloud.label,
                                         fuzzy_penalty(context->query, cloud.label, context->training, p.fuzzy))
                         .first;
            }
            d.total += p.rho * it->second;
        }
        auto [slot, inserted] = out.scores.try_emplace(cloud.label, d.total);
        if (!inserted) slot->second = std::min(slot->second, d.total);
    }
    // map order is lexicographic, so strict < keeps the first name on ties
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [label, score] : out.scores) {
        if (score < best) {
            best = score;
            out.label = label;
        }
    }
    return out;
}

KnnVote baseline_knn(const Eigen::MatrixXd& query, std::span<const TaggedPoint> training, int k) {
    if (query.rows() == 0 || training.empty()) {
        throw InvalidArgument("baseline_knn: empty query or training set");
    }
    if (k < 1 || static_cast<std::size_t>(k) > training.size()) {
        throw InvalidArgument("baseline_knn: k must lie in [1, training size]");
    }
    const auto kk = static_cast<std::size_t>(k);
    std::vector<std::pair<double, std::size_t>> dist(training.size());
    std::map<std::string, int> clip_votes;
    for (Eigen::Index i = 0; i < query.rows(); ++i) {
        for (std::size_t j = 0; j < training.size(); ++j) {
            dist[j] = {(query.row(i).transpose() - training[j].position).squaredNorm(), j};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        std::map<std::string, int> votes;
        for (std::size_t n = 0; n < kk; ++n) ++votes[training[dist[n].second].label];
        const auto winner = std::max_element(votes.begin(), votes.end(),
                                             [](const auto& a, const auto& b) { return a.second < b.second; });
        ++clip_votes[winner->first];
    }
    const auto winner = std::max_element(clip_votes.begin(), clip_votes.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
    return {winner->first, static_cast<double>(winner->second) / static_cast<double>(query.rows())};
}

}  // namespace motioncloud
