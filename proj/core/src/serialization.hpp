#pragma once

#include "motioncloud/classifier.hpp"
#include "motioncloud/geometry.hpp"
#include "motioncloud/indexer.hpp"
#include "motioncloud/pipeline.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>

namespace motioncloud::detail {

using json = nlohmann::json;

// Values are stored at 9 significant digits so files are reproducible.
inline double round9(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

template <typename Vec>
json vector_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(round9(v[i]));
    return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Eigen::Vector3d vector3_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    if (values.size() != 3) throw nlohmann::json::other_error::create(501, "expected a 3-vector", &j);
    return {values[0], values[1], values[2]};
}

json signature_json(const CloudSignature& sig);
CloudSignature signature_from_json(const json& j);

json pipeline_config_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const json& j);

json index_record_json(const IndexRecord& r);

}  // namespace motioncloud::detail
