#pragma once

#include "motioncloud/flow.hpp"
#include "motioncloud/image.hpp"

#include <Eigen/Core>

#include <vector>

namespace motioncloud {

/// Grayscale motion template. Box orientation encodes flow direction and
/// intensity encodes flow speed.
struct MvfiTemplate {
    Frame image;
    friend bool operator==(const MvfiTemplate&, const MvfiTemplate&) = default;
};

struct MvfiConfig {
    double magnitude_floor = 0.5;
    double magnitude_cap = 16.0;
    double length_gain = 4.0;
    double min_length = 4.0;
    double max_length = 32.0;
    double box_width = 6.0;
    int min_intensity = 64;
    int max_intensity = 255;
};

/// Intensity assigned to a box for a vector of the given magnitude.
int mvfi_intensity(double magnitude, const MvfiConfig& cfg = {});

MvfiTemplate encode_mvfi(const FlowField& flow, FrameSize dims, const MvfiConfig& cfg = {});

/// One template per consecutive frame pair, in order.
std::vector<MvfiTemplate> sequence_templates(const FrameSequence& seq,
                                             const FlowConfig& flow_cfg = {},
                                             const MvfiConfig& mvfi_cfg = {});

/// Block-averages a template onto a side x side grid and flattens it
/// row-major. Values stay in the 0..255 range.
Eigen::VectorXd flatten_template(const MvfiTemplate& tmpl, int side);

/// Flattened templates stacked as rows.
Eigen::MatrixXd template_features(const std::vector<MvfiTemplate>& templates, int side);

}  // namespace motioncloud
