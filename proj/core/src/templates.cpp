#include "motioncloud/templates.hpp"

#include "motioncloud/error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace motioncloud {

int mvfi_intensity(double magnitude, const MvfiConfig& cfg) {
    const double m = std::clamp(magnitude, cfg.magnitude_floor, cfg.magnitude_cap);
    const double t = (m - cfg.magnitude_floor) / (cfg.magnitude_cap - cfg.magnitude_floor);
    return static_cast<int>(std::lround(cfg.min_intensity + t * (cfg.max_intensity - cfg.min_intensity)));
}

namespace {

struct Box {
    double cx;
    double cy;
    double magnitude;
    double angle;  // one of 0, 45, 90, 135 degrees
};

void paint_box(Frame& out, const Box& box, const MvfiConfig& cfg, std::uint8_t value) {
    const double length = std::clamp(cfg.length_gain * box.magnitude, cfg.min_length, cfg.max_length);
    const double half_len = length / 2.0;
    const double half_wid = cfg.box_width / 2.0;
    const double ca = std::cos(box.angle);
    const double sa = std::sin(box.angle);
    const int reach = static_cast<int>(std::ceil(std::hypot(half_len, half_wid)));
    const int x_lo = std::max(0, static_cast<int>(std::floor(box.cx)) - reach);
    const int x_hi = std::min(out.width - 1, static_cast<int>(std::ceil(box.cx)) + reach);
    const int y_lo = std::max(0, static_cast<int>(std::floor(box.cy)) - reach);
    const int y_hi = std::min(out.height - 1, static_cast<int>(std::ceil(box.cy)) + reach);
    constexpr double slack = 1e-9;
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            const double dx = x - box.cx;
            const double dy = y - box.cy;
            const double along = dx * ca + dy * sa;
            const double across = -dx * sa + dy * ca;
            if (std::abs(along) <= half_len + slack && std::abs(across) <= half_wid + slack) {
                out.at(x, y) = value;
            }
        }
    }
}

double orientation_bin(double u, double v) {
    constexpr double quarter = std::numbers::pi / 4.0;
    double angle = std::atan2(v, u);
    if (angle < 0) angle += std::numbers::pi;  // direction modulo 180 degrees
    int bin = static_cast<int>(std::lround(angle / quarter)) % 4;
    return bin * quarter;
}

}  // namespace

MvfiTemplate encode_mvfi(const FlowField& flow, FrameSize dims, const MvfiConfig& cfg) {
    MvfiTemplate tmpl{Frame(dims.width, dims.height, 0)};
    std::vector<Box> boxes;
    for (int r = 0; r < flow.rows; ++r) {
        for (int c = 0; c < flow.cols; ++c) {
            const auto& f = flow.at(c, r);
            const double magnitude = std::hypot(f.u, f.v);
            if (!(magnitude >= cfg.magnitude_floor)) continue;
            boxes.push_back({flow.node_x(c), flow.node_y(r), magnitude, orientation_bin(f.u, f.v)});
        }
    }
    // largest velocities are painted last so they end up on top
    std::stable_sort(boxes.begin(), boxes.end(),
                     [](const Box& a, const Box& b) { return a.magnitude < b.magnitude; });
    for (const auto& box : boxes) {
        paint_box(tmpl.image, box, cfg, static_cast<std::uint8_t>(mvfi_intensity(box.magnitude, cfg)));
    }
    return tmpl;
}

std::vector<MvfiTemplate> sequence_templates(const FrameSequence& seq, const FlowConfig& flow_cfg,
                                             const MvfiConfig& mvfi_cfg) {
    if (seq.size() < 2) {
        throw InvalidArgument("sequence_templates: need at least 2 frames");
    }
    const FrameSize dims{seq.width(), seq.height()};
    std::vector<MvfiTemplate> out(seq.size() - 1);
    detail::parallel_for(out.size(), [&](std::size_t i) {
        out[i] = encode_mvfi(dense_flow(seq.frames[i], seq.frames[i + 1], flow_cfg), dims, mvfi_cfg);
    });
    return out;
}

Eigen::VectorXd flatten_template(const MvfiTemplate& tmpl, int side) {
    const Frame& img = tmpl.image;
    if (side <= 0) {
        throw InvalidArgument("flatten_template: side must be positive");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(side) * side);
    if (side == img.width && side == img.height) {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) out[static_cast<Eigen::Index>(i)] = img.pixels[i];
        return out;
    }
    // area-weighted block average
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(out.size());
    for (int y = 0; y < img.height; ++y) {
        const int by = std::min(y * side / img.height, side - 1);
        for (int x = 0; x < img.width; ++x) {
            const int bx = std::min(x * side / img.width, side - 1);
            const Eigen::Index k = static_cast<Eigen::Index>(by) * side + bx;
            out[k] += img.at(x, y);
            weight[k] += 1.0;
        }
    }
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        if (weight[k] > 0) out[k] /= weight[k];
    }
    return out;
}

Eigen::MatrixXd template_features(const std::vector<MvfiTemplate>& templates, int side) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(templates.size()), static_cast<Eigen::Index>(side) * side);
    for (std::size_t i = 0; i < templates.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = flatten_template(templates[i], side).transpose();
    }
    return rows;
}

}  // namespace motioncloud
