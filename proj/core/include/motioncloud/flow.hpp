#pragma once

#include "motioncloud/image.hpp"

#include <vector>

namespace motioncloud {

struct FlowConfig {
    int pyramid_levels = 3;
    int window_radius = 7;
    int grid_spacing = 8;
    /// Mean squared gradient per window pixel below which a node reports no motion.
    double min_texture = 25.0;
    int max_iterations = 10;
    double convergence = 0.01;
};

struct FlowVector {
    double u = 0.0;
    double v = 0.0;
};

/// Sparse flow sampled on a regular grid. Node (c, r) sits at
/// (origin_x + c * grid_spacing, origin_y + r * grid_spacing).
struct FlowField {
    int grid_spacing = 0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    int cols = 0;
    int rows = 0;
    std::vector<FlowVector> vectors;

    double node_x(int c) const { return origin_x + c * grid_spacing; }
    double node_y(int r) const { return origin_y + r * grid_spacing; }
    const FlowVector& at(int c, int r) const { return vectors[static_cast<std::size_t>(r) * cols + c]; }
    FlowVector& at(int c, int r) { return vectors[static_cast<std::size_t>(r) * cols + c]; }
};

/// Grid layout for a frame: nodes at cell centers, symmetric under 180 degree rotation.
FlowField make_flow_grid(int width, int height, int grid_spacing);

/// Coarse-to-fine Lucas-Kanade estimate of the motion from `prev` to `next`
/// at every grid node.
FlowField dense_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg = {});

}  // namespace motioncloud
