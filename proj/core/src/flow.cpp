#include "motioncloud/flow.hpp"

#include "motioncloud/error.hpp"

#include <algorithm>
#include <cmath>

namespace motioncloud {

namespace {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0f) {}

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

    // bilinear with border replication
    float sample(double x, double y) const {
        x = std::clamp(x, 0.0, width - 1.0);
        y = std::clamp(y, 0.0, height - 1.0);
        int ix = std::min(static_cast<int>(x), width - 2);
        int iy = std::min(static_cast<int>(y), height - 2);
        ix = std::max(ix, 0);
        iy = std::max(iy, 0);
        double fx = x - ix;
        double fy = y - iy;
        int ix1 = std::min(ix + 1, width - 1);
        int iy1 = std::min(iy + 1, height - 1);
        double top = (1 - fx) * at(ix, iy) + fx * at(ix1, iy);
        double bot = (1 - fx) * at(ix, iy1) + fx * at(ix1, iy1);
        return static_cast<float>((1 - fy) * top + fy * bot);
    }
};

Plane to_plane(const Frame& f) {
    Plane p(f.width, f.height);
    std::transform(f.pixels.begin(), f.pixels.end(), p.data.begin(), [](std::uint8_t v) { return float(v); });
    return p;
}

// separable [1 2 1]/4 with border replication
Plane binomial_blur(const Plane& in) {
    Plane tmp(in.width, in.height);
    Plane out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            int xl = std::max(x - 1, 0);
            int xr = std::min(x + 1, in.width - 1);
            tmp.at(x, y) = 0.25f * in.at(xl, y) + 0.5f * in.at(x, y) + 0.25f * in.at(xr, y);
        }
    }
    for (int y = 0; y < in.height; ++y) {
        int yu = std::max(y - 1, 0);
        int yd = std::min(y + 1, in.height - 1);
        for (int x = 0; x < in.width; ++x) {
            out.at(x, y) = 0.25f * tmp.at(x, yu) + 0.5f * tmp.at(x, y) + 0.25f * tmp.at(x, yd);
        }
    }
    return out;
}

Plane downsample(const Plane& in) {
    Plane out(std::max(in.width / 2, 1), std::max(in.height / 2, 1));
    for (int y = 0; y < out.height; ++y) {
        int y0 = std::min(2 * y, in.height - 1);
        int y1 = std::min(2 * y + 1, in.height - 1);
        for (int x = 0; x < out.width; ++x) {
            int x0 = std::min(2 * x, in.width - 1);
            int x1 = std::min(2 * x + 1, in.width - 1);
            out.at(x, y) = 0.25f * (in.at(x0, y0) + in.at(x1, y0) + in.at(x0, y1) + in.at(x1, y1));
        }
    }
    return out;
}

struct Level {
    Plane prev;
    Plane next;
    Plane grad_x;
    Plane grad_y;
    double scale = 1.0;  // level-0 pixels per level pixel
};

void central_gradients(const Plane& img, Plane& gx, Plane& gy) {
    gx = Plane(img.width, img.height);
    gy = Plane(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        int yu = std::max(y - 1, 0);
        int yd = std::min(y + 1, img.height - 1);
        for (int x = 0; x < img.width; ++x) {
            int xl = std::max(x - 1, 0);
            int xr = std::min(x + 1, img.width - 1);
            gx.at(x, y) = 0.5f * (img.at(xr, y) - img.at(xl, y));
            gy.at(x, y) = 0.5f * (img.at(x, yd) - img.at(x, yu));
        }
    }
}

std::vector<Level> build_pyramid(const Frame& prev, const Frame& next, int levels) {
    std::vector<Level> pyramid(static_cast<std::size_t>(levels));
    Plane p = to_plane(prev);
    Plane n = to_plane(next);
    for (int l = 0; l < levels; ++l) {
        if (l > 0) {
            p = downsample(p);
            n = downsample(n);
        }
        auto& level = pyramid[static_cast<std::size_t>(l)];
        level.prev = binomial_blur(p);
        level.next = binomial_blur(n);
        central_gradients(level.prev, level.grad_x, level.grad_y);
        level.scale = std::ldexp(1.0, l);
    }
    return pyramid;
}

double texture_energy(const Level& level, double x, double y, int radius) {
    double energy = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            double gx = level.grad_x.sample(x + dx, y + dy);
            double gy = level.grad_y.sample(x + dx, y + dy);
            energy += gx * gx + gy * gy;
        }
    }
    const double n = (2.0 * radius + 1) * (2.0 * radius + 1);
    return energy / n;
}

// Iterative Lucas-Kanade refinement of `guess` at one pyramid level.
FlowVector refine(const Level& level, double x, double y, FlowVector guess, const FlowConfig& cfg) {
    const int r = cfg.window_radius;
    const int side = 2 * r + 1;
    const std::size_t count = static_cast<std::size_t>(side) * side;
    std::vector<float> tmpl(count), gxs(count), gys(count);
    double gxx = 0, gxy = 0, gyy = 0;
    std::size_t k = 0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx, ++k) {
            tmpl[k] = level.prev.sample(x + dx, y + dy);
            gxs[k] = level.grad_x.sample(x + dx, y + dy);
            gys[k] = level.grad_y.sample(x + dx, y + dy);
            gxx += double(gxs[k]) * gxs[k];
            gxy += double(gxs[k]) * gys[k];
            gyy += double(gys[k]) * gys[k];
        }
    }
    const double trace = gxx + gyy;
    if (trace <= 1e-9) {
        return guess;
    }
    // Tikhonov term keeps aperture-limited windows solvable (normal flow)
    const double ridge = 1e-3 * trace;
    const double a = gxx + ridge;
    const double c = gyy + ridge;
    const double det = a * c - gxy * gxy;

    FlowVector v{0.0, 0.0};
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double bx = 0, by = 0;
        k = 0;
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx, ++k) {
                double warped = level.next.sample(x + dx + guess.u + v.u, y + dy + guess.v + v.v);
                double diff = tmpl[k] - warped;
                bx += diff * gxs[k];
                by += diff * gys[k];
            }
        }
        double du = (c * bx - gxy * by) / det;
        double dv = (a * by - gxy * bx) / det;
        v.u += du;
        v.v += dv;
        if (du * du + dv * dv < cfg.convergence * cfg.convergence) {
            break;
        }
    }
    return {guess.u + v.u, guess.v + v.v};
}

}  // namespace

FlowField make_flow_grid(int width, int height, int grid_spacing) {
    if (grid_spacing < 1) {
        throw InvalidArgument("grid_spacing must be >= 1");
    }
    FlowField field;
    field.grid_spacing = grid_spacing;
    field.cols = std::max(width / grid_spacing, 1);
    field.rows = std::max(height / grid_spacing, 1);
    field.origin_x = (width - 1 - (field.cols - 1) * static_cast<double>(grid_spacing)) / 2.0;
    field.origin_y = (height - 1 - (field.rows - 1) * static_cast<double>(grid_spacing)) / 2.0;
    field.vectors.assign(static_cast<std::size_t>(field.cols) * field.rows, FlowVector{});
    return field;
}

FlowField dense_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg) {
    if (prev.width != next.width || prev.height != next.height) {
        throw InvalidArgument("dense_flow: frame dimensions differ");
    }
    if (cfg.pyramid_levels < 1 || cfg.window_radius < 1) {
        throw InvalidArgument("dense_flow: pyramid_levels and window_radius must be >= 1");
    }
    FlowField field = make_flow_grid(prev.width, prev.height, cfg.grid_spacing);
    if (prev.pixels == next.pixels) {
        return field;
    }

    // coarsest level must keep at least a few pixels
    int levels = cfg.pyramid_levels;
    while (levels > 1 && (std::min(prev.width, prev.height) >> (levels - 1)) < 8) {
        --levels;
    }
    const auto pyramid = build_pyramid(prev, next, levels);

    for (int r = 0; r < field.rows; ++r) {
        for (int c = 0; c < field.cols; ++c) {
            const double x0 = field.node_x(c);
            const double y0 = field.node_y(r);
            if (texture_energy(pyramid.front(), x0, y0, cfg.window_radius) < cfg.min_texture) {
                continue;
            }
            FlowVector guess{0.0, 0.0};
            for (int l = levels - 1; l >= 0; --l) {
                const auto& level = pyramid[static_cast<std::size_t>(l)];
                const double x = (x0 + 0.5) / level.scale - 0.5;
                const double y = (y0 + 0.5) / level.scale - 0.5;
                guess = refine(level, x, y, guess, cfg);
                if (l > 0) {
                    guess.u *= 2.0;
                    guess.v *= 2.0;
                }
            }
            if (!std::isfinite(guess.u) || !std::isfinite(guess.v)) {
                guess = {};
            }
            field.at(c, r) = guess;
        }
    }
    return field;
}

}  // namespace motioncloud
