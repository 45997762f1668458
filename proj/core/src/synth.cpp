#include "motioncloud/synth.hpp"

#include "motioncloud/error.hpp"
#include "motioncloud/file_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace motioncloud {

namespace fs = std::filesystem;

std::string to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::wave: return "wave";
        case ActionKind::bounce: return "bounce";
        case ActionKind::walk: return "walk";
        case ActionKind::run: return "run";
    }
    return "unknown";
}

ActionKind action_kind_from_string(const std::string& name) {
    if (name == "wave") return ActionKind::wave;
    if (name == "bounce") return ActionKind::bounce;
    if (name == "walk") return ActionKind::walk;
    if (name == "run") return ActionKind::run;
    throw InvalidArgument("unknown action kind '" + name + "'");
}

namespace {

constexpr std::uint8_t kBackground = 40;

// mt19937_64 output is fully specified; the distributions are not, so
// uniforms are derived from raw bits.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double jitter(double fraction) { return uniform(1.0 - fraction, 1.0 + fraction); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
}

// Smooth random pattern with enough gradient energy for flow estimation.
class Texture {
public:
    explicit Texture(Rng& rng) : values_(kSide * kSide) {
        for (auto& v : values_) v = rng.uniform();
        for (int pass = 0; pass < 2; ++pass) blur();
        const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
        const double span = std::max(*hi - *lo, 1e-9);
        const double base = *lo;
        for (auto& v : values_) v = 70.0 + 170.0 * (v - base) / span;
    }

    double sample(double x, double y) const {
        x = std::clamp(x, 0.0, kSide - 1.001);
        y = std::clamp(y, 0.0, kSide - 1.001);
        const int ix = static_cast<int>(x);
        const int iy = static_cast<int>(y);
        const double fx = x - ix;
        const double fy = y - iy;
        auto at = [&](int px, int py) { return values_[static_cast<std::size_t>(py) * kSide + px]; };
        return (1 - fy) * ((1 - fx) * at(ix, iy) + fx * at(ix + 1, iy)) +
               fy * ((1 - fx) * at(ix, iy + 1) + fx * at(ix + 1, iy + 1));
    }

private:
    static constexpr int kSide = 96;

    void blur() {
        std::vector<double> out(values_.size());
        for (int y = 0; y < kSide; ++y) {
            for (int x = 0; x < kSide; ++x) {
                double acc = 0.0, w = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int px = std::clamp(x + dx, 0, kSide - 1);
                        const int py = std::clamp(y + dy, 0, kSide - 1);
                        const double k = (dx == 0 ? 2.0 : 1.0) * (dy == 0 ? 2.0 : 1.0);
                        acc += k * values_[static_cast<std::size_t>(py) * kSide + px];
                        w += k;
                    }
                }
                out[static_cast<std::size_t>(y) * kSide + x] = acc / w;
            }
        }
        values_ = std::move(out);
    }

    std::vector<double> values_;
};

struct Block {
    double x;  // top-left, continuous
    double y;
    double w;
    double h;
    double tex_x = 0.0;  // texture offset
    double tex_y = 0.0;
};

double coverage(double lo, double hi, double pixel) {
    return std::clamp(std::min(pixel + 0.5, hi) - std::max(pixel - 0.5, lo), 0.0, 1.0);
}

// Draws a textured block with box-filtered edges; texture moves with the block.
void draw_block(Frame& frame, const Block& b, const Texture& tex) {
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x - 1)));
    const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(b.x + b.w + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y - 1)));
    const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(b.y + b.h + 1)));
    for (int y = y0; y <= y1; ++y) {
        const double cy = coverage(b.y, b.y + b.h, y);
        if (cy <= 0.0) continue;
        for (int x = x0; x <= x1; ++x) {
            const double a = cy * coverage(b.x, b.x + b.w, x);
            if (a <= 0.0) continue;
            const double t = tex.sample(b.tex_x + x - b.x, b.tex_y + y - b.y);
            const double v = (1.0 - a) * frame.at(x, y) + a * t;
            frame.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
}

// Position on a ping-pong path between lo and hi.
double reflect(double p, double lo, double hi) {
    const double span = hi - lo;
    double q = std::fmod(p - lo, 2.0 * span);
    if (q < 0) q += 2.0 * span;
    return q <= span ? lo + q : lo + 2.0 * span - q;
}

}  // namespace

FrameSequence render_clip(ActionKind kind, int clip_index, const SynthSpec& spec) {
    Rng rng(mix(mix(spec.seed, static_cast<std::uint64_t>(kind) + 1), static_cast<std::uint64_t>(clip_index) + 1));
    const Texture tex(rng);
    const double W = spec.size.width;
    const double H = spec.size.height;
    const double sx = W / 256.0;  // geometry is authored for 256x256
    const double sy = H / 256.0;
    constexpr double two_pi = 2.0 * std::numbers::pi;

    FrameSequence seq;
    seq.fps = 25.0;
    seq.frames.reserve(static_cast<std::size_t>(spec.frames));

    switch (kind) {
        case ActionKind::wave: {
            const double amp = 30.0 * rng.jitter(0.2) * sx;
            const double period = 16.0 * rng.jitter(0.2);
            const double phase = rng.uniform(0.0, two_pi);
            const double cx = (128.0 + rng.uniform(-20, 20)) * sx;
            const double cy = (110.0 + rng.uniform(-20, 20)) * sy;
            const double size = 44.0 * sx;
            for (int t = 0; t < spec.frames; ++t) {
                Frame f(spec.size.width, spec.size.height, kBackground);
                const double x = cx + amp * std::sin(two_pi * t / period + phase);
                draw_block(f, {x - size / 2, cy - size / 2, size, size}, tex);
                seq.frames.push_back(std::move(f));
            }
            break;
        }
        case ActionKind::bounce: {
            const double height = 90.0 * rng.jitter(0.2) * sy;
            const double period = 20.0 * rng.jitter(0.2);
            const double phase = rng.uniform(0.0, 1.0);
            const double cx = (128.0 + rng.uniform(-20, 20)) * sx;
            const double floor_y = (200.0 + rng.uniform(-10, 10)) * sy;
            const double size = 40.0 * sx;
            for (int t = 0; t < spec.frames; ++t) {
                Frame f(spec.size.width, spec.size.height, kBackground);
                double tau = std::fmod(t / period + phase, 1.0);
                const double y = floor_y - height * 4.0 * tau * (1.0 - tau);
                draw_block(f, {cx - size / 2, y - size, size, size}, tex);
                seq.frames.push_back(std::move(f));
            }
            break;
        }
        case ActionKind::walk:
        case ActionKind::run: {
            const bool walking = kind == ActionKind::walk;
            const double speed = (walking ? 2.0 : 7.5) * rng.jitter(0.1) * sx;
            const double direction = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double body_w = 40.0 * sx;
            const double body_h = 56.0 * sy;
            const double top = (90.0 + rng.uniform(-10, 10)) * sy;
            const double lo = 12.0 * sx;
            const double hi = W - 12.0 * sx - body_w;
            // path centred on the frame, same +-20 px placement jitter as the other kinds
            const double mid = (128.0 + rng.uniform(-20, 20)) * sx - body_w / 2;
            const double start = std::clamp(mid - direction * speed * (spec.frames - 1) / 2.0, lo, hi);
            const double leg_amp = 8.0 * rng.jitter(0.2) * sx;
            const double leg_period = 16.0 * rng.jitter(0.2);
            for (int t = 0; t < spec.frames; ++t) {
                Frame f(spec.size.width, spec.size.height, kBackground);
                const double x = reflect(start + direction * speed * t, lo, hi);
                draw_block(f, {x, top, body_w, body_h}, tex);
                if (walking) {
                    // counter-oscillating legs
                    const double swing = leg_amp * std::sin(two_pi * t / leg_period);
                    const double leg_w = 14.0 * sx;
                    const double leg_h = 30.0 * sy;
                    draw_block(f, {x + 4.0 * sx + swing, top + body_h, leg_w, leg_h, 10.0, 60.0}, tex);
                    draw_block(f, {x + body_w - 4.0 * sx - leg_w - swing, top + body_h, leg_w, leg_h, 60.0, 60.0}, tex);
                }
                seq.frames.push_back(std::move(f));
            }
            break;
        }
    }
    return seq;
}

FrameSequence render_static_clip(int frames, FrameSize size, std::uint64_t seed) {
    Rng rng(mix(seed, 0xC0FFEE));
    const Texture tex(rng);
    Frame f(size.width, size.height, kBackground);
    draw_block(f, {size.width * 0.35, size.height * 0.35, size.width * 0.2, size.height * 0.25}, tex);
    FrameSequence seq;
    seq.frames.assign(static_cast<std::size_t>(std::max(frames, 0)), f);
    return seq;
}

std::vector<DatasetClip> generate_clips(const SynthSpec& spec, const fs::path& root) {
    if (spec.clips_per_class < 1 || spec.frames < 2 || spec.classes.empty()) {
        throw InvalidArgument("synth: need >= 1 class, >= 1 clip per class and >= 2 frames");
    }
    std::vector<DatasetClip> clips;
    nlohmann::json manifest;
    manifest["format"] = "mcdata";
    manifest["version"] = 1;
    manifest["spec"] = {{"clips_per_class", spec.clips_per_class},
                        {"frames", spec.frames},
                        {"size", {spec.size.width, spec.size.height}},
                        {"seed", spec.seed}};
    manifest["classes"] = nlohmann::json::array();
    manifest["clips"] = nlohmann::json::array();
    for (ActionKind kind : spec.classes) {
        const std::string label = to_string(kind);
        manifest["classes"].push_back(label);
        for (int c = 0; c < spec.clips_per_class; ++c) {
            char name[32];
            std::snprintf(name, sizeof name, "%s_%03d", label.c_str(), c);
            const fs::path dir = root / label / name;
            fs::create_directories(dir);
            const FrameSequence seq = render_clip(kind, c, spec);
            for (std::size_t i = 0; i < seq.frames.size(); ++i) {
                char file[32];
                std::snprintf(file, sizeof file, "frame_%05zu.pgm", i);
                write_pgm(seq.frames[i], dir / file);
            }
            manifest["clips"].push_back({{"class", label}, {"clip_id", name}, {"index", c}});
            clips.push_back({label, name, dir});
        }
    }
    atomic_write(root / "manifest.json", manifest.dump(2));
    return clips;
}

std::vector<DatasetClip> load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw IoError("missing dataset directory: " + root.string());
    }
    std::vector<DatasetClip> clips;
    const fs::path manifest = root / "manifest.json";
    if (fs::exists(manifest)) {
        try {
            const auto doc = nlohmann::json::parse(read_text(manifest));
            for (const auto& c : doc.at("clips")) {
                const std::string label = c.at("class");
                const std::string id = c.at("clip_id");
                clips.push_back({label, id, root / label / id});
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError("dataset manifest: " + std::string(e.what()));
        }
        return clips;
    }
    std::vector<fs::path> class_dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) class_dirs.push_back(e.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    for (const auto& cls : class_dirs) {
        std::vector<fs::path> clip_dirs;
        for (const auto& e : fs::directory_iterator(cls)) {
            if (e.is_directory()) clip_dirs.push_back(e.path());
        }
        std::sort(clip_dirs.begin(), clip_dirs.end());
        for (const auto& c : clip_dirs) clips.push_back({cls.filename().string(), c.filename().string(), c});
    }
    if (clips.empty()) {
        throw IoError("dataset " + root.string() + " contains no clips");
    }
    return clips;
}

}  // namespace motioncloud
