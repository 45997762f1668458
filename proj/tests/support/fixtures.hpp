#pragma once

// Small trained model shared by the indexer, service and CLI tests.

#include "motioncloud/pipeline.hpp"
#include "motioncloud/synth.hpp"

#include <filesystem>
#include <string>

#include <unistd.h>

namespace mctest {

inline motioncloud::PipelineConfig small_config() {
    motioncloud::PipelineConfig cfg;
    cfg.frame_size = {128, 128};
    cfg.feature_side = 16;
    cfg.train_stride = 2;
    cfg.degree = 2;
    cfg.dimensions = 6;
    return cfg;
}

inline motioncloud::SynthSpec small_spec() {
    motioncloud::SynthSpec spec;
    spec.clips_per_class = 2;
    spec.frames = 24;
    spec.size = {128, 128};
    spec.seed = 5;
    return spec;
}

inline const motioncloud::ActionModel& small_model() {
    static const motioncloud::ActionModel model = [] {
        const auto cfg = small_config();
        const auto spec = small_spec();
        std::vector<motioncloud::ClipFeatures> clips;
        for (auto kind : spec.classes) {
            for (int c = 0; c < spec.clips_per_class; ++c) {
                clips.push_back(motioncloud::extract_features(motioncloud::render_clip(kind, c, spec), cfg,
                                                              motioncloud::to_string(kind) + std::to_string(c),
                                                              motioncloud::to_string(kind)));
            }
        }
        return motioncloud::train_action_model(clips, cfg);
    }();
    return model;
}

/// Concatenation of clips of the given kinds, `frames` each.
inline motioncloud::FrameSequence timeline(std::initializer_list<motioncloud::ActionKind> kinds, int frames,
                                           int clip_index = 7) {
    auto spec = small_spec();
    spec.frames = frames;
    motioncloud::FrameSequence out;
    for (auto k : kinds) {
        auto part = motioncloud::render_clip(k, clip_index, spec);
        for (auto& f : part.frames) out.frames.push_back(std::move(f));
    }
    return out;
}

struct ScratchDir {
    std::filesystem::path path;
    explicit ScratchDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("mc_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() { std::filesystem::remove_all(path); }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
};

}  // namespace mctest
