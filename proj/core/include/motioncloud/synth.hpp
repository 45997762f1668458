#pragma once

#include "motioncloud/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace motioncloud {

/// Synthetic action kinds, each with a distinct velocity signature.
enum class ActionKind { wave, bounce, walk, run };

std::string to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& name);

struct SynthSpec {
    std::vector<ActionKind> classes{ActionKind::wave, ActionKind::bounce, ActionKind::walk, ActionKind::run};
    int clips_per_class = 12;
    int frames = 64;
    FrameSize size{256, 256};
    std::uint64_t seed = 7;
};

/// Deterministic clip for (kind, clip index) under `spec.seed`.
FrameSequence render_clip(ActionKind kind, int clip_index, const SynthSpec& spec);

/// A motionless textured scene.
FrameSequence render_static_clip(int frames, FrameSize size, std::uint64_t seed);

struct DatasetClip {
    std::string label;
    std::string clip_id;
    std::filesystem::path directory;
};

/// Writes <root>/<class>/<clip_id>/frame_%05d.pgm and <root>/manifest.json.
std::vector<DatasetClip> generate_clips(const SynthSpec& spec, const std::filesystem::path& root);

/// Reads a dataset laid out as above. The manifest is optional; without it
/// every <class>/<clip> directory is taken in lexicographic order.
std::vector<DatasetClip> load_dataset(const std::filesystem::path& root);

}  // namespace motioncloud
