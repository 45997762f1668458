#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace motioncloud {

/// 8-bit grayscale raster, row-major.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Frame() = default;
    Frame(int w, int h, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool empty() const { return pixels.empty(); }
    friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameSequence {
    std::vector<Frame> frames;
    double fps = 25.0;

    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
};

struct FrameSize {
    int width = 256;
    int height = 256;
};

/// Decodes a binary PGM (P5, 8-bit) or PNG (8-bit gray/RGB/RGBA/palette)
/// held in memory. RGB input is reduced to BT.601 luma.
Frame decode_image(std::span<const std::uint8_t> bytes);
Frame read_image(const std::filesystem::path& path);

void write_pgm(const Frame& frame, const std::filesystem::path& path);
void write_png(const Frame& frame, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const Frame& frame);

/// Center-crops to the target aspect ratio, then bilinearly rescales.
/// Frames already at the target size are returned unchanged.
Frame resize_frame(const Frame& frame, FrameSize target);

/// True for file names with a supported image extension (.pgm, .png).
bool is_supported_image(const std::filesystem::path& path);

/// Validates decoded frames as one clip and resizes them to `target`.
/// Throws when fewer than two frames are present or dimensions differ.
FrameSequence make_sequence(std::vector<Frame> frames, FrameSize target);

/// Loads every supported image in `dir` in lexicographic filename order.
FrameSequence load_sequence(const std::filesystem::path& dir, FrameSize target = {});

}  // namespace motioncloud
