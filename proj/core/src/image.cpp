#include "motioncloud/image.hpp"

#include "motioncloud/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace motioncloud {

namespace fs = std::filesystem;

Frame::Frame(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) {
        throw InvalidArgument("frame dimensions must be positive");
    }
}

namespace {

std::uint8_t luma(int r, int g, int b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(y)), 0, 255));
}

bool is_pgm(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5';
}

bool is_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

class PgmReader {
public:
    explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    Frame read() {
        pos_ = 2;
        int width = next_int();
        int height = next_int();
        int maxval = next_int();
        if (width <= 0 || height <= 0) {
            throw IoError("PGM: invalid dimensions");
        }
        if (maxval <= 0 || maxval > 255) {
            throw IoError("PGM: only 8-bit images are supported");
        }
        // exactly one whitespace byte separates the header from the raster
        ++pos_;
        std::size_t count = static_cast<std::size_t>(width) * height;
        if (pos_ + count > bytes_.size()) {
            throw IoError("PGM: truncated raster");
        }
        Frame frame(width, height);
        for (std::size_t i = 0; i < count; ++i) {
            int v = bytes_[pos_ + i];
            frame.pixels[i] = maxval == 255 ? static_cast<std::uint8_t>(v)
                                            : static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
        }
        return frame;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int next_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw IoError("PGM: malformed header");
        }
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) throw IoError("PGM: header value out of range");
            ++pos_;
        }
        return static_cast<int>(value);
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

Frame decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(std::string("PNG: ") + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int width = static_cast<int>(image.width);
    const int height = static_cast<int>(image.height);
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&image, &background, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw IoError("PNG: " + msg);
    }
    Frame frame(width, height);
    if (color) {
        for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
            frame.pixels[i] = luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]);
        }
    } else {
        std::copy(buffer.begin(), buffer.end(), frame.pixels.begin());
    }
    return frame;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Frame decode_image(std::span<const std::uint8_t> bytes) {
    if (is_pgm(bytes)) {
        return PgmReader(bytes).read();
    }
    if (is_png(bytes)) {
        return decode_png(bytes);
    }
    throw IoError("unsupported image format (expected binary PGM or PNG)");
}

Frame read_image(const fs::path& path) {
    auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const IoError& e) {
        throw IoError(path.filename().string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_pgm(const Frame& frame) {
    std::string header = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
    return out;
}

void write_pgm(const Frame& frame, const fs::path& path) {
    auto bytes = encode_pgm(frame);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

void write_png(const Frame& frame, const fs::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(frame.width);
    image.height = static_cast<png_uint_32>(frame.height);
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, frame.pixels.data(), 0, nullptr)) {
        throw IoError("PNG write failed for " + path.string() + ": " + image.message);
    }
}

Frame resize_frame(const Frame& frame, FrameSize target) {
    if (target.width <= 0 || target.height <= 0) {
        throw InvalidArgument("resize target must be positive");
    }
    if (frame.width == target.width && frame.height == target.height) {
        return frame;
    }
    // largest centered window with the target aspect ratio
    double crop_w = frame.width;
    double crop_h = frame.height;
    const double target_aspect = static_cast<double>(target.width) / target.height;
    if (crop_w / crop_h > target_aspect) {
        crop_w = crop_h * target_aspect;
    } else {
        crop_h = crop_w / target_aspect;
    }
    const double x0 = (frame.width - crop_w) / 2.0;
    const double y0 = (frame.height - crop_h) / 2.0;
    const double sx = crop_w / target.width;
    const double sy = crop_h / target.height;

    Frame out(target.width, target.height);
    for (int y = 0; y < target.height; ++y) {
        double fy = std::clamp(y0 + (y + 0.5) * sy - 0.5, 0.0, frame.height - 1.0);
        int iy = std::min(static_cast<int>(fy), frame.height - 2 < 0 ? 0 : frame.height - 2);
        double wy = frame.height > 1 ? fy - iy : 0.0;
        int iy1 = std::min(iy + 1, frame.height - 1);
        for (int x = 0; x < target.width; ++x) {
            double fx = std::clamp(x0 + (x + 0.5) * sx - 0.5, 0.0, frame.width - 1.0);
            int ix = std::min(static_cast<int>(fx), frame.width - 2 < 0 ? 0 : frame.width - 2);
            double wx = frame.width > 1 ? fx - ix : 0.0;
            int ix1 = std::min(ix + 1, frame.width - 1);
            double top = (1 - wx) * frame.at(ix, iy) + wx * frame.at(ix1, iy);
            double bottom = (1 - wx) * frame.at(ix, iy1) + wx * frame.at(ix1, iy1);
            double v = (1 - wy) * top + wy * bottom;
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(v)), 0, 255));
        }
    }
    return out;
}

bool is_supported_image(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".png";
}

FrameSequence make_sequence(std::vector<Frame> frames, FrameSize target) {
    if (frames.size() < 2) {
        throw InvalidArgument("insufficient frames: a clip needs at least 2 images, got " +
                              std::to_string(frames.size()));
    }
    const int w = frames.front().width;
    const int h = frames.front().height;
    for (const auto& f : frames) {
        if (f.width != w || f.height != h) {
            throw InvalidArgument("mixed frame dimensions within one clip (" + std::to_string(w) + "x" +
                                  std::to_string(h) + " vs " + std::to_string(f.width) + "x" +
                                  std::to_string(f.height) + ")");
        }
    }
    FrameSequence seq;
    seq.frames.reserve(frames.size());
    for (auto& f : frames) {
        seq.frames.push_back(resize_frame(f, target));
    }
    return seq;
}

FrameSequence load_sequence(const fs::path& dir, FrameSize target) {
    if (!fs::is_directory(dir)) {
        throw IoError("missing clip directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_supported_image(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        frames.push_back(read_image(f));
    }
    return make_sequence(std::move(frames), target);
}

}  // namespace motioncloud
