#pragma once

#include "motioncloud/image.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace motioncloud {

struct ArchiveEntry {
    std::string name;
    std::vector<std::uint8_t> bytes;
};

/// Regular-file members of a tar (ustar/gnu) or zip (stored/deflate) archive.
std::vector<ArchiveEntry> read_archive(std::span<const std::uint8_t> bytes);

/// Image members sorted by name, decoded and resized like a clip directory.
FrameSequence sequence_from_archive(std::span<const std::uint8_t> bytes, FrameSize target = {});

/// Minimal ustar writer, used by tooling and tests.
std::vector<std::uint8_t> write_tar(std::span<const ArchiveEntry> entries);

}  // namespace motioncloud
