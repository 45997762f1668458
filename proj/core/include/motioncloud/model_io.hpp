#pragma once

#include "motioncloud/eigenspace.hpp"

#include <filesystem>

namespace motioncloud {

inline constexpr std::uint16_t kSidecarVersion = 1;

/// Persists a model as a JSON manifest plus a binary sidecar of float32
/// matrices. Each sidecar block is "MCEM", u16 version, u32 columns,
/// u32 rows, then little-endian float32 values row-major.
void save_eigen_model(const EigenModel& model, const std::filesystem::path& manifest,
                      const std::filesystem::path& sidecar);
EigenModel load_eigen_model(const std::filesystem::path& manifest, const std::filesystem::path& sidecar);

}  // namespace motioncloud
