#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace motioncloud {

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void atomic_write(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_binary(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Exclusive advisory lock on `<target>.lock`, held for the object's lifetime.
class AdvisoryLock {
public:
    explicit AdvisoryLock(const std::filesystem::path& target);
    ~AdvisoryLock();
    AdvisoryLock(const AdvisoryLock&) = delete;
    AdvisoryLock& operator=(const AdvisoryLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace motioncloud
