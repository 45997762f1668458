#include "motioncloud/archive.hpp"

#include "motioncloud/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <utility>

namespace motioncloud {

namespace {

constexpr std::size_t kBlock = 512;

std::uint64_t parse_octal(const std::uint8_t* p, std::size_t n) {
    // GNU base-256 for large sizes
    if (p[0] & 0x80) {
        std::uint64_t v = p[0] & 0x7F;
        for (std::size_t i = 1; i < n; ++i) v = (v << 8) | p[i];
        return v;
    }
    std::uint64_t v = 0;
    std::size_t i = 0;
    while (i < n && (p[i] == ' ' || p[i] == 0)) ++i;
    for (; i < n && p[i] >= '0' && p[i] <= '7'; ++i) v = v * 8 + (p[i] - '0');
    return v;
}

std::string field(const std::uint8_t* p, std::size_t n) {
    std::size_t len = 0;
    while (len < n && p[len] != 0) ++len;
    return {reinterpret_cast<const char*>(p), len};
}

bool zero_block(const std::uint8_t* p) {
    return std::all_of(p, p + kBlock, [](std::uint8_t b) { return b == 0; });
}

bool looks_like_tar(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kBlock) return false;
    if (std::memcmp(bytes.data() + 257, "ustar", 5) == 0) return true;
    // pre-POSIX tar: verify the header checksum
    unsigned sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : bytes[i];
    return !zero_block(bytes.data()) && sum == parse_octal(bytes.data() + 148, 8);
}

std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> bytes) {
    std::vector<ArchiveEntry> out;
    std::string long_name;
    std::size_t pos = 0;
    while (pos + kBlock <= bytes.size()) {
        const std::uint8_t* h = bytes.data() + pos;
        if (zero_block(h)) break;
        const std::uint64_t size = parse_octal(h + 124, 12);
        const char type = static_cast<char>(h[156]);
        std::string name = field(h, 100);
        const std::string prefix = field(h + 345, 155);
        if (std::memcmp(h + 257, "ustar", 5) == 0 && !prefix.empty()) name = prefix + "/" + name;
        pos += kBlock;
        if (size > bytes.size() - pos) throw InvalidArgument("archive: truncated tar member '" + name + "'");
        const auto* data = bytes.data() + pos;
        if (type == 'L') {
            long_name = field(data, static_cast<std::size_t>(size));
        } else if (type == '0' || type == '\0' || type == '7') {
            if (!long_name.empty()) name = std::exchange(long_name, {});
            out.push_back({name, {data, data + size}});
        } else {
            long_name.clear();
        }
        pos += (static_cast<std::size_t>(size) + kBlock - 1) / kBlock * kBlock;
    }
    return out;
}

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> inflate_raw(const std::uint8_t* src, std::size_t n, std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw InvalidArgument("archive: inflate init failed");
    zs.next_in = const_cast<Bytef*>(src);
    zs.avail_in = static_cast<uInt>(n);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) throw InvalidArgument("archive: corrupt deflate stream");
    return out;
}

// Walks the central directory so sizes are known even for streamed entries.
std::vector<ArchiveEntry> read_zip(std::span<const std::uint8_t> bytes) {
    const std::size_t n = bytes.size();
    if (n < 22) throw InvalidArgument("archive: truncated zip");
    std::size_t eocd = std::string::npos;
    for (std::size_t i = n - 22 + 1; i-- > (n > 22 + 65535 ? n - 22 - 65535 : 0);) {
        if (le32(bytes.data() + i) == 0x06054b50) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) throw InvalidArgument("archive: zip end-of-directory record not found");
    const std::uint16_t count = le16(bytes.data() + eocd + 10);
    std::size_t cd = le32(bytes.data() + eocd + 16);
    std::vector<ArchiveEntry> out;
    for (std::uint16_t e = 0; e < count; ++e) {
        if (cd + 46 > n || le32(bytes.data() + cd) != 0x02014b50) throw InvalidArgument("archive: corrupt zip directory");
        const std::uint8_t* c = bytes.data() + cd;
        const std::uint16_t method = le16(c + 10);
        const std::uint32_t csize = le32(c + 20);
        const std::uint32_t usize = le32(c + 24);
        const std::uint16_t name_len = le16(c + 28);
        const std::uint16_t extra_len = le16(c + 30);
        const std::uint16_t comment_len = le16(c + 32);
        const std::uint32_t local = le32(c + 42);
        if (cd + 46 + name_len > n) throw InvalidArgument("archive: corrupt zip directory");
        std::string name(reinterpret_cast<const char*>(c + 46), name_len);
        cd += 46u + name_len + extra_len + comment_len;
        if (!name.empty() && name.back() == '/') continue;

        if (local + 30 > n || le32(bytes.data() + local) != 0x04034b50) throw InvalidArgument("archive: corrupt zip entry");
        const std::size_t data = local + 30u + le16(bytes.data() + local + 26) + le16(bytes.data() + local + 28);
        if (data > n || csize > n - data) throw InvalidArgument("archive: truncated zip entry '" + name + "'");
        const std::uint8_t* p = bytes.data() + data;
        if (method == 0) {
            out.push_back({name, {p, p + csize}});
        } else if (method == 8) {
            out.push_back({name, inflate_raw(p, csize, usize)});
        } else {
            throw InvalidArgument("archive: unsupported zip compression method " + std::to_string(method));
        }
    }
    return out;
}

}  // namespace

std::vector<ArchiveEntry> read_archive(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 4 && le32(bytes.data()) == 0x04034b50) return read_zip(bytes);
    if (looks_like_tar(bytes)) return read_tar(bytes);
    throw InvalidArgument("archive: unsupported format (expected tar or zip)");
}

FrameSequence sequence_from_archive(std::span<const std::uint8_t> bytes, FrameSize target) {
    auto entries = read_archive(bytes);
    std::erase_if(entries, [](const ArchiveEntry& e) {
        const std::filesystem::path p(e.name);
        return !is_supported_image(p) || p.filename().string().starts_with(".");
    });
    if (entries.empty()) throw InvalidArgument("archive: no image members");
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::vector<Frame> frames;
    frames.reserve(entries.size());
    for (const auto& e : entries) frames.push_back(decode_image(e.bytes));
    return make_sequence(std::move(frames), target);
}

std::vector<std::uint8_t> write_tar(std::span<const ArchiveEntry> entries) {
    std::vector<std::uint8_t> out;
    auto member = [&out](const std::string& name, std::span<const std::uint8_t> bytes, char type) {
        std::uint8_t h[kBlock] = {};
        std::memcpy(h, name.data(), std::min<std::size_t>(name.size(), 99));
        std::snprintf(reinterpret_cast<char*>(h + 100), 8, "%07o", 0644u);
        std::snprintf(reinterpret_cast<char*>(h + 108), 8, "%07o", 0u);
        std::snprintf(reinterpret_cast<char*>(h + 116), 8, "%07o", 0u);
        std::snprintf(reinterpret_cast<char*>(h + 124), 12, "%011llo", static_cast<unsigned long long>(bytes.size()));
        std::snprintf(reinterpret_cast<char*>(h + 136), 12, "%011o", 0u);
        h[156] = static_cast<std::uint8_t>(type);
        std::memcpy(h + 257, "ustar", 6);
        std::memcpy(h + 263, "00", 2);
        std::memset(h + 148, ' ', 8);
        unsigned sum = 0;
        for (std::uint8_t b : h) sum += b;
        std::snprintf(reinterpret_cast<char*>(h + 148), 8, "%06o", sum);
        h[155] = ' ';
        out.insert(out.end(), h, h + kBlock);
        out.insert(out.end(), bytes.begin(), bytes.end());
        out.resize((out.size() + kBlock - 1) / kBlock * kBlock, 0);
    };
    for (const auto& e : entries) {
        if (e.name.empty()) throw InvalidArgument("write_tar: empty member name");
        if (e.name.size() >= 100) {
            // GNU long-name record carrying the NUL-terminated name
            std::vector<std::uint8_t> long_name(e.name.begin(), e.name.end());
            long_name.push_back(0);
            member("././@LongLink", long_name, 'L');
        }
        member(e.name, e.bytes, '0');
    }
    out.resize(out.size() + 2 * kBlock, 0);
    return out;
}

}  // namespace motioncloud
