#pragma once

#include "pinn/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace pinn::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and assume a little-endian host");

// FNV-1a, 64-bit; used as the trailing integrity checksum of binary files.
struct Fnv1a {
    std::uint64_t state = 14695981039346656037ull;

    void update(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state ^= bytes[i];
            state *= 1099511628211ull;
        }
    }
    [[nodiscard]] std::uint64_t digest() const { return state; }
};

// Append-only little-endian buffer; the whole payload is assembled in
// memory, checksummed, and written in one pass.
struct Writer {
    std::string buffer;

    void raw(const void* data, std::size_t size) {
        buffer.append(static_cast<const char*>(data), size);
    }
    void u8(std::uint8_t v) { raw(&v, sizeof v); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(std::string_view s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    // Appends the checksum of everything written so far.
    void seal() {
        Fnv1a hash;
        hash.update(buffer.data(), buffer.size());
        u64(hash.digest());
    }
};

struct Reader {
    std::string_view data;
    std::size_t pos = 0;

    void raw(void* out, std::size_t size) {
        if (pos + size > data.size()) throw FormatVersionMismatch("file truncated");
        std::memcpy(out, data.data() + pos, size);
        pos += size;
    }
    [[nodiscard]] std::uint8_t u8() { std::uint8_t v; raw(&v, sizeof v); return v; }
    [[nodiscard]] std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
    [[nodiscard]] std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
    [[nodiscard]] std::int64_t i64() { std::int64_t v; raw(&v, sizeof v); return v; }
    [[nodiscard]] double f64() { double v; raw(&v, sizeof v); return v; }
    [[nodiscard]] std::string str() {
        const auto size = u64();
        if (pos + size > data.size()) throw FormatVersionMismatch("file truncated");
        std::string s(data.substr(pos, size));
        pos += size;
        return s;
    }

    // Validates the trailing checksum over the preceding payload.
    void verify_checksum() {
        if (data.size() < sizeof(std::uint64_t)) throw FormatVersionMismatch("file too short");
        const std::size_t payload = data.size() - sizeof(std::uint64_t);
        Fnv1a hash;
        hash.update(data.data(), payload);
        std::uint64_t stored;
        std::memcpy(&stored, data.data() + payload, sizeof stored);
        if (stored != hash.digest()) {
            throw ChecksumMismatch("file checksum does not match its contents");
        }
        data = data.substr(0, payload);
    }
};

// Shortest round-trip decimal rendering of a double.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

[[nodiscard]] inline double parse_double(std::string_view s) {
    double v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatVersionMismatch("cannot parse '" + std::string(s) + "' as a number");
    }
    return v;
}

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace pinn::io
