#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace m3 {

// Incremental FNV-1a/64. All persistent hashes in the toolchain (declaration
// fingerprints, content hashes, package stamps) go through this so results
// are identical across platforms and processes.
struct Fnv1a {
    static constexpr uint64_t kOffset = 14695981039346656037ull;
    static constexpr uint64_t kPrime = 1099511628211ull;

    uint64_t state = kOffset;

    void update_byte(uint8_t b) {
        state ^= b;
        state *= kPrime;
    }

    void update(const void* data, size_t n) {
        const auto* p = static_cast<const uint8_t*>(data);
        for (size_t i = 0; i < n; i++) update_byte(p[i]);
    }

    void update(std::string_view s) { update(s.data(), s.size()); }

    // Little-endian byte order, independent of host.
    void update_u64(uint64_t v) {
        for (int i = 0; i < 8; i++) update_byte(static_cast<uint8_t>(v >> (8 * i)));
    }

    uint64_t digest() const { return state; }
};

inline uint64_t fnv1a(std::string_view s) {
    Fnv1a h;
    h.update(s);
    return h.digest();
}

} // namespace m3
