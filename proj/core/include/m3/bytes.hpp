#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m3/error.hpp"

namespace m3 {

// Little-endian serialization helpers shared by the object/image/state file
// writers and the wire protocol. Strings are u32 length-prefixed.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u16(uint16_t v) {
        u8(static_cast<uint8_t>(v));
        u8(static_cast<uint8_t>(v >> 8));
    }

    void u32(uint32_t v) {
        for (int i = 0; i < 4; i++) u8(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u64(uint64_t v) {
        for (int i = 0; i < 8; i++) u8(static_cast<uint8_t>(v >> (8 * i)));
    }

    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

    void str(std::string_view s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void bytes(const void* data, size_t n) {
        const auto* p = static_cast<const uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }

    void bytes(std::span<const uint8_t> b) { bytes(b.data(), b.size()); }

    void patch_u32(size_t at, uint32_t v) {
        for (int i = 0; i < 4; i++) buf_[at + i] = static_cast<uint8_t>(v >> (8 * i));
    }

    size_t size() const { return buf_.size(); }
    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    std::vector<uint8_t> buf_;
};

// Checked reader. Every access is bounds-checked; underruns throw the error
// code the reader was constructed with, so each file format reports its own
// diagnostic kind (TruncatedFile, StateCorrupt, ProtocolError).
class ByteReader {
public:
    ByteReader(std::span<const uint8_t> data, Err underrun)
        : data_(data), underrun_(underrun) {}

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

    void seek(size_t pos) {
        if (pos > data_.size()) fail("seek past end of data");
        pos_ = pos;
    }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    int32_t i32() { return static_cast<int32_t>(u32()); }
    int64_t i64() { return static_cast<int64_t>(u64()); }

    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::vector<uint8_t> bytes(size_t n) {
        need(n);
        std::vector<uint8_t> out(data_.begin() + static_cast<ptrdiff_t>(pos_),
                                 data_.begin() + static_cast<ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(underrun_, what + " (at byte " + std::to_string(pos_) + ")");
    }

private:
    void need(size_t n) const {
        if (remaining() < n) fail("unexpected end of data");
    }

    std::span<const uint8_t> data_;
    Err underrun_;
    size_t pos_ = 0;
};

} // namespace m3
