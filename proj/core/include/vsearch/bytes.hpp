#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsearch/error.hpp"

namespace vsearch {

/// Append-only little-endian encoder used by every on-disk format.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(static_cast<std::byte>(v)); }
    void put_u32(std::uint32_t v) { put_le(v); }
    void put_u64(std::uint64_t v) { put_le(v); }
    void put_i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
    void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
    void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void put_raw(std::string_view s) {
        const auto* p = reinterpret_cast<const std::byte*>(s.data());
        buf_.insert(buf_.end(), p, p + s.size());
    }
    void put_bytes(std::span<const std::byte> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    [[nodiscard]] std::span<const std::byte> bytes() const noexcept { return buf_; }
    [[nodiscard]] std::vector<std::byte> take() && { return std::move(buf_); }
    [[nodiscard]] std::size_t size() const noexcept { return buf_.size(); }

private:
    template <typename U>
    void put_le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
        }
    }

    std::vector<std::byte> buf_;
};

/// Bounds-checked little-endian decoder. Reading past the end throws TruncatedFile.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

    std::uint8_t get_u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t get_u32() { return get_le<std::uint32_t>(); }
    std::uint64_t get_u64() { return get_le<std::uint64_t>(); }
    std::int32_t get_i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
    float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
    double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
    std::string get_raw(std::size_t n) {
        auto s = take(n);
        return {reinterpret_cast<const char*>(s.data()), s.size()};
    }
    std::span<const std::byte> take(std::size_t n) {
        if (n > remaining()) {
            fail(ErrorCode::TruncatedFile, "unexpected end of data: need " + std::to_string(n) +
                                               " bytes, have " + std::to_string(remaining()));
        }
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

private:
    template <typename U>
    U get_le() {
        auto s = take(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(std::to_integer<std::uint8_t>(s[i])) << (8 * i);
        }
        return v;
    }

    std::span<const std::byte> data_;
    std::size_t pos_ = 0;
};

}  // namespace vsearch
