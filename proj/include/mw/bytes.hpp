#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace mw {

using Bytes = std::vector<uint8_t>;

// Little-endian serializer for the fixed wire/payload layouts.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v));
        buf_.push_back(static_cast<uint8_t>(v >> 8));
    }

    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

    void raw(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    // u32 length prefix followed by the raw bytes.
    void blob(std::span<const uint8_t> data) {
        u32(static_cast<uint32_t>(data.size()));
        raw(data);
    }

    size_t size() const { return buf_.size(); }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

// Cursor over a byte span. Out-of-range reads set a sticky fail flag and
// return zeros; callers check ok() once at the end of a layout.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() {
        if (!need(1)) return 0;
        return data_[pos_++];
    }

    uint16_t u16() {
        if (!need(2)) return 0;
        uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        if (!need(4)) return 0;
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        if (!need(8)) return 0;
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    Bytes blob() {
        uint32_t len = u32();
        if (!need(len)) return {};
        Bytes out(data_.begin() + static_cast<ptrdiff_t>(pos_),
                  data_.begin() + static_cast<ptrdiff_t>(pos_ + len));
        pos_ += len;
        return out;
    }

    bool ok() const { return !fail_; }
    bool exhausted() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

private:
    bool need(size_t n) {
        if (fail_ || data_.size() - pos_ < n) {
            fail_ = true;
            return false;
        }
        return true;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    bool fail_ = false;
};

}  // namespace mw
