#include "mw/wire.hpp"

#include <stdexcept>

namespace mw::wire {

const char* to_string(DecodeError err) {
    switch (err) {
        case DecodeError::BadMagic: return "bad magic";
        case DecodeError::BadVersion: return "bad version";
        case DecodeError::UnknownTag: return "unknown tag";
        case DecodeError::Truncated: return "truncated frame";
        case DecodeError::TrailingBytes: return "trailing bytes after frame";
    }
    return "unknown error";
}

namespace {

void put_optional_u64(ByteWriter& w, const std::optional<uint64_t>& v) {
    w.u8(v ? 1 : 0);
    if (v) w.u64(*v);
}

std::optional<uint64_t> get_optional_u64(ByteReader& r) {
    if (r.u8() == 0) return std::nullopt;
    return r.u64();
}

struct BodyEncoder {
    ByteWriter w;

    Tag operator()(const Hello& m) {
        w.u8(m.proto_version);
        return Tag::Hello;
    }
    Tag operator()(const InitData& m) {
        w.u64(m.worker_id);
        w.f64(m.heartbeat_s);
        w.blob(m.blob);
        return Tag::InitData;
    }
    Tag operator()(const AssignTask& m) {
        w.u64(m.task_id);
        put_optional_u64(w, m.parent);
        w.blob(m.payload);
        return Tag::AssignTask;
    }
    Tag operator()(const TaskDone& m) {
        w.u64(m.task_id);
        w.blob(m.result);
        w.u32(static_cast<uint32_t>(m.children.size()));
        for (const auto& c : m.children) w.blob(c);
        return Tag::TaskDone;
    }
    Tag operator()(const Heartbeat& m) {
        w.u64(m.worker_id);
        w.f64(m.time_s);
        return Tag::Heartbeat;
    }
    Tag operator()(const Suspend&) { return Tag::Suspend; }
    Tag operator()(const Resume&) { return Tag::Resume; }
    Tag operator()(const Shutdown&) { return Tag::Shutdown; }
};

std::optional<Message> decode_body(Tag tag, std::span<const uint8_t> body) {
    ByteReader r(body);
    Message msg;
    switch (tag) {
        case Tag::Hello: {
            Hello m;
            m.proto_version = r.u8();
            msg = m;
            break;
        }
        case Tag::InitData: {
            InitData m;
            m.worker_id = r.u64();
            m.heartbeat_s = r.f64();
            m.blob = r.blob();
            msg = m;
            break;
        }
        case Tag::AssignTask: {
            AssignTask m;
            m.task_id = r.u64();
            m.parent = get_optional_u64(r);
            m.payload = r.blob();
            msg = m;
            break;
        }
        case Tag::TaskDone: {
            TaskDone m;
            m.task_id = r.u64();
            m.result = r.blob();
            uint32_t n = r.u32();
            for (uint32_t i = 0; i < n && r.ok(); ++i) m.children.push_back(r.blob());
            msg = m;
            break;
        }
        case Tag::Heartbeat: {
            Heartbeat m;
            m.worker_id = r.u64();
            m.time_s = r.f64();
            msg = m;
            break;
        }
        case Tag::Suspend: msg = Suspend{}; break;
        case Tag::Resume: msg = Resume{}; break;
        case Tag::Shutdown: msg = Shutdown{}; break;
    }
    if (!r.ok() || !r.exhausted()) return std::nullopt;
    return msg;
}

}  // namespace

Bytes encode(const Message& msg) {
    BodyEncoder enc;
    Tag tag = std::visit(enc, msg);
    Bytes body = enc.w.take();
    if (body.size() > kMaxBodyLen) throw std::length_error("wire: message body too large");

    ByteWriter frame;
    frame.u8(kMagic0);
    frame.u8(kMagic1);
    frame.u8(kVersion);
    frame.u8(static_cast<uint8_t>(tag));
    frame.u32(static_cast<uint32_t>(body.size()));
    frame.raw(body);
    return frame.take();
}

DecodeResult decode(std::span<const uint8_t> frame) {
    if (frame.size() < kHeaderSize) return DecodeError::Truncated;
    if (frame[0] != kMagic0 || frame[1] != kMagic1) return DecodeError::BadMagic;
    if (frame[2] != kVersion) return DecodeError::BadVersion;
    uint8_t tag = frame[3];
    if (tag < static_cast<uint8_t>(Tag::Hello) || tag > static_cast<uint8_t>(Tag::Shutdown))
        return DecodeError::UnknownTag;

    uint32_t body_len = 0;
    for (int i = 0; i < 4; ++i) body_len |= static_cast<uint32_t>(frame[4 + i]) << (8 * i);
    if (frame.size() - kHeaderSize < body_len) return DecodeError::Truncated;
    if (frame.size() - kHeaderSize > body_len) return DecodeError::TrailingBytes;

    auto msg = decode_body(static_cast<Tag>(tag), frame.subspan(kHeaderSize, body_len));
    if (!msg) return DecodeError::Truncated;
    return *msg;
}

void FrameReader::feed(std::span<const uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<DecodeResult> FrameReader::poll() {
    if (poisoned_) return std::nullopt;
    // Compact once the consumed prefix dominates the buffer.
    if (pos_ > 4096 && pos_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(pos_));
        pos_ = 0;
    }
    size_t avail = buf_.size() - pos_;
    if (avail < kHeaderSize) return std::nullopt;

    std::span<const uint8_t> head(buf_.data() + pos_, avail);
    if (head[0] != kMagic0 || head[1] != kMagic1) {
        poisoned_ = true;
        return DecodeResult{DecodeError::BadMagic};
    }
    if (head[2] != kVersion) {
        poisoned_ = true;
        return DecodeResult{DecodeError::BadVersion};
    }
    uint32_t body_len = 0;
    for (int i = 0; i < 4; ++i) body_len |= static_cast<uint32_t>(head[4 + i]) << (8 * i);
    if (avail - kHeaderSize < body_len) return std::nullopt;

    DecodeResult res = decode(head.subspan(0, kHeaderSize + body_len));
    pos_ += kHeaderSize + body_len;
    if (std::holds_alternative<DecodeError>(res)) poisoned_ = true;
    return res;
}

}  // namespace mw::wire
