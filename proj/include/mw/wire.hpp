#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mw/bytes.hpp"

// Framed binary protocol between master and workers.
//
// Frame layout: magic "MW" (4D 57), version u8 = 1, tag u8, body_len u32 LE,
// body. All integers little-endian, floats IEEE-754 binary64 LE, byte strings
// u32-length-prefixed, lists u32-count-prefixed, optionals u8 presence flag.

namespace mw::wire {

inline constexpr uint8_t kMagic0 = 0x4D;
inline constexpr uint8_t kMagic1 = 0x57;
inline constexpr uint8_t kVersion = 1;
inline constexpr size_t kHeaderSize = 8;
// Largest encodable body; anything bigger is an encode error.
inline constexpr uint64_t kMaxBodyLen = (uint64_t{1} << 32) - 9;

struct Hello {
    uint8_t proto_version = kVersion;
    bool operator==(const Hello&) const = default;
};

// Doubles as the hello-ack: carries the master-assigned worker id.
struct InitData {
    uint64_t worker_id = 0;
    double heartbeat_s = 0.0;
    Bytes blob;
    bool operator==(const InitData&) const = default;
};

struct AssignTask {
    uint64_t task_id = 0;
    std::optional<uint64_t> parent;
    Bytes payload;
    bool operator==(const AssignTask&) const = default;
};

struct TaskDone {
    uint64_t task_id = 0;
    Bytes result;
    std::vector<Bytes> children;
    bool operator==(const TaskDone&) const = default;
};

struct Heartbeat {
    uint64_t worker_id = 0;
    double time_s = 0.0;
    bool operator==(const Heartbeat&) const = default;
};

struct Suspend {
    bool operator==(const Suspend&) const = default;
};
struct Resume {
    bool operator==(const Resume&) const = default;
};
struct Shutdown {
    bool operator==(const Shutdown&) const = default;
};

using Message = std::variant<Hello, InitData, AssignTask, TaskDone, Heartbeat, Suspend, Resume,
                             Shutdown>;

enum class Tag : uint8_t {
    Hello = 1,
    InitData = 2,
    AssignTask = 3,
    TaskDone = 4,
    Heartbeat = 5,
    Suspend = 6,
    Resume = 7,
    Shutdown = 8,
};

enum class DecodeError {
    BadMagic,
    BadVersion,
    UnknownTag,
    Truncated,
    TrailingBytes,
};

const char* to_string(DecodeError err);

using DecodeResult = std::variant<Message, DecodeError>;

// Encodes one message as a single frame. Throws std::length_error if the
// body would exceed kMaxBodyLen.
Bytes encode(const Message& msg);

// Decodes exactly one frame; extra bytes after the body are an error.
DecodeResult decode(std::span<const uint8_t> frame);

// Incremental frame extraction from a byte stream. feed() appends bytes;
// poll() yields one decoded message per complete frame. A decode error
// poisons the reader (the connection is expected to be dropped).
class FrameReader {
public:
    void feed(std::span<const uint8_t> data);
    std::optional<DecodeResult> poll();

private:
    Bytes buf_;
    size_t pos_ = 0;  // consumed prefix of buf_
    bool poisoned_ = false;
};

}  // namespace mw::wire

namespace mw {
using wire::Message;
}
