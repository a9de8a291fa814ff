#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mw/prng.hpp"
#include "mw/wire.hpp"

using namespace mw;
using namespace mw::wire;

namespace {

Bytes random_blob(SplitMix64& rng, size_t max_len) {
    Bytes b(rng.below(max_len + 1));
    for (auto& v : b) v = static_cast<uint8_t>(rng.next());
    return b;
}

Message random_message(SplitMix64& rng) {
    switch (rng.below(8)) {
        case 0: return Hello{static_cast<uint8_t>(rng.next())};
        case 1: return InitData{rng.next(), rng.uniform() * 1e6, random_blob(rng, 64)};
        case 2: {
            AssignTask m;
            m.task_id = rng.next();
            if (rng.below(2)) m.parent = rng.next();
            m.payload = random_blob(rng, 64);
            return m;
        }
        case 3: {
            TaskDone m;
            m.task_id = rng.next();
            m.result = random_blob(rng, 64);
            size_t n = rng.below(6);
            for (size_t i = 0; i < n; ++i) m.children.push_back(random_blob(rng, 32));
            return m;
        }
        case 4: return Heartbeat{rng.next(), rng.uniform() * 1e6};
        case 5: return Suspend{};
        case 6: return Resume{};
        default: return Shutdown{};
    }
}

}  // namespace

TEST_CASE("shutdown frame matches its byte-exact vector") {
    Bytes frame = encode(Shutdown{});
    Bytes expect = {0x4D, 0x57, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00};
    CHECK(frame == expect);
}

TEST_CASE("heartbeat frame: tag 5, 16-byte body, roundtrips") {
    Message m = Heartbeat{7, 1.5};
    Bytes frame = encode(m);
    CHECK(frame.size() == kHeaderSize + 16);
    CHECK(frame[3] == 5);

    auto res = decode(frame);
    REQUIRE(std::holds_alternative<Message>(res));
    CHECK(std::get<Message>(res) == m);
}

TEST_CASE("assign_task body length arithmetic") {
    AssignTask no_parent;
    no_parent.task_id = 9;
    // 8 (id) + 1 (parent flag) + 4 (payload len) = 13
    CHECK(encode(no_parent).size() == kHeaderSize + 13);

    AssignTask with_parent = no_parent;
    with_parent.parent = 3;
    // + 8 for the parent id
    CHECK(encode(with_parent).size() == kHeaderSize + 21);

    with_parent.payload = Bytes{1, 2, 3};
    CHECK(encode(with_parent).size() == kHeaderSize + 24);
}

TEST_CASE("every variant roundtrips, including empty and maximal fields") {
    std::vector<Message> cases = {
        Hello{1},
        Hello{255},
        InitData{0, 0.0, {}},
        InitData{UINT64_MAX, 1e300, Bytes{0, 1, 2, 255}},
        AssignTask{0, std::nullopt, Bytes{42}},
        AssignTask{UINT64_MAX, UINT64_MAX, {}},
        TaskDone{5, {}, {}},
        TaskDone{5, Bytes{9}, {Bytes{}, Bytes{1}, Bytes{2, 3}}},
        Heartbeat{0, -1.5},
        Suspend{},
        Resume{},
        Shutdown{},
    };
    for (const auto& m : cases) {
        auto res = decode(encode(m));
        REQUIRE(std::holds_alternative<Message>(res));
        CHECK(std::get<Message>(res) == m);
    }
}

TEST_CASE("randomized roundtrip fuzz") {
    SplitMix64 rng(0xC0FFEE);
    for (int i = 0; i < 10000; ++i) {
        Message m = random_message(rng);
        auto res = decode(encode(m));
        REQUIRE(std::holds_alternative<Message>(res));
        REQUIRE(std::get<Message>(res) == m);
    }
}

TEST_CASE("decode error taxonomy") {
    Bytes good = encode(Heartbeat{1, 2.0});

    SUBCASE("bad magic") {
        Bytes f = good;
        f[0] ^= 0xFF;
        auto res = decode(f);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res) == DecodeError::BadMagic);
    }
    SUBCASE("bad version") {
        Bytes f = good;
        f[2] = 9;
        auto res = decode(f);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res) == DecodeError::BadVersion);
    }
    SUBCASE("unknown tag") {
        Bytes f = good;
        f[3] = 99;
        auto res = decode(f);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res) == DecodeError::UnknownTag);
    }
    SUBCASE("truncated body") {
        Bytes f = good;
        f.resize(f.size() - 1);
        auto res = decode(f);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res) == DecodeError::Truncated);
    }
    SUBCASE("body_len larger than remaining bytes") {
        Bytes f = good;
        f[4] = 0xFF;  // claim a huge body
        auto res = decode(f);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res) == DecodeError::Truncated);
    }
    SUBCASE("trailing bytes") {
        Bytes f = good;
        f.push_back(0);
        auto res = decode(f);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res) == DecodeError::TrailingBytes);
    }
}

TEST_CASE("frame reader splits a concatenated stream back into the sequence") {
    SplitMix64 rng(77);
    std::vector<Message> sent;
    Bytes stream;
    for (int i = 0; i < 50; ++i) {
        Message m = random_message(rng);
        Bytes f = encode(m);
        stream.insert(stream.end(), f.begin(), f.end());
        sent.push_back(std::move(m));
    }

    SUBCASE("fed in one chunk") {
        FrameReader reader;
        reader.feed(stream);
        for (const auto& expect : sent) {
            auto res = reader.poll();
            REQUIRE(res.has_value());
            REQUIRE(std::holds_alternative<Message>(*res));
            CHECK(std::get<Message>(*res) == expect);
        }
        CHECK(!reader.poll().has_value());
    }

    SUBCASE("fed byte by byte") {
        FrameReader reader;
        size_t got = 0;
        for (uint8_t b : stream) {
            reader.feed(std::span<const uint8_t>(&b, 1));
            while (auto res = reader.poll()) {
                REQUIRE(std::holds_alternative<Message>(*res));
                CHECK(std::get<Message>(*res) == sent.at(got));
                ++got;
            }
        }
        CHECK(got == sent.size());
    }
}

TEST_CASE("frame reader poisons on garbage") {
    FrameReader reader;
    Bytes junk = {0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07};
    reader.feed(junk);
    auto res = reader.poll();
    REQUIRE(res.has_value());
    REQUIRE(std::holds_alternative<DecodeError>(*res));
    CHECK(std::get<DecodeError>(*res) == DecodeError::BadMagic);
    CHECK(!reader.poll().has_value());
}
