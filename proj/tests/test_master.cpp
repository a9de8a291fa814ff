#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mw/master.hpp"

using namespace mw;

namespace {

// n independent one-epoch echo tasks.
class EchoApp : public AppHooks {
public:
    explicit EchoApp(int n) : n_(n) {}

    std::vector<Bytes> setup_initial_tasks() override {
        std::vector<Bytes> out;
        for (int i = 0; i < n_; ++i) out.push_back(Bytes{static_cast<uint8_t>(i)});
        return out;
    }
    Bytes pack_worker_init_data() override { return Bytes{0xAB}; }
    std::vector<Bytes> act_on_completed_task(const TaskOutcome& outcome) override {
        return outcome.children_payloads;
    }
    bool epoch_done() override { return true; }
    std::vector<Bytes> next_epoch() override { return {}; }

    std::unique_ptr<WorkerContext> unpack_init(std::span<const uint8_t>) override {
        return std::make_unique<WorkerContext>();
    }
    ExecResult execute_task(const WorkerContext&, std::span<const uint8_t> payload) override {
        return {Bytes(payload.begin(), payload.end()), {}};
    }

private:
    int n_;
};

// Two-epoch variant: epoch 2 re-issues m tasks with a changed init blob.
class TwoEpochApp : public EchoApp {
public:
    TwoEpochApp(int n, int m) : EchoApp(n), m_(m) {}
    Bytes pack_worker_init_data() override { return Bytes{static_cast<uint8_t>(epoch_)}; }
    bool epoch_done() override { return epoch_ == 2; }
    std::vector<Bytes> next_epoch() override {
        ++epoch_;
        std::vector<Bytes> out;
        for (int i = 0; i < m_; ++i) out.push_back(Bytes{0xEE});
        return out;
    }
    int epoch_ = 1;

private:
    int m_;
};

bool holds_init(const Outbound& o) { return std::holds_alternative<wire::InitData>(o.msg); }
bool holds_assign(const Outbound& o) { return std::holds_alternative<wire::AssignTask>(o.msg); }

wire::TaskDone done_for(const Outbound& o, std::vector<Bytes> children = {}) {
    const auto& a = std::get<wire::AssignTask>(o.msg);
    return wire::TaskDone{a.task_id, a.payload, std::move(children)};
}

}  // namespace

TEST_CASE("hello with pool at threshold and pending work yields InitData then AssignTask") {
    EchoApp app(3);
    Master m({.min_workers = 1}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    CHECK(out.empty());  // no workers yet

    m.on_message(0.0, 100, wire::Hello{}, out);
    REQUIRE(out.size() == 2);
    CHECK(out[0].peer == 100);
    CHECK(holds_init(out[0]));
    CHECK(holds_assign(out[1]));
    CHECK(std::get<wire::InitData>(out[0].msg).worker_id == 1);
    CHECK(std::get<wire::InitData>(out[0].msg).blob == Bytes{0xAB});
    CHECK(std::get<wire::AssignTask>(out[1].msg).task_id == 0);
}

TEST_CASE("heartbeat refreshes the clock and produces no outbound") {
    EchoApp app(1);
    Master m({}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 5, wire::Hello{}, out);
    out.clear();

    m.on_message(2.5, 5, wire::Heartbeat{1, 2.5}, out);
    CHECK(out.empty());
    CHECK(m.last_heartbeat(1) == 2.5);
}

TEST_CASE("duplicate TaskDone is dropped and counted") {
    EchoApp app(2);
    Master m({}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 5, wire::Hello{}, out);
    auto assign = out.back();
    REQUIRE(holds_assign(assign));
    out.clear();

    m.on_message(1.0, 5, done_for(assign), out);
    CHECK(m.ledger().completed() == 1);
    out.clear();

    m.on_message(1.5, 5, done_for(assign), out);  // same task again
    CHECK(out.empty());
    CHECK(m.ledger().completed() == 1);
    CHECK(m.ledger().duplicates() == 1);
}

TEST_CASE("no dispatch before min_workers; second hello releases the queue") {
    EchoApp app(2);
    Master m({.min_workers = 2}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);

    m.on_message(0.0, 10, wire::Hello{}, out);
    REQUIRE(out.size() == 1);  // InitData only, no AssignTask yet
    CHECK(holds_init(out[0]));
    out.clear();

    m.on_message(1.0, 11, wire::Hello{}, out);
    REQUIRE(out.size() == 3);  // InitData + both queued tasks dispatched
    CHECK(holds_init(out[0]));
    CHECK(holds_assign(out[1]));
    CHECK(holds_assign(out[2]));
}

TEST_CASE("pool starved when min_workers is never met") {
    EchoApp app(2);
    Master m({.min_workers = 2, .stall_timeout_s = 5.0}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 10, wire::Hello{}, out);

    m.on_tick(4.0, out);
    CHECK(!m.failed());
    // keep the lone worker alive so only starvation can trip
    m.on_message(4.5, 10, wire::Heartbeat{1, 4.5}, out);
    m.on_tick(6.0, out);
    REQUIRE(m.failed());
    CHECK(m.failure().find("starved") != std::string::npos);
}

TEST_CASE("sweep_dead applies the multiplier rule") {
    EchoApp app(1);
    Master m({.heartbeat_s = 1.0, .death_multiplier = 3.0}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 7, wire::Hello{}, out);  // last_heartbeat = 0

    SUBCASE("alive at 2.9") {
        CHECK(m.sweep_dead(2.9).empty());
        CHECK(m.worker_state(1) != Master::WorkerState::Dead);
    }
    SUBCASE("dead at 3.1") {
        auto dead = m.sweep_dead(3.1);
        REQUIRE(dead.size() == 1);
        CHECK(dead[0] == 1);
        CHECK(m.worker_state(1) == Master::WorkerState::Dead);
    }
    SUBCASE("suspension does not exempt from death") {
        m.on_message(0.5, 7, wire::Suspend{}, out);
        CHECK(m.worker_state(1) == Master::WorkerState::Suspended);
        auto dead = m.sweep_dead(3.5);
        REQUIRE(dead.size() == 1);
        // its task went back to pending
        CHECK(m.ledger().pending_count() == 1);
        CHECK(m.ledger().reassigned() == 1);
    }
}

// Hand-traced event sequence: two workers, worker 2 evicted while busy.
// Its task is requeued and finished elsewhere; completion total is
// unaffected and exactly one reassignment is recorded.
TEST_CASE("evicted busy worker's task is requeued and finished elsewhere") {
    EchoApp app(3);
    Master m({.min_workers = 1, .heartbeat_s = 1.0, .death_multiplier = 3.0}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);

    m.on_message(0.0, 100, wire::Hello{}, out);  // worker 1, takes task 0
    m.on_message(0.0, 200, wire::Hello{}, out);  // worker 2, takes task 1
    out.clear();

    // worker 1 completes task 0, picks up task 2; worker 2 goes silent
    m.on_message(1.0, 100, done_for(Outbound{100, wire::AssignTask{0, {}, {}}}), out);
    out.clear();
    m.on_message(2.0, 100, done_for(Outbound{100, wire::AssignTask{2, {}, {}}}), out);
    out.clear();

    // heartbeats from worker 1 only
    for (double t : {1.0, 2.0, 3.0, 4.0}) m.on_message(t, 100, wire::Heartbeat{1, t}, out);

    m.on_tick(4.0, out);  // 4.0 - 0.0 >= 3.0: worker 2 dead, task 1 requeued to worker 1
    REQUIRE(out.size() == 1);
    REQUIRE(holds_assign(out[0]));
    CHECK(out[0].peer == 100);
    CHECK(std::get<wire::AssignTask>(out[0].msg).task_id == 1);
    CHECK(m.worker_state(2) == Master::WorkerState::Dead);

    m.on_message(5.0, 100, done_for(out[0]), out);
    CHECK(m.finished());
    CHECK(m.report().completed == 3);
    CHECK(m.report().reassigned == 1);
    CHECK(m.report().workers_died == 1);
    CHECK(m.report().duplicates == 0);
}

TEST_CASE("late result from a presumed-dead worker wins if it arrives first") {
    EchoApp app(1);
    Master m({.min_workers = 1}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 100, wire::Hello{}, out);
    auto assign = out.back();
    REQUIRE(holds_assign(assign));
    out.clear();

    auto dead = m.sweep_dead(10.0);
    REQUIRE(dead.size() == 1);
    CHECK(m.ledger().pending_count() == 1);

    // the "dead" worker finishes anyway before anyone else takes the task
    m.on_message(10.5, 100, done_for(assign), out);
    CHECK(m.ledger().completed() == 1);
    CHECK(m.finished());
    CHECK(m.report().reassigned == 1);
}

TEST_CASE("unknown peers and mismatched reports are dropped and counted") {
    EchoApp app(2);
    Master m({}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 100, wire::Hello{}, out);
    out.clear();

    m.on_message(1.0, 999, wire::Heartbeat{4, 1.0}, out);           // never said hello
    m.on_message(1.0, 999, wire::TaskDone{0, {}, {}}, out);         // ditto
    m.on_message(1.0, 100, wire::TaskDone{1, {}, {}}, out);         // not its task
    m.on_message(1.0, 100, wire::Heartbeat{42, 1.0}, out);          // wrong worker id
    CHECK(out.empty());
    CHECK(m.ledger().completed() == 0);

    m.on_tick(100.0, out);  // force finalize path not needed; check counter directly
    CHECK(m.report().dropped_msgs == 4);
}

TEST_CASE("epoch rollover rebroadcasts init data and continues task ids") {
    TwoEpochApp app(2, 3);
    Master m({.min_workers = 1}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 100, wire::Hello{}, out);
    auto a0 = out.back();
    out.clear();

    m.on_message(1.0, 100, done_for(a0), out);  // task 0 done, task 1 assigned
    auto a1 = out.back();
    REQUIRE(holds_assign(a1));
    out.clear();

    m.on_message(2.0, 100, done_for(a1), out);  // epoch 1 drains -> epoch 2
    // expect: InitData with the new blob, then an AssignTask for task 2
    REQUIRE(out.size() >= 2);
    REQUIRE(holds_init(out[0]));
    CHECK(std::get<wire::InitData>(out[0].msg).blob == Bytes{2});
    REQUIRE(holds_assign(out[1]));
    CHECK(std::get<wire::AssignTask>(out[1].msg).task_id == 2);

    // drain epoch 2
    auto next = out[1];
    out.clear();
    while (true) {
        m.on_message(3.0, 100, done_for(next), out);
        bool more = false;
        for (auto& o : out)
            if (holds_assign(o)) {
                next = o;
                more = true;
            }
        out.clear();
        if (!more) break;
    }
    CHECK(m.finished());
    CHECK(m.report().epochs == 2);
    CHECK(m.report().created == 5);
    CHECK(m.report().completed == 5);
}

TEST_CASE("suspended workers keep their task and get no new ones") {
    EchoApp app(3);
    Master m({.min_workers = 1}, app);
    std::vector<Outbound> out;
    m.begin(0.0, out);
    m.on_message(0.0, 100, wire::Hello{}, out);
    out.clear();

    m.on_message(0.5, 100, wire::Suspend{}, out);
    CHECK(m.worker_state(1) == Master::WorkerState::Suspended);
    CHECK(m.ledger().assigned_count() == 1);  // still holds task 0

    m.on_message(2.0, 100, wire::Resume{}, out);
    CHECK(m.worker_state(1) == Master::WorkerState::Busy);
    CHECK(out.empty());  // no double assignment while busy
}

TEST_CASE("poison task aborts once attempts exceed max_attempts") {
    EchoApp app(1);
    Master m({.min_workers = 1, .heartbeat_s = 1.0, .death_multiplier = 3.0, .max_attempts = 2},
             app);
    std::vector<Outbound> out;
    m.begin(0.0, out);

    m.on_message(0.0, 100, wire::Hello{}, out);  // attempt 1
    out.clear();
    m.on_tick(3.0, out);  // worker 1 dead, attempts -> 2 (within budget)
    CHECK(!m.failed());
    out.clear();

    m.on_message(3.0, 200, wire::Hello{}, out);  // attempt 2 dispatched
    out.clear();
    m.on_tick(6.5, out);  // worker 2 dead, attempts -> 3 > 2
    REQUIRE(m.failed());
    CHECK(m.failure().find("poison") != std::string::npos);
}
