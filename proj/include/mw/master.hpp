#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mw/hooks.hpp"
#include "mw/task_ledger.hpp"
#include "mw/wire.hpp"

namespace mw {

struct MasterConfig {
    uint32_t min_workers = 1;
    double heartbeat_s = 1.0;
    double death_multiplier = 3.0;  // death timeout T = multiplier × heartbeat
    uint32_t max_attempts = 0;      // 0 = unlimited
    double stall_timeout_s = 300.0; // pool-starved guard; 0 disables

    double death_timeout_s() const { return death_multiplier * heartbeat_s; }
};

struct RunReport {
    uint64_t epochs = 0;
    uint64_t created = 0;
    uint64_t completed = 0;
    uint64_t reassigned = 0;
    uint64_t duplicates = 0;
    double makespan_s = 0.0;
    uint64_t workers_seen = 0;
    uint64_t workers_died = 0;
    uint64_t dropped_msgs = 0;
    std::map<WorkerId, uint64_t> tasks_by_worker;

    std::string to_text() const;  // line-oriented key=value
    std::string to_json() const;
};

// One outbound message addressed by transport peer key.
struct Outbound {
    uint64_t peer = 0;
    Message msg;
};

// Event-driven master: registers workers, gates dispatch on a minimum pool
// size, hands out tasks lowest-id-first, sweeps dead workers by heartbeat
// timeout, requeues their tasks, and drives the application's epoch loop.
// Strictly single-threaded: callers serialize events (socket arrival order
// or virtual-time order) and deliver the produced outbound messages.
class Master {
public:
    Master(MasterConfig cfg, AppHooks& app);

    // Submits the first epoch's tasks. Call once before any event.
    void begin(double now, std::vector<Outbound>& out);

    void on_message(double now, uint64_t peer, const Message& msg, std::vector<Outbound>& out);

    // Periodic timer (every heartbeat interval): dead sweep + stall check.
    void on_tick(double now, std::vector<Outbound>& out);

    // Marks every worker whose heartbeat is older than the death timeout
    // Dead and requeues its tasks. Returns the newly dead ids, ascending.
    std::vector<WorkerId> sweep_dead(double now);

    bool finished() const { return finished_; }
    bool failed() const { return !failure_.empty(); }
    const std::string& failure() const { return failure_; }
    const RunReport& report() const { return report_; }
    const TaskLedger& ledger() const { return ledger_; }

    enum class WorkerState : uint8_t { Idle, Busy, Suspended, Dead };
    WorkerState worker_state(WorkerId id) const;
    double last_heartbeat(WorkerId id) const { return workers_.at(id).last_heartbeat; }
    uint64_t heartbeats_received(WorkerId id) const { return workers_.at(id).heartbeats; }
    size_t live_workers() const;
    std::string ledger_snapshot() const;

private:
    struct WorkerRec {
        uint64_t peer = 0;
        bool dead = false;
        bool suspended = false;
        std::optional<TaskId> task;
        std::optional<TaskId> task_at_death;  // for late results from this worker
        double last_heartbeat = 0.0;
        uint64_t heartbeats = 0;
    };

    void handle_hello(double now, uint64_t peer, std::vector<Outbound>& out);
    void handle_task_done(double now, uint64_t peer, const wire::TaskDone& msg);
    void pump(double now, std::vector<Outbound>& out);
    void roll_epochs(double now, std::vector<Outbound>& out);
    void dispatch(double now, std::vector<Outbound>& out);
    void check_starvation(double now);
    void fail(std::string why);
    void finalize_report();

    MasterConfig cfg_;
    AppHooks& app_;
    TaskLedger ledger_;

    std::map<WorkerId, WorkerRec> workers_;
    std::map<uint64_t, WorkerId> by_peer_;
    WorkerId next_worker_id_ = 1;

    Bytes init_blob_;
    uint64_t epoch_ = 0;
    bool threshold_met_ = false;
    bool finished_ = false;
    std::string failure_;

    double first_dispatch_ = -1.0;
    double last_completion_ = 0.0;
    double last_progress_ = 0.0;

    RunReport report_;
};

}  // namespace mw
