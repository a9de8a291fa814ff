#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mw/bytes.hpp"
#include "mw/task_ledger.hpp"

namespace mw {

// Worker-side decoded init data. Applications stash whatever execute_task
// needs (decoded grids, parameters) so a blob is unpacked once per receipt,
// not once per task.
struct WorkerContext {
    virtual ~WorkerContext() = default;
};

// Result payload a worker sends when execute_task fails (malformed payload
// and the like). The master requeues such a task as a failed attempt
// instead of aggregating it, so max_attempts caps a poison task.
inline Bytes app_error_result(const std::string& why) {
    Bytes b = {'E', 'R', 'R', '!'};
    b.insert(b.end(), why.begin(), why.end());
    return b;
}

inline bool is_app_error_result(std::span<const uint8_t> result) {
    return result.size() >= 4 && result[0] == 'E' && result[1] == 'R' && result[2] == 'R' &&
           result[3] == '!';
}

struct ExecResult {
    Bytes result;
    std::vector<Bytes> children;
};

// The hook surface an application implements to run under the master,
// a real worker, or the pool simulator.
//
// Master-side hooks (setup_initial_tasks, pack_worker_init_data,
// act_on_completed_task, epoch_done, next_epoch) are called from the
// master's event loop only. Worker-side hooks (unpack_init, execute_task)
// must be pure: the same (init blob, payload) pair yields a byte-identical
// ExecResult wherever and whenever it runs.
class AppHooks {
public:
    virtual ~AppHooks() = default;

    // --- master side ---
    virtual std::vector<Bytes> setup_initial_tasks() = 0;

    // Constant within an epoch; re-packed after next_epoch().
    virtual Bytes pack_worker_init_data() = 0;

    // Aggregates one completed task and returns the payloads of the child
    // tasks to spawn (usually outcome.children_payloads passed through).
    virtual std::vector<Bytes> act_on_completed_task(const TaskOutcome& outcome) = 0;

    // Called when the ledger drains. True ends the run; false asks for
    // another epoch via next_epoch().
    virtual bool epoch_done() = 0;

    // Initial payloads for the next epoch. Empty also ends the run.
    virtual std::vector<Bytes> next_epoch() = 0;

    // --- worker side ---
    virtual std::unique_ptr<WorkerContext> unpack_init(std::span<const uint8_t> blob) = 0;
    virtual ExecResult execute_task(const WorkerContext& ctx,
                                    std::span<const uint8_t> payload) = 0;

    // --- simulation only ---
    virtual double task_cost(std::span<const uint8_t> payload) const {
        (void)payload;
        return 1.0;
    }
};

}  // namespace mw
