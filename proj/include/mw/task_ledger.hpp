#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mw/bytes.hpp"

namespace mw {

using TaskId = uint64_t;
using WorkerId = uint64_t;

struct TaskSpec {
    TaskId id = 0;
    std::optional<TaskId> parent;
    Bytes payload;
};

struct TaskOutcome {
    TaskId id = 0;
    Bytes result_payload;
    std::vector<Bytes> children_payloads;
};

// Authoritative task-state machine on the master side. Ids are dense
// ordinals in creation order: initial tasks first, then children in the
// order their parents complete. Dispatch is FIFO by id. Completion is
// counted exactly once per task; late duplicates from workers whose task
// was reassigned are dropped.
class TaskLedger {
public:
    enum class State : uint8_t { Pending, Assigned, Done };

    struct CompleteResult {
        bool accepted = false;          // false: task already Done (duplicate)
        std::vector<TaskId> children;   // spawned ids, ascending
    };

    // Creates a Pending task with the next ordinal.
    TaskId submit(Bytes payload, std::optional<TaskId> parent = std::nullopt);

    // Hands the lowest-id Pending task to `worker`, or nothing.
    std::optional<TaskSpec> next_assignable(WorkerId worker);

    // Marks `id` Done and submits one child per payload (in order). A task
    // that is Pending when its result arrives (requeued, then finished by
    // the original holder) is accepted too: first result wins.
    CompleteResult complete(TaskId id, const std::vector<Bytes>& children_payloads);

    // Returns every task assigned to `worker` to the pending queue,
    // bumping its attempt count. Result sorted ascending.
    std::vector<TaskId> requeue_worker(WorkerId worker);

    // Requeues one Assigned task (failed attempt). False if not Assigned.
    bool requeue_task(TaskId id);

    bool all_done() const { return created_ > 0 && created_ == completed_; }

    State state(TaskId id) const { return tasks_.at(id).state; }
    bool known(TaskId id) const { return id < tasks_.size(); }
    uint32_t attempts(TaskId id) const { return tasks_.at(id).attempts; }
    std::optional<WorkerId> assignee(TaskId id) const;
    const TaskSpec& spec(TaskId id) const { return tasks_.at(id).spec; }

    uint64_t created() const { return created_; }
    uint64_t completed() const { return completed_; }
    uint64_t reassigned() const { return reassigned_; }
    uint64_t duplicates() const { return duplicates_; }
    size_t pending_count() const { return pending_.size(); }
    size_t assigned_count() const;

private:
    struct Entry {
        TaskSpec spec;
        State state = State::Pending;
        WorkerId worker = 0;  // meaningful only when Assigned
        uint32_t attempts = 1;
    };

    std::vector<Entry> tasks_;   // index == TaskId
    std::set<TaskId> pending_;   // ascending; front is next to dispatch
    std::map<WorkerId, std::set<TaskId>> assigned_;
    uint64_t created_ = 0;
    uint64_t completed_ = 0;
    uint64_t reassigned_ = 0;
    uint64_t duplicates_ = 0;
};

}  // namespace mw
