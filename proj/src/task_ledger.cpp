#include "mw/task_ledger.hpp"

namespace mw {

TaskId TaskLedger::submit(Bytes payload, std::optional<TaskId> parent) {
    TaskId id = tasks_.size();
    Entry e;
    e.spec = TaskSpec{id, parent, std::move(payload)};
    tasks_.push_back(std::move(e));
    pending_.insert(id);
    ++created_;
    return id;
}

std::optional<TaskSpec> TaskLedger::next_assignable(WorkerId worker) {
    if (pending_.empty()) return std::nullopt;
    TaskId id = *pending_.begin();
    pending_.erase(pending_.begin());
    Entry& e = tasks_[id];
    e.state = State::Assigned;
    e.worker = worker;
    assigned_[worker].insert(id);
    return e.spec;
}

TaskLedger::CompleteResult TaskLedger::complete(TaskId id,
                                                const std::vector<Bytes>& children_payloads) {
    Entry& e = tasks_.at(id);
    if (e.state == State::Done) {
        ++duplicates_;
        return {};
    }
    if (e.state == State::Pending) {
        pending_.erase(id);
    } else {
        auto it = assigned_.find(e.worker);
        if (it != assigned_.end()) {
            it->second.erase(id);
            if (it->second.empty()) assigned_.erase(it);
        }
    }
    e.state = State::Done;
    ++completed_;

    CompleteResult res;
    res.accepted = true;
    res.children.reserve(children_payloads.size());
    for (const auto& payload : children_payloads) res.children.push_back(submit(payload, id));
    return res;
}

std::vector<TaskId> TaskLedger::requeue_worker(WorkerId worker) {
    std::vector<TaskId> out;
    auto it = assigned_.find(worker);
    if (it == assigned_.end()) return out;
    for (TaskId id : it->second) {  // set iterates ascending
        Entry& e = tasks_[id];
        e.state = State::Pending;
        ++e.attempts;
        pending_.insert(id);
        ++reassigned_;
        out.push_back(id);
    }
    assigned_.erase(it);
    return out;
}

bool TaskLedger::requeue_task(TaskId id) {
    Entry& e = tasks_.at(id);
    if (e.state != State::Assigned) return false;
    auto it = assigned_.find(e.worker);
    if (it != assigned_.end()) {
        it->second.erase(id);
        if (it->second.empty()) assigned_.erase(it);
    }
    e.state = State::Pending;
    ++e.attempts;
    pending_.insert(id);
    ++reassigned_;
    return true;
}

std::optional<WorkerId> TaskLedger::assignee(TaskId id) const {
    const Entry& e = tasks_.at(id);
    if (e.state != State::Assigned) return std::nullopt;
    return e.worker;
}

size_t TaskLedger::assigned_count() const {
    return tasks_.size() - pending_.size() - completed_;
}

}  // namespace mw
