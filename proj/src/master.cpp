#include "mw/master.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace mw {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string RunReport::to_text() const {
    std::ostringstream os;
    os << "epochs=" << epochs << '\n'
       << "created=" << created << '\n'
       << "completed=" << completed << '\n'
       << "reassigned=" << reassigned << '\n'
       << "duplicates=" << duplicates << '\n'
       << "makespan_s=" << fmt_double(makespan_s) << '\n'
       << "workers_seen=" << workers_seen << '\n'
       << "workers_died=" << workers_died << '\n'
       << "dropped_msgs=" << dropped_msgs << '\n';
    for (const auto& [id, n] : tasks_by_worker)
        os << "worker." << id << ".completed=" << n << '\n';
    return os.str();
}

std::string RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["epochs"] = epochs;
    j["created"] = created;
    j["completed"] = completed;
    j["reassigned"] = reassigned;
    j["duplicates"] = duplicates;
    j["makespan_s"] = makespan_s;
    j["workers_seen"] = workers_seen;
    j["workers_died"] = workers_died;
    j["dropped_msgs"] = dropped_msgs;
    nlohmann::ordered_json per;
    for (const auto& [id, n] : tasks_by_worker) per[std::to_string(id)]["completed"] = n;
    j["workers"] = per;
    return j.dump(2);
}

Master::Master(MasterConfig cfg, AppHooks& app) : cfg_(cfg), app_(app) {}

void Master::begin(double now, std::vector<Outbound>& out) {
    epoch_ = 1;
    report_.epochs = 1;
    for (auto& payload : app_.setup_initial_tasks()) ledger_.submit(std::move(payload));
    init_blob_ = app_.pack_worker_init_data();
    last_progress_ = now;
    pump(now, out);
}

void Master::on_message(double now, uint64_t peer, const Message& msg,
                        std::vector<Outbound>& out) {
    if (finished_ || failed()) return;

    if (std::holds_alternative<wire::Hello>(msg)) {
        if (by_peer_.contains(peer)) {
            ++report_.dropped_msgs;  // a peer registers once
            return;
        }
        handle_hello(now, peer, out);
        pump(now, out);
        return;
    }

    auto it = by_peer_.find(peer);
    if (it == by_peer_.end()) {
        ++report_.dropped_msgs;  // message from an unregistered peer
        return;
    }
    WorkerRec& rec = workers_[it->second];

    if (const auto* hb = std::get_if<wire::Heartbeat>(&msg)) {
        if (rec.dead || hb->worker_id != it->second) {
            ++report_.dropped_msgs;
            return;
        }
        rec.last_heartbeat = now;
        ++rec.heartbeats;
        return;
    }
    if (const auto* done = std::get_if<wire::TaskDone>(&msg)) {
        handle_task_done(now, peer, *done);
        pump(now, out);
        return;
    }
    if (std::holds_alternative<wire::Suspend>(msg)) {
        if (!rec.dead) rec.suspended = true;
        return;
    }
    if (std::holds_alternative<wire::Resume>(msg)) {
        if (!rec.dead) {
            rec.suspended = false;
            rec.last_heartbeat = now;
            pump(now, out);
        }
        return;
    }
    ++report_.dropped_msgs;  // workers have no business sending anything else
}

void Master::handle_hello(double now, uint64_t peer, std::vector<Outbound>& out) {
    WorkerId id = next_worker_id_++;
    WorkerRec rec;
    rec.peer = peer;
    rec.last_heartbeat = now;
    workers_[id] = rec;
    by_peer_[peer] = id;  // a reconnecting machine shows up as a fresh peer/id
    ++report_.workers_seen;
    last_progress_ = now;
    out.push_back({peer, wire::InitData{id, cfg_.heartbeat_s, init_blob_}});
}

void Master::handle_task_done(double now, uint64_t peer, const wire::TaskDone& msg) {
    WorkerId sender = by_peer_.at(peer);
    WorkerRec& rec = workers_[sender];

    if (!ledger_.known(msg.task_id)) {
        ++report_.dropped_msgs;
        return;
    }

    // The sender is done computing either way; free it for new work unless
    // it was already written off.
    bool was_holder = !rec.dead && rec.task == msg.task_id;
    if (was_holder) rec.task.reset();
    if (!rec.dead) rec.last_heartbeat = now;

    if (ledger_.state(msg.task_id) == TaskLedger::State::Done) {
        ledger_.complete(msg.task_id, {});  // counted as duplicate, no state change
        return;
    }
    if (!rec.dead && !was_holder) {
        ++report_.dropped_msgs;  // live worker reporting a task it does not hold
        return;
    }
    if (rec.dead && rec.task_at_death != msg.task_id) {
        ++report_.dropped_msgs;
        return;
    }

    if (is_app_error_result(msg.result)) {
        // failed attempt: requeue rather than aggregate
        if (was_holder && ledger_.requeue_task(msg.task_id) && cfg_.max_attempts > 0 &&
            ledger_.attempts(msg.task_id) > cfg_.max_attempts) {
            fail("poison task " + std::to_string(msg.task_id) + ": attempts " +
                 std::to_string(ledger_.attempts(msg.task_id)) + " exceed max_attempts " +
                 std::to_string(cfg_.max_attempts));
        }
        return;
    }

    // First result wins, even from a worker presumed dead: execute_task is
    // deterministic, so any accepted copy is the same bytes.
    TaskOutcome outcome;
    outcome.id = msg.task_id;
    outcome.result_payload = msg.result;
    outcome.children_payloads = msg.children;
    std::vector<Bytes> children = app_.act_on_completed_task(outcome);
    ledger_.complete(msg.task_id, children);

    ++report_.tasks_by_worker[sender];
    last_completion_ = now;
    last_progress_ = now;
}

void Master::on_tick(double now, std::vector<Outbound>& out) {
    if (finished_ || failed()) return;
    sweep_dead(now);
    if (failed()) return;
    check_starvation(now);
    if (failed()) return;
    pump(now, out);
}

std::vector<WorkerId> Master::sweep_dead(double now) {
    std::vector<WorkerId> newly_dead;
    double timeout = cfg_.death_timeout_s();
    for (auto& [id, rec] : workers_) {
        if (rec.dead) continue;
        if (now - rec.last_heartbeat >= timeout) {
            rec.dead = true;
            rec.task_at_death = rec.task;
            rec.task.reset();
            ++report_.workers_died;
            newly_dead.push_back(id);
            for (TaskId t : ledger_.requeue_worker(id)) {
                if (cfg_.max_attempts > 0 && ledger_.attempts(t) > cfg_.max_attempts) {
                    fail("poison task " + std::to_string(t) + ": attempts " +
                         std::to_string(ledger_.attempts(t)) + " exceed max_attempts " +
                         std::to_string(cfg_.max_attempts));
                    return newly_dead;
                }
            }
        }
    }
    return newly_dead;
}

void Master::pump(double now, std::vector<Outbound>& out) {
    if (finished_ || failed()) return;
    roll_epochs(now, out);
    if (finished_ || failed()) return;
    dispatch(now, out);
}

void Master::roll_epochs(double now, std::vector<Outbound>& out) {
    // created == 0 means the app produced no tasks at all; let it conclude.
    while (!finished_ && (ledger_.all_done() || ledger_.created() == 0)) {
        if (app_.epoch_done()) {
            finished_ = true;
            finalize_report();
            for (auto& [id, rec] : workers_)
                if (!rec.dead) out.push_back({rec.peer, wire::Shutdown{}});
            return;
        }
        std::vector<Bytes> payloads = app_.next_epoch();
        if (payloads.empty()) {
            finished_ = true;
            finalize_report();
            for (auto& [id, rec] : workers_)
                if (!rec.dead) out.push_back({rec.peer, wire::Shutdown{}});
            return;
        }
        ++epoch_;
        report_.epochs = epoch_;
        for (auto& payload : payloads) ledger_.submit(std::move(payload));
        init_blob_ = app_.pack_worker_init_data();
        for (auto& [id, rec] : workers_)
            if (!rec.dead) out.push_back({rec.peer, wire::InitData{id, cfg_.heartbeat_s, init_blob_}});
        last_progress_ = now;
    }
}

void Master::dispatch(double now, std::vector<Outbound>& out) {
    if (!threshold_met_ && live_workers() >= cfg_.min_workers) threshold_met_ = true;
    if (!threshold_met_) return;

    for (auto& [id, rec] : workers_) {
        if (rec.dead || rec.suspended || rec.task) continue;
        auto spec = ledger_.next_assignable(id);
        if (!spec) break;  // nothing pending
        rec.task = spec->id;
        if (first_dispatch_ < 0) first_dispatch_ = now;
        last_progress_ = now;
        out.push_back({rec.peer, wire::AssignTask{spec->id, spec->parent, spec->payload}});
    }
}

void Master::check_starvation(double now) {
    if (cfg_.stall_timeout_s <= 0 || finished_) return;
    bool any_busy = false;
    for (auto& [id, rec] : workers_)
        if (!rec.dead && rec.task) any_busy = true;
    bool work_left = ledger_.created() == 0 || !ledger_.all_done();
    if (work_left && !any_busy && now - last_progress_ >= cfg_.stall_timeout_s) {
        fail("pool starved: no assignable worker for " + fmt_double(now - last_progress_) +
             "s with work outstanding\n" + ledger_snapshot());
    }
}

void Master::fail(std::string why) { failure_ = std::move(why); }

void Master::finalize_report() {
    report_.created = ledger_.created();
    report_.completed = ledger_.completed();
    report_.reassigned = ledger_.reassigned();
    report_.duplicates = ledger_.duplicates();
    report_.makespan_s = (first_dispatch_ < 0) ? 0.0 : last_completion_ - first_dispatch_;
}

Master::WorkerState Master::worker_state(WorkerId id) const {
    const WorkerRec& rec = workers_.at(id);
    if (rec.dead) return WorkerState::Dead;
    if (rec.suspended) return WorkerState::Suspended;
    return rec.task ? WorkerState::Busy : WorkerState::Idle;
}

size_t Master::live_workers() const {
    size_t n = 0;
    for (auto& [id, rec] : workers_)
        if (!rec.dead) ++n;
    return n;
}

std::string Master::ledger_snapshot() const {
    std::ostringstream os;
    os << "ledger: created=" << ledger_.created() << " completed=" << ledger_.completed()
       << " pending=" << ledger_.pending_count() << " assigned=" << ledger_.assigned_count()
       << " reassigned=" << ledger_.reassigned() << " epoch=" << epoch_;
    return os.str();
}

}  // namespace mw
