#include "mw/sim/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <queue>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace mw::sim {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Event classes. Worker-originated messages sort before availability
// transitions at the same instant (a heartbeat sent at the moment of
// eviction still counts), and the master's dead sweep runs last.
enum : uint8_t { kClsWorker = 0, kClsTrace = 1, kClsTick = 2 };
enum : uint8_t { kWkHeartbeat = 0, kWkFinish = 1, kWkToMaster = 2, kWkToWorker = 3 };

struct Ev {
    double t = 0;
    uint8_t cls = 0;
    uint64_t actor = 0;
    uint8_t kind = 0;
    uint64_t seq = 0;
    uint64_t gen = 0;      // validity stamp for heartbeat/finish
    size_t trace_idx = 0;  // kClsTrace
    Message msg;           // deliveries (latency mode)
};

struct EvAfter {
    bool operator()(const Ev& a, const Ev& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.cls != b.cls) return a.cls > b.cls;
        if (a.actor != b.actor) return a.actor > b.actor;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

struct SimWorker {
    uint64_t peer = 0;
    std::string label;
    bool up = true;
    bool suspended = false;
    uint64_t life_gen = 0;  // bumped on evict/shutdown: cancels heartbeats
    uint64_t exec_gen = 0;  // bumped on suspend/evict/shutdown: cancels finish

    WorkerId worker_id = 0;
    double heartbeat_s = 0;
    std::unique_ptr<WorkerContext> ctx;

    bool has_task = false;
    uint64_t task_id = 0;
    Bytes payload;
    bool executing = false;
    double finish_at = 0;
    double remaining = 0;
    double busy_start = 0;
    double busy_total = 0;
};

class Simulation {
public:
    Simulation(const MasterConfig& cfg, AppHooks& hooks, const AvailabilityTrace& trace,
               const SimOptions& opts)
        : cfg_(cfg), hooks_(hooks), trace_(trace), opts_(opts), master_(cfg, hooks) {}

    SimReport run() {
        index_labels();
        for (size_t i = 0; i < trace_.events.size(); ++i) {
            const auto& ev = trace_.events[i];
            push({ev.time_s, kClsTrace, label_rank_.at(ev.worker_label),
                  static_cast<uint8_t>(ev.kind), next_seq(), 0, i, {}});
        }
        push({0.0, kClsTick, 0, 0, next_seq(), 0, 0, {}});

        std::vector<Outbound> out;
        master_.begin(0.0, out);
        route(0.0, out);

        while (!master_.finished()) {
            if (master_.failed()) throw SimError("master failed: " + master_.failure());
            if (heap_.empty())
                throw SimError("simulation starved: no events left with work outstanding; " +
                               master_.ledger_snapshot());
            Ev ev = heap_.top();
            heap_.pop();
            now_ = ev.t;
            if (opts_.max_virtual_s > 0 && now_ > opts_.max_virtual_s)
                throw SimError("virtual time cap exceeded; " + master_.ledger_snapshot());
            dispatch_event(ev);
        }
        return collect();
    }

private:
    void index_labels() {
        std::vector<std::string> labels;
        for (const auto& ev : trace_.events) labels.push_back(ev.worker_label);
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        for (size_t i = 0; i < labels.size(); ++i) label_rank_[labels[i]] = i;
    }

    uint64_t next_seq() { return seq_++; }
    void push(Ev ev) { heap_.push(std::move(ev)); }

    void dispatch_event(const Ev& ev) {
        switch (ev.cls) {
            case kClsTrace: on_trace(trace_.events[ev.trace_idx]); break;
            case kClsTick: {
                std::vector<Outbound> out;
                master_.on_tick(now_, out);
                route(now_, out);
                if (!master_.finished() && !master_.failed())
                    push({now_ + cfg_.heartbeat_s, kClsTick, 0, 0, next_seq(), 0, 0, {}});
                break;
            }
            case kClsWorker:
                switch (ev.kind) {
                    case kWkHeartbeat: on_heartbeat_due(ev.actor, ev.gen); break;
                    case kWkFinish: on_finish_due(ev.actor, ev.gen); break;
                    case kWkToMaster: {
                        std::vector<Outbound> out;
                        master_.on_message(now_, workers_[ev.actor].peer, ev.msg, out);
                        route(now_, out);
                        break;
                    }
                    case kWkToWorker: worker_receive(ev.actor, ev.msg); break;
                }
                break;
        }
    }

    // --- availability transitions ---

    void on_trace(const AvailabilityEvent& ev) {
        switch (ev.kind) {
            case AvailKind::Join: {
                if (active_.contains(ev.worker_label))
                    throw std::logic_error("trace: '" + ev.worker_label +
                                           "' joins while already present");
                size_t idx = workers_.size();
                SimWorker w;
                w.peer = next_peer_++;
                w.label = ev.worker_label;
                by_peer_[w.peer] = idx;
                workers_.push_back(std::move(w));
                active_[ev.worker_label] = idx;
                send_to_master(idx, wire::Hello{});
                break;
            }
            case AvailKind::Suspend: {
                SimWorker& w = active_worker(ev.worker_label);
                w.suspended = true;
                if (w.executing) {
                    w.remaining = w.finish_at - now_;
                    w.busy_total += now_ - w.busy_start;
                    w.executing = false;
                    ++w.exec_gen;
                }
                send_to_master(index_of(w), wire::Suspend{});
                break;
            }
            case AvailKind::Resume: {
                SimWorker& w = active_worker(ev.worker_label);
                w.suspended = false;
                if (w.has_task && !w.executing) start_exec(index_of(w), w.remaining);
                send_to_master(index_of(w), wire::Resume{});
                break;
            }
            case AvailKind::Evict: {
                SimWorker& w = active_worker(ev.worker_label);
                if (w.executing) w.busy_total += now_ - w.busy_start;
                w.executing = false;
                w.up = false;
                ++w.life_gen;
                ++w.exec_gen;
                active_.erase(ev.worker_label);
                break;  // silent: the master learns via heartbeat timeout
            }
        }
    }

    SimWorker& active_worker(const std::string& label) {
        auto it = active_.find(label);
        if (it == active_.end())
            throw std::logic_error("trace event for inactive worker '" + label + "'");
        return workers_[it->second];
    }

    size_t index_of(const SimWorker& w) const { return &w - workers_.data(); }

    // --- worker behavior ---

    void worker_receive(size_t idx, const Message& msg) {
        SimWorker& w = workers_[idx];
        if (!w.up) return;  // sends to a vanished machine go nowhere

        if (const auto* init = std::get_if<wire::InitData>(&msg)) {
            bool first = w.worker_id == 0;
            w.worker_id = init->worker_id;
            w.heartbeat_s = init->heartbeat_s;
            w.ctx = hooks_.unpack_init(init->blob);
            if (first)
                push({now_ + w.heartbeat_s, kClsWorker, idx, kWkHeartbeat, next_seq(), w.life_gen,
                      0, {}});
            return;
        }
        if (const auto* assign = std::get_if<wire::AssignTask>(&msg)) {
            w.has_task = true;
            w.task_id = assign->task_id;
            w.payload = assign->payload;
            double cost = hooks_.task_cost(w.payload);
            if (!w.suspended) start_exec(idx, cost);
            else w.remaining = cost;
            return;
        }
        if (std::holds_alternative<wire::Shutdown>(msg)) {
            w.up = false;
            ++w.life_gen;
            ++w.exec_gen;
            return;
        }
    }

    void start_exec(size_t idx, double cost) {
        SimWorker& w = workers_[idx];
        w.executing = true;
        w.busy_start = now_;
        w.finish_at = now_ + cost;
        push({w.finish_at, kClsWorker, idx, kWkFinish, next_seq(), w.exec_gen, 0, {}});
    }

    void on_heartbeat_due(size_t idx, uint64_t gen) {
        SimWorker& w = workers_[idx];
        if (gen != w.life_gen) return;  // evicted or shut down meanwhile
        send_to_master(idx, wire::Heartbeat{w.worker_id, now_});
        push({now_ + w.heartbeat_s, kClsWorker, idx, kWkHeartbeat, next_seq(), w.life_gen, 0, {}});
    }

    void on_finish_due(size_t idx, uint64_t gen) {
        SimWorker& w = workers_[idx];
        if (gen != w.exec_gen) return;  // suspended or evicted meanwhile
        w.busy_total += now_ - w.busy_start;
        w.executing = false;
        w.has_task = false;
        ExecResult res;
        try {
            res = hooks_.execute_task(*w.ctx, w.payload);
        } catch (const std::exception& e) {
            res.result = app_error_result(e.what());
            res.children.clear();
        }
        send_to_master(idx, wire::TaskDone{w.task_id, std::move(res.result), std::move(res.children)});
    }

    // --- message plumbing ---

    void send_to_master(size_t idx, Message msg) {
        if (opts_.msg_latency_s > 0) {
            push({now_ + opts_.msg_latency_s, kClsWorker, idx, kWkToMaster, next_seq(), 0, 0,
                  std::move(msg)});
            return;
        }
        std::vector<Outbound> out;
        master_.on_message(now_, workers_[idx].peer, msg, out);
        route(now_, out);
    }

    void route(double now, const std::vector<Outbound>& out) {
        for (const auto& ob : out) {
            auto it = by_peer_.find(ob.peer);
            if (it == by_peer_.end()) continue;
            if (opts_.msg_latency_s > 0)
                push({now + opts_.msg_latency_s, kClsWorker, it->second, kWkToWorker, next_seq(),
                      0, 0, ob.msg});
            else
                worker_receive(it->second, ob.msg);
        }
    }

    SimReport collect() {
        SimReport rep;
        rep.run = master_.report();
        for (const auto& w : workers_) {
            if (w.worker_id == 0) continue;
            rep.busy_s[w.worker_id] += w.busy_total;
            rep.heartbeats[w.worker_id] = master_.heartbeats_received(w.worker_id);
        }
        return rep;
    }

    MasterConfig cfg_;
    AppHooks& hooks_;
    const AvailabilityTrace& trace_;
    SimOptions opts_;
    Master master_;

    std::priority_queue<Ev, std::vector<Ev>, EvAfter> heap_;
    std::vector<SimWorker> workers_;
    std::map<std::string, size_t> active_;
    std::map<std::string, uint64_t> label_rank_;
    std::map<uint64_t, size_t> by_peer_;
    uint64_t next_peer_ = 1;
    uint64_t seq_ = 0;
    double now_ = 0;
};

}  // namespace

std::string SimReport::to_text() const {
    std::ostringstream os;
    os << run.to_text();
    os << "tasks_completed=" << run.completed << '\n'
       << "tasks_reassigned=" << run.reassigned << '\n';
    for (const auto& [id, s] : busy_s) os << "worker." << id << ".busy_s=" << fmt_double(s) << '\n';
    for (const auto& [id, n] : heartbeats) os << "worker." << id << ".heartbeats=" << n << '\n';
    return os.str();
}

std::string SimReport::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(run.to_json());
    j["tasks_completed"] = run.completed;
    j["tasks_reassigned"] = run.reassigned;
    for (const auto& [id, s] : busy_s) j["workers"][std::to_string(id)]["busy_s"] = s;
    for (const auto& [id, n] : heartbeats) j["workers"][std::to_string(id)]["heartbeats"] = n;
    return j.dump(2);
}

SimReport simulate(const MasterConfig& cfg, AppHooks& hooks, const AvailabilityTrace& trace,
                   const SimOptions& opts) {
    Simulation sim(cfg, hooks, trace, opts);
    return sim.run();
}

}  // namespace mw::sim
