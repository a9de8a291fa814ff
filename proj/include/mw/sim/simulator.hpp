#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "mw/master.hpp"
#include "mw/sim/trace.hpp"

namespace mw::sim {

struct SimOptions {
    double msg_latency_s = 0.0;  // 0: synchronous delivery (exact oracles)
    double max_virtual_s = 0.0;  // 0: no cap; otherwise abort past this time
};

struct SimReport {
    RunReport run;
    std::map<WorkerId, double> busy_s;
    std::map<WorkerId, uint64_t> heartbeats;

    std::string to_text() const;
    std::string to_json() const;
};

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Replays an availability trace against a master and simulated workers
// under a virtual clock. Join spawns a worker (Hello at that instant);
// Suspend pauses cost accrual but not heartbeats; Evict silences a worker
// entirely so the master only learns of it via heartbeat timeout.
// Deterministic: identical inputs give identical reports and identical
// application state. Throws SimError on starvation or master failure.
SimReport simulate(const MasterConfig& cfg, AppHooks& hooks, const AvailabilityTrace& trace,
                   const SimOptions& opts = {});

}  // namespace mw::sim
