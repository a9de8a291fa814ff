#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mw::sim {

enum class AvailKind : uint8_t { Join = 0, Suspend = 1, Resume = 2, Evict = 3 };

const char* to_string(AvailKind kind);

struct AvailabilityEvent {
    double time_s = 0.0;
    std::string worker_label;
    AvailKind kind = AvailKind::Join;
    bool operator==(const AvailabilityEvent&) const = default;
};

struct AvailabilityTrace {
    // Sorted by (time_s, input order). Per-label sequences are validated:
    // Join first, Resume only after Suspend, nothing between Evict and a
    // fresh Join (a machine may rejoin after eviction).
    std::vector<AvailabilityEvent> events;
    bool operator==(const AvailabilityTrace&) const = default;
};

// Parses CSV lines `time_s,worker_label,kind` ('#' comments and blank lines
// allowed). Throws std::runtime_error naming the offending line on parse or
// sequencing violations.
AvailabilityTrace load_trace(std::string_view text);

// Serializes back to the CSV form load_trace accepts.
std::string trace_to_csv(const AvailabilityTrace& trace);

struct SynthParams {
    uint32_t n_workers = 0;
    double join_spread_s = 1.0;   // first joins uniform in [0, spread)
    double mean_uptime_s = 0.0;   // 0 = never evict (joins only)
    uint64_t seed = 0;
    double mean_downtime_s = -1.0;  // < 0: defaults to mean_uptime/2
    double horizon_s = -1.0;        // < 0: defaults to 200 × mean_uptime
};

// Reproducible pseudo-random availability trace (splitmix64 driven, so the
// bytes are stable everywhere). Workers cycle up/down with exponential
// durations until the horizon; each worker's final event is a Join, so a
// run always retains workers eventually and can terminate.
AvailabilityTrace synth_trace(const SynthParams& params);

}  // namespace mw::sim
