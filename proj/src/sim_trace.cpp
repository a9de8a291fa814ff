#include "mw/sim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mw/prng.hpp"

namespace mw::sim {

const char* to_string(AvailKind kind) {
    switch (kind) {
        case AvailKind::Join: return "join";
        case AvailKind::Suspend: return "suspend";
        case AvailKind::Resume: return "resume";
        case AvailKind::Evict: return "evict";
    }
    return "?";
}

namespace {

[[noreturn]] void bail(size_t line, const std::string& why) {
    throw std::runtime_error("trace line " + std::to_string(line) + ": " + why);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Validates per-label sequencing in simulation order: (time, label, kind).
void validate(std::vector<std::pair<AvailabilityEvent, size_t>>& tagged) {
    auto order = [](const auto& a, const auto& b) {
        if (a.first.time_s != b.first.time_s) return a.first.time_s < b.first.time_s;
        if (a.first.worker_label != b.first.worker_label)
            return a.first.worker_label < b.first.worker_label;
        if (a.first.kind != b.first.kind) return a.first.kind < b.first.kind;
        return a.second < b.second;
    };
    auto sim_order = tagged;
    std::sort(sim_order.begin(), sim_order.end(), order);

    enum class St { Absent, Up, Suspended };
    std::map<std::string, St> state;
    for (const auto& [ev, line] : sim_order) {
        St& st = state.try_emplace(ev.worker_label, St::Absent).first->second;
        switch (ev.kind) {
            case AvailKind::Join:
                if (st != St::Absent) bail(line, "'" + ev.worker_label + "' joins while present");
                st = St::Up;
                break;
            case AvailKind::Suspend:
                if (st != St::Up)
                    bail(line, "'" + ev.worker_label + "' suspends without being up");
                st = St::Suspended;
                break;
            case AvailKind::Resume:
                if (st != St::Suspended)
                    bail(line, "'" + ev.worker_label + "' resumes without a suspend");
                st = St::Up;
                break;
            case AvailKind::Evict:
                if (st == St::Absent)
                    bail(line, "'" + ev.worker_label + "' evicted without joining");
                st = St::Absent;
                break;
        }
    }
}

}  // namespace

AvailabilityTrace load_trace(std::string_view text) {
    std::vector<std::pair<AvailabilityEvent, size_t>> tagged;

    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;

        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;

        size_t c1 = body.find(',');
        size_t c2 = (c1 == std::string_view::npos) ? std::string_view::npos : body.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos)
            bail(line_no, "expected `time_s,worker_label,kind`");

        AvailabilityEvent ev;
        std::string_view time_tok = trim(body.substr(0, c1));
        const char* first = time_tok.data();
        const char* last = time_tok.data() + time_tok.size();
        auto [ptr, ec] = std::from_chars(first, last, ev.time_s);
        if (ec != std::errc{} || ptr != last) bail(line_no, "bad time value");
        if (ev.time_s < 0) bail(line_no, "negative time");

        ev.worker_label = std::string(trim(body.substr(c1 + 1, c2 - c1 - 1)));
        if (ev.worker_label.empty()) bail(line_no, "empty worker label");

        std::string_view kind = trim(body.substr(c2 + 1));
        if (kind == "join") ev.kind = AvailKind::Join;
        else if (kind == "suspend") ev.kind = AvailKind::Suspend;
        else if (kind == "resume") ev.kind = AvailKind::Resume;
        else if (kind == "evict") ev.kind = AvailKind::Evict;
        else bail(line_no, "unknown kind '" + std::string(kind) + "'");

        tagged.emplace_back(std::move(ev), line_no);
    }

    validate(tagged);

    // keep input order among equal times
    std::stable_sort(tagged.begin(), tagged.end(),
                     [](const auto& a, const auto& b) { return a.first.time_s < b.first.time_s; });

    AvailabilityTrace trace;
    trace.events.reserve(tagged.size());
    for (auto& [ev, line] : tagged) trace.events.push_back(std::move(ev));
    return trace;
}

std::string trace_to_csv(const AvailabilityTrace& trace) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& ev : trace.events)
        os << ev.time_s << ',' << ev.worker_label << ',' << to_string(ev.kind) << '\n';
    return os.str();
}

AvailabilityTrace synth_trace(const SynthParams& params) {
    AvailabilityTrace trace;
    if (params.n_workers == 0) return trace;

    double mean_down =
        params.mean_downtime_s >= 0 ? params.mean_downtime_s : params.mean_uptime_s / 2.0;
    double horizon = params.horizon_s >= 0 ? params.horizon_s : 200.0 * params.mean_uptime_s;

    for (uint32_t i = 0; i < params.n_workers; ++i) {
        // One PRNG stream per worker so n_workers can grow without
        // reshuffling earlier workers.
        SplitMix64 rng(params.seed * 0x9E3779B97F4A7C15ull + i + 1);
        char label[16];
        std::snprintf(label, sizeof label, "w%03u", i + 1);

        double t = params.join_spread_s * rng.uniform();
        trace.events.push_back({t, label, AvailKind::Join});
        if (params.mean_uptime_s <= 0) continue;  // sentinel: never evicted

        while (true) {
            double up = rng.exponential(params.mean_uptime_s);
            double evict_t = t + up;
            if (evict_t > horizon) break;  // stays up for good
            trace.events.push_back({evict_t, label, AvailKind::Evict});
            double down = rng.exponential(mean_down);
            if (down <= 0) down = 1e-9;  // rejoin strictly after the eviction
            t = evict_t + down;
            // the final event per worker must be a Join so the pool never
            // empties permanently
            trace.events.push_back({t, label, AvailKind::Join});
        }
    }

    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const auto& a, const auto& b) { return a.time_s < b.time_s; });
    return trace;
}

}  // namespace mw::sim
