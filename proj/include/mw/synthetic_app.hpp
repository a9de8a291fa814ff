#pragma once

#include "mw/bytes.hpp"
#include "mw/hooks.hpp"

namespace mw {

// Fixed batch of equal-cost tasks for scheduler benchmarks and tests.
// Each task echoes its payload; optionally every task up to `spawn_depth`
// spawns four children, exercising the dynamic task graph.
class SyntheticApp : public AppHooks {
public:
    SyntheticApp(uint64_t n_tasks, double cost_s = 1.0, uint32_t spawn_depth = 0)
        : n_tasks_(n_tasks), cost_s_(cost_s), spawn_depth_(spawn_depth) {}

    std::vector<Bytes> setup_initial_tasks() override {
        std::vector<Bytes> out;
        out.reserve(n_tasks_);
        for (uint64_t i = 0; i < n_tasks_; ++i) out.push_back(encode_payload(0, i));
        return out;
    }

    Bytes pack_worker_init_data() override { return Bytes{0x5A}; }

    std::vector<Bytes> act_on_completed_task(const TaskOutcome& outcome) override {
        ++acted_;
        return outcome.children_payloads;
    }

    bool epoch_done() override { return true; }
    std::vector<Bytes> next_epoch() override { return {}; }

    std::unique_ptr<WorkerContext> unpack_init(std::span<const uint8_t>) override {
        return std::make_unique<WorkerContext>();
    }

    ExecResult execute_task(const WorkerContext&, std::span<const uint8_t> payload) override {
        ExecResult res;
        res.result.assign(payload.begin(), payload.end());
        uint32_t depth = payload.size() >= 4 ? decode_depth(payload) : 0;
        if (depth < spawn_depth_)
            for (int i = 0; i < 4; ++i) res.children.push_back(encode_payload(depth + 1, i));
        return res;
    }

    double task_cost(std::span<const uint8_t>) const override { return cost_s_; }

    uint64_t acted() const { return acted_; }

private:
    static Bytes encode_payload(uint32_t depth, uint64_t index) {
        Bytes b(12);
        for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(depth >> (8 * i));
        for (int i = 0; i < 8; ++i) b[4 + i] = static_cast<uint8_t>(index >> (8 * i));
        return b;
    }
    static uint32_t decode_depth(std::span<const uint8_t> p) {
        uint32_t d = 0;
        for (int i = 0; i < 4; ++i) d |= static_cast<uint32_t>(p[i]) << (8 * i);
        return d;
    }

    uint64_t n_tasks_;
    double cost_s_;
    uint32_t spawn_depth_;
    uint64_t acted_ = 0;
};

}  // namespace mw
