#pragma once

#include <map>

#include "mw/hooks.hpp"
#include "mw/sim/simulator.hpp"
#include "radtrans/equilibrium.hpp"
#include "radtrans/segment.hpp"

namespace radtrans {

// Blob layout shared by pack_worker_init_data and unpack_init.
mw::Bytes pack_grid_state(const Grid& grid, const PhysicsParams& params);
bool unpack_grid_state(std::span<const uint8_t> blob, Grid& grid, PhysicsParams& params);

// Photoionization equilibrium as a master-worker application. Each epoch
// casts the full base-ray set against a frozen grid snapshot; workers
// return sparse absorption deltas plus the child segments spawned at
// splits. When the epoch drains, deltas are folded in ray-address order
// (a schedule-independent canonical order, so the final grid is
// bit-identical for any worker count or churn trace) and the neutral
// fractions are re-solved. Epochs repeat until max |Δx| < tolerance.
class StromgrenApp : public mw::AppHooks {
public:
    StromgrenApp(Grid grid, PhysicsParams params);

    // Worker-side-only instance: execute_task and unpack_init work purely
    // from the init blob, so no grid is needed up front.
    StromgrenApp() = default;

    // master side
    std::vector<mw::Bytes> setup_initial_tasks() override;
    mw::Bytes pack_worker_init_data() override;
    std::vector<mw::Bytes> act_on_completed_task(const mw::TaskOutcome& outcome) override;
    bool epoch_done() override;
    std::vector<mw::Bytes> next_epoch() override;

    // worker side
    std::unique_ptr<mw::WorkerContext> unpack_init(std::span<const uint8_t> blob) override;
    mw::ExecResult execute_task(const mw::WorkerContext& ctx,
                                std::span<const uint8_t> payload) override;

    double task_cost(std::span<const uint8_t>) const override { return task_cost_s_; }
    void set_task_cost(double s) { task_cost_s_ = s; }

    const Grid& grid() const { return grid_; }
    const PhysicsParams& params() const { return params_; }
    bool converged() const { return converged_; }
    uint32_t epochs_run() const { return epochs_run_; }
    double last_max_change() const { return last_max_change_; }
    uint64_t degenerate_tasks() const { return degenerate_tasks_; }
    const std::map<RayAddress, GridDelta>& last_epoch_deltas() const {
        return last_epoch_deltas_;
    }

private:
    std::vector<mw::Bytes> base_payloads() const;

    Grid grid_;
    PhysicsParams params_;
    double task_cost_s_ = 1.0;

    std::map<RayAddress, GridDelta> epoch_deltas_;
    std::map<RayAddress, GridDelta> last_epoch_deltas_;
    uint32_t epochs_run_ = 0;
    double last_max_change_ = 0.0;
    bool converged_ = false;
    uint64_t degenerate_tasks_ = 0;
};

struct PhotoRunResult {
    mw::sim::SimReport report;
    Grid final_grid;
    uint32_t epochs = 0;
    double final_max_change = 0.0;
    bool converged = false;
    double measured_radius = 0.0;
};

// Convenience driver: run the equilibrium iteration inside the pool
// simulator against the given availability trace.
PhotoRunResult run_photoionization(const Grid& initial, const PhysicsParams& params,
                                   const mw::MasterConfig& cfg,
                                   const mw::sim::AvailabilityTrace& trace,
                                   const mw::sim::SimOptions& opts = {},
                                   double task_cost_s = 1.0);

}  // namespace radtrans
