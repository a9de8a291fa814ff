#include "radtrans/app.hpp"

#include <stdexcept>

namespace radtrans {

namespace {

struct StromgrenContext : mw::WorkerContext {
    Grid grid;
    PhysicsParams params;
};

}  // namespace

mw::Bytes pack_grid_state(const Grid& grid, const PhysicsParams& params) {
    mw::ByteWriter w;
    w.u32(grid.n);
    w.f64(grid.dx);
    w.f64(grid.source.x);
    w.f64(grid.source.y);
    w.f64(grid.source.z);
    w.f64(params.source_rate);
    w.f64(params.cross_section);
    w.f64(params.recombination);
    w.f64(params.cutoff_fraction);
    w.f64(params.split_factor);
    w.u32(params.base_level);
    w.f64(params.tolerance);
    w.u32(params.max_epochs);
    for (double v : grid.density) w.f64(v);
    for (double v : grid.neutral) w.f64(v);
    return w.take();
}

bool unpack_grid_state(std::span<const uint8_t> blob, Grid& grid, PhysicsParams& params) {
    mw::ByteReader r(blob);
    grid.n = r.u32();
    grid.dx = r.f64();
    grid.source.x = r.f64();
    grid.source.y = r.f64();
    grid.source.z = r.f64();
    params.source_rate = r.f64();
    params.cross_section = r.f64();
    params.recombination = r.f64();
    params.cutoff_fraction = r.f64();
    params.split_factor = r.f64();
    params.base_level = r.u32();
    params.tolerance = r.f64();
    params.max_epochs = r.u32();
    if (!r.ok() || grid.n == 0 || grid.n > 4096) return false;
    size_t cells = grid.cells();
    grid.density.resize(cells);
    grid.neutral.resize(cells);
    for (size_t i = 0; i < cells; ++i) grid.density[i] = r.f64();
    for (size_t i = 0; i < cells; ++i) grid.neutral[i] = r.f64();
    return r.ok() && r.exhausted();
}

StromgrenApp::StromgrenApp(Grid grid, PhysicsParams params)
    : grid_(std::move(grid)), params_(params) {}

std::vector<mw::Bytes> StromgrenApp::base_payloads() const {
    std::vector<mw::Bytes> out;
    uint32_t side = 1u << params_.base_level;
    double share = params_.source_rate / static_cast<double>(params_.base_ray_count());
    out.reserve(params_.base_ray_count());
    for (uint8_t face = 0; face < 6; ++face)
        for (uint32_t iy = 0; iy < side; ++iy)
            for (uint32_t ix = 0; ix < side; ++ix)
                out.push_back(encode_segment(
                    {{face, static_cast<uint8_t>(params_.base_level), ix, iy},
                     grid_.source,
                     share}));
    return out;
}

std::vector<mw::Bytes> StromgrenApp::setup_initial_tasks() {
    epoch_deltas_.clear();
    return base_payloads();
}

mw::Bytes StromgrenApp::pack_worker_init_data() { return pack_grid_state(grid_, params_); }

std::vector<mw::Bytes> StromgrenApp::act_on_completed_task(const mw::TaskOutcome& outcome) {
    RayAddress addr;
    GridDelta delta;
    if (!decode_segment_result(outcome.result_payload, addr, delta))
        throw std::runtime_error("malformed segment result payload");
    if (delta.entries.empty()) ++degenerate_tasks_;
    auto [it, inserted] = epoch_deltas_.emplace(addr, std::move(delta));
    if (!inserted) throw std::logic_error("duplicate ray address within an epoch");
    return outcome.children_payloads;
}

bool StromgrenApp::epoch_done() {
    GammaField gamma(grid_.n);
    // std::map iterates in ascending RayAddress order: the canonical fold
    for (const auto& [addr, delta] : epoch_deltas_) apply_delta(gamma, delta);
    EquilibriumUpdate up = equilibrium_update(grid_, gamma, params_);
    last_max_change_ = up.max_change;
    ++epochs_run_;
    last_epoch_deltas_ = std::move(epoch_deltas_);
    epoch_deltas_.clear();
    converged_ = last_max_change_ < params_.tolerance;
    return converged_ || epochs_run_ >= params_.max_epochs;
}

std::vector<mw::Bytes> StromgrenApp::next_epoch() {
    epoch_deltas_.clear();
    return base_payloads();
}

std::unique_ptr<mw::WorkerContext> StromgrenApp::unpack_init(std::span<const uint8_t> blob) {
    auto ctx = std::make_unique<StromgrenContext>();
    if (!unpack_grid_state(blob, ctx->grid, ctx->params))
        throw std::runtime_error("malformed worker init blob");
    return ctx;
}

mw::ExecResult StromgrenApp::execute_task(const mw::WorkerContext& ctx,
                                          std::span<const uint8_t> payload) {
    const auto& sc = static_cast<const StromgrenContext&>(ctx);
    auto task = decode_segment(payload);
    if (!task) throw std::runtime_error("malformed segment payload");

    SegmentResult res = trace_segment(sc.grid, sc.params, *task);
    mw::ExecResult out;
    out.result = encode_segment_result(task->addr, res.delta);
    out.children.reserve(res.children.size());
    for (const RaySegmentTask& child : res.children) out.children.push_back(encode_segment(child));
    return out;
}

PhotoRunResult run_photoionization(const Grid& initial, const PhysicsParams& params,
                                   const mw::MasterConfig& cfg,
                                   const mw::sim::AvailabilityTrace& trace,
                                   const mw::sim::SimOptions& opts, double task_cost_s) {
    StromgrenApp app(initial, params);
    app.set_task_cost(task_cost_s);
    PhotoRunResult out;
    out.report = mw::sim::simulate(cfg, app, trace, opts);
    out.final_grid = app.grid();
    out.epochs = app.epochs_run();
    out.final_max_change = app.last_max_change();
    out.converged = app.converged();
    out.measured_radius = ionized_radius(out.final_grid);
    return out;
}

}  // namespace radtrans
