#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "mw/synthetic_app.hpp"
#include "radtrans/app.hpp"

using namespace radtrans;
using mw::sim::load_trace;
using mw::sim::synth_trace;

namespace {

mw::sim::AvailabilityTrace joins_at_zero(int n) {
    std::string csv;
    for (int i = 0; i < n; ++i) csv += "0,w" + std::to_string(100 + i) + ",join\n";
    return load_trace(csv);
}

// Uniform box with the source at the center and Q chosen so the analytic
// ionized radius is n/4 cells.
std::pair<Grid, PhysicsParams> stromgren_setup(uint32_t n) {
    double mid = n / 2.0;
    Grid g = Grid::uniform(n, 1.0, {mid, mid, mid}, 1.0, 1.0);
    PhysicsParams p;
    double r = n / 4.0;
    p.source_rate = 4.0 * M_PI / 3.0 * r * r * r;
    p.cross_section = 1.0;
    p.recombination = 1.0;
    return {g, p};
}

bool grids_identical(const Grid& a, const Grid& b) {
    return a.n == b.n && a.neutral.size() == b.neutral.size() &&
           std::memcmp(a.neutral.data(), b.neutral.data(),
                       a.neutral.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("init blob roundtrips") {
    auto [g, p] = stromgren_setup(8);
    g.neutral[5] = 0.25;
    Grid g2;
    PhysicsParams p2;
    REQUIRE(unpack_grid_state(pack_grid_state(g, p), g2, p2));
    CHECK(g2.n == g.n);
    CHECK(g2.source == g.source);
    CHECK(g2.neutral == g.neutral);
    CHECK(g2.density == g.density);
    CHECK(p2.source_rate == p.source_rate);
    CHECK(p2.base_level == p.base_level);
}

TEST_CASE("zero source rate converges in one epoch to all-neutral") {
    auto [g, p] = stromgren_setup(8);
    p.source_rate = 0.0;
    auto res = run_photoionization(g, p, {.min_workers = 1}, joins_at_zero(2), {}, 0.01);
    CHECK(res.epochs == 1);
    CHECK(res.converged);
    CHECK(res.measured_radius == 0.0);
    for (double x : res.final_grid.neutral) CHECK(x == 1.0);
}

TEST_CASE("converges to a sane ionized sphere at n=8") {
    auto [g, p] = stromgren_setup(8);
    auto res = run_photoionization(g, p, {.min_workers = 1}, joins_at_zero(2), {}, 0.01);
    REQUIRE(res.converged);
    MESSAGE("n=8 epochs=", res.epochs, " tasks=", res.report.run.created,
            " measured=", res.measured_radius);
    double analytic = stromgren_radius(p.source_rate, p.recombination, 1.0);
    CHECK(res.measured_radius == doctest::Approx(analytic).epsilon(0.35));
    for (double x : res.final_grid.neutral) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("final grid is bit-identical across worker counts and churn") {
    auto [g, p] = stromgren_setup(8);
    auto one = run_photoionization(g, p, {.min_workers = 1}, joins_at_zero(1), {}, 0.01);
    auto three = run_photoionization(g, p, {.min_workers = 1}, joins_at_zero(3), {}, 0.01);
    REQUIRE(one.converged);
    REQUIRE(three.converged);
    CHECK(grids_identical(one.final_grid, three.final_grid));

    // churny pool: short uptimes against ~20s epochs
    auto trace = synth_trace({.n_workers = 3, .join_spread_s = 0.5, .mean_uptime_s = 6.0,
                              .seed = 9, .horizon_s = 3000.0});
    auto churn = run_photoionization(g, p, {.min_workers = 1, .heartbeat_s = 1.0}, trace, {}, 0.5);
    REQUIRE(churn.converged);
    CHECK(churn.report.run.reassigned >= 1);
    CHECK(grids_identical(one.final_grid, churn.final_grid));
}

TEST_CASE("every epoch re-traces the same base rays against the new snapshot") {
    auto [g, p] = stromgren_setup(8);
    StromgrenApp app(g, p);
    auto first = app.setup_initial_tasks();
    CHECK(first.size() == p.base_ray_count());
    CHECK(app.epoch_done());  // empty epoch folds to Γ=0: all neutral, converged
    auto again = app.next_epoch();
    CHECK(again == first);
}

TEST_CASE("coverage: cells inside the ionized sphere are traversed every epoch") {
    auto [g, p] = stromgren_setup(16);
    StromgrenApp app(g, p);
    app.set_task_cost(0.01);
    auto rep = mw::sim::simulate({.min_workers = 1}, app, joins_at_zero(4));
    REQUIRE(app.converged());
    MESSAGE("n=16 epochs=", app.epochs_run(), " tasks=", rep.run.created,
            " measured=", ionized_radius(app.grid()));

    std::set<std::array<uint16_t, 3>> traversed;
    for (const auto& [addr, delta] : app.last_epoch_deltas())
        for (const auto& e : delta.entries) traversed.insert({e.i, e.j, e.k});

    double radius = ionized_radius(app.grid());
    const Grid& grid = app.grid();
    size_t inside = 0, missed = 0;
    for (uint16_t i = 0; i < grid.n; ++i)
        for (uint16_t j = 0; j < grid.n; ++j)
            for (uint16_t k = 0; k < grid.n; ++k) {
                double cx = (i + 0.5) * grid.dx - grid.source.x;
                double cy = (j + 0.5) * grid.dx - grid.source.y;
                double cz = (k + 0.5) * grid.dx - grid.source.z;
                if (std::sqrt(cx * cx + cy * cy + cz * cz) < radius) {
                    ++inside;
                    if (!traversed.contains({i, j, k})) ++missed;
                }
            }
    CHECK(inside > 0);
    CHECK(missed == 0);
}

TEST_CASE("ionized radius grows monotonically with source rate") {
    double prev = -1.0;
    for (double scale : {0.5, 1.0, 2.0}) {
        auto [g, p] = stromgren_setup(8);
        p.source_rate *= scale;
        auto res = run_photoionization(g, p, {.min_workers = 1}, joins_at_zero(2), {}, 0.01);
        REQUIRE(res.converged);
        CHECK(res.measured_radius >= prev);
        prev = res.measured_radius;
    }
}

TEST_CASE("an app whose execute always fails trips the poison guard") {
    class BrokenApp : public mw::SyntheticApp {
    public:
        using SyntheticApp::SyntheticApp;
        mw::ExecResult execute_task(const mw::WorkerContext&,
                                    std::span<const uint8_t>) override {
            throw std::runtime_error("malformed payload");
        }
    };
    BrokenApp app(1, 0.5);
    CHECK_THROWS_WITH_AS(
        mw::sim::simulate({.min_workers = 1, .max_attempts = 3}, app, joins_at_zero(1)),
        doctest::Contains("poison"), mw::sim::SimError);
}

TEST_CASE("sparse deltas stay far below dense-grid traffic") {
    auto [g, p] = stromgren_setup(16);
    StromgrenApp app(g, p);
    app.set_task_cost(0.01);
    (void)mw::sim::simulate({.min_workers = 1}, app, joins_at_zero(2));

    size_t full_grid_bytes = g.cells() * sizeof(double);
    size_t total_delta_bytes = 0;
    size_t tasks = app.last_epoch_deltas().size();
    for (const auto& [addr, delta] : app.last_epoch_deltas()) {
        CHECK(delta.entries.size() <= 3 * g.n);
        total_delta_bytes += encode_segment_result(addr, delta).size();
    }
    CHECK(tasks > 0);
    CHECK(total_delta_bytes < full_grid_bytes * tasks / 10);
}
