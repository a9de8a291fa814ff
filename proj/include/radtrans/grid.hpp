#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace radtrans {

struct Vec3 {
    double x = 0, y = 0, z = 0;
    bool operator==(const Vec3&) const = default;
};

// Cubic cell field over [0, n·dx]^3. Cell (i,j,k) spans
// [i·dx,(i+1)·dx) × [j·dx,(j+1)·dx) × [k·dx,(k+1)·dx); storage is
// x-fastest: index = i + n·(j + n·k).
struct Grid {
    uint32_t n = 0;
    double dx = 1.0;
    Vec3 source;                  // strictly inside the box
    std::vector<double> density;  // hydrogen number density per cell
    std::vector<double> neutral;  // neutral fraction per cell, in [0,1]

    size_t idx(uint32_t i, uint32_t j, uint32_t k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(n) * (j + static_cast<size_t>(n) * k);
    }
    size_t cells() const { return static_cast<size_t>(n) * n * n; }
    double extent() const { return n * dx; }

    static Grid uniform(uint32_t n, double dx, Vec3 source, double density_value,
                        double neutral0 = 1.0);
};

struct PhysicsParams {
    double source_rate = 0.0;      // ionizing photons per unit time at the source
    double cross_section = 1.0;    // photoionization cross-section
    double recombination = 1.0;    // recombination coefficient
    double cutoff_fraction = 1e-6; // drop a ray when its rate falls below
                                   // cutoff_fraction × source_rate / base rays
    double split_factor = 1.0;     // footprint threshold in the split test
    uint32_t base_level = 1;       // refinement level of the base rays
    double tolerance = 1e-4;       // equilibrium convergence on max |Δx|
    uint32_t max_epochs = 200;

    uint64_t base_ray_count() const { return 6ull << (2 * base_level); }
    double ray_cutoff() const {
        return cutoff_fraction * source_rate / static_cast<double>(base_ray_count());
    }
};

struct DeltaEntry {
    uint16_t i = 0, j = 0, k = 0;
    double absorbed = 0.0;  // photon rate deposited in this cell
    bool operator==(const DeltaEntry&) const = default;
};

// Sparse per-segment result: one entry per traversed cell with nonzero
// path length, in traversal order.
struct GridDelta {
    std::vector<DeltaEntry> entries;
    bool operator==(const GridDelta&) const = default;
};

// Per-cell accumulated absorbed photon rate for one epoch.
struct GammaField {
    uint32_t n = 0;
    std::vector<double> absorbed;

    explicit GammaField(uint32_t n_ = 0)
        : n(n_), absorbed(static_cast<size_t>(n_) * n_ * n_, 0.0) {}
};

}  // namespace radtrans
