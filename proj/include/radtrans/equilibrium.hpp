#pragma once

#include <span>

#include "radtrans/grid.hpp"

namespace radtrans {

// Adds one sparse delta into the epoch accumulator.
void apply_delta(GammaField& gamma, const GridDelta& delta);

// Folds deltas in the given order. Callers supply a canonical, schedule-
// independent order (ray-address ascending) so per-cell sums are
// bit-reproducible across worker counts and churn.
GammaField fold_deltas(uint32_t n, std::span<const GridDelta* const> ordered);

// Neutral fraction solving Γ·x = α·n_H·(1-x)²; the root in [0,1] of
// a·x² - (2a+Γ)·x + a = 0 with a = α·n_H. Γ ≤ 0 gives exactly 1.
double equilibrium_root(double gamma_rate, double alpha_nh);

struct EquilibriumUpdate {
    double max_change = 0.0;  // max |x_new - x_old| over cells
};

// Per-cell Γ = A / (max(n_H·x, 1e-30)·dx³) against the epoch-start neutral
// fractions, then replaces grid.neutral with the balance roots.
EquilibriumUpdate equilibrium_update(Grid& grid, const GammaField& gamma,
                                     const PhysicsParams& params);

// Analytic radius of the ionized sphere in uniform gas.
double stromgren_radius(double source_rate, double recombination, double n_h);

// Volume-equivalent radius of the region with neutral fraction below the
// threshold: (3·V_ion/4π)^(1/3).
double ionized_radius(const Grid& grid, double threshold = 0.5);

}  // namespace radtrans
