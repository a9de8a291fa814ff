#include "radtrans/equilibrium.hpp"

#include <cmath>

namespace radtrans {

void apply_delta(GammaField& gamma, const GridDelta& delta) {
    for (const DeltaEntry& e : delta.entries)
        gamma.absorbed[static_cast<size_t>(e.i) +
                       static_cast<size_t>(gamma.n) * (e.j + static_cast<size_t>(gamma.n) * e.k)] +=
            e.absorbed;
}

GammaField fold_deltas(uint32_t n, std::span<const GridDelta* const> ordered) {
    GammaField gamma(n);
    for (const GridDelta* d : ordered) apply_delta(gamma, *d);
    return gamma;
}

double equilibrium_root(double gamma_rate, double alpha_nh) {
    if (gamma_rate <= 0) return 1.0;
    double two_a = 2.0 * alpha_nh;
    // Stable branch: the product of the quadratic's roots is 1, so take
    // 2a / ((2a+Γ) + sqrt(Γ(Γ+4a))) and avoid cancellation for large Γ.
    return two_a / ((two_a + gamma_rate) +
                    std::sqrt(gamma_rate * (gamma_rate + 2.0 * two_a)));
}

EquilibriumUpdate equilibrium_update(Grid& grid, const GammaField& gamma,
                                     const PhysicsParams& params) {
    constexpr double kNeutralFloor = 1e-30;  // avoids 0/0 in fully ionized cells
    const double cell_volume = grid.dx * grid.dx * grid.dx;
    EquilibriumUpdate up;
    for (size_t c = 0; c < grid.cells(); ++c) {
        double nh = grid.density[c];
        double neutral_density = nh * grid.neutral[c];
        if (neutral_density < kNeutralFloor) neutral_density = kNeutralFloor;
        double rate = gamma.absorbed[c] / (neutral_density * cell_volume);
        double x = equilibrium_root(rate, params.recombination * nh);
        double change = std::fabs(x - grid.neutral[c]);
        if (change > up.max_change) up.max_change = change;
        grid.neutral[c] = x;
    }
    return up;
}

double stromgren_radius(double source_rate, double recombination, double n_h) {
    return std::cbrt(3.0 * source_rate / (4.0 * M_PI * recombination * n_h * n_h));
}

double ionized_radius(const Grid& grid, double threshold) {
    size_t count = 0;
    for (double x : grid.neutral)
        if (x < threshold) ++count;
    double volume = static_cast<double>(count) * grid.dx * grid.dx * grid.dx;
    return std::cbrt(3.0 * volume / (4.0 * M_PI));
}

}  // namespace radtrans
