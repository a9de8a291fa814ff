#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>

#include "radtrans/grid.hpp"

// Cube-map quadtree of ray directions. The sphere is covered by six
// axis-aligned faces; each face is a quadtree of pixels, and a pixel at
// `level` splits into four at `level+1`. Pixel solid angles are treated as
// uniform per level, (4π/6)/4^level: the split test only needs footprint
// control at the cell scale, not exact per-pixel areas.

namespace radtrans {

struct RayAddress {
    uint8_t face = 0;   // 0:+x 1:-x 2:+y 3:-y 4:+z 5:-z
    uint8_t level = 0;
    uint32_t ix = 0, iy = 0;  // pixel indices in [0, 2^level)

    // Lexicographic (face, level, ix, iy): the canonical aggregation order.
    auto operator<=>(const RayAddress&) const = default;
};

inline Vec3 pixel_direction(const RayAddress& a) {
    double scale = static_cast<double>(1ull << a.level);
    double u = -1.0 + (2.0 * a.ix + 1.0) / scale;
    double v = -1.0 + (2.0 * a.iy + 1.0) / scale;
    Vec3 d;
    switch (a.face) {
        case 0: d = {1.0, u, v}; break;
        case 1: d = {-1.0, u, v}; break;
        case 2: d = {u, 1.0, v}; break;
        case 3: d = {u, -1.0, v}; break;
        case 4: d = {u, v, 1.0}; break;
        default: d = {u, v, -1.0}; break;
    }
    double inv = 1.0 / std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    return {d.x * inv, d.y * inv, d.z * inv};
}

inline std::array<RayAddress, 4> children(const RayAddress& a) {
    uint8_t l = static_cast<uint8_t>(a.level + 1);
    uint32_t x = 2 * a.ix, y = 2 * a.iy;
    return {RayAddress{a.face, l, x, y}, RayAddress{a.face, l, x + 1, y},
            RayAddress{a.face, l, x, y + 1}, RayAddress{a.face, l, x + 1, y + 1}};
}

inline double pixel_solid_angle(uint32_t level) {
    return (4.0 * M_PI / 6.0) / static_cast<double>(1ull << (2 * level));
}

// Footprint test: split once r²·Ω(level) exceeds split_factor·dx².
inline bool split_check(const RayAddress& a, double r_from_source, double dx,
                        double split_factor) {
    double r2 = r_from_source * r_from_source;
    return r2 * pixel_solid_angle(a.level) > split_factor * dx * dx;
}

}  // namespace radtrans
