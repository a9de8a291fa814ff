#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mw/bytes.hpp"
#include "radtrans/grid.hpp"
#include "radtrans/ray_tree.hpp"

namespace radtrans {

// One unit of work: trace a ray from `start` along its pixel direction
// until it splits, runs out of photons, or leaves the grid.
struct RaySegmentTask {
    RayAddress addr;
    Vec3 start;
    double photons = 0.0;
    bool operator==(const RaySegmentTask&) const = default;
};

struct SegmentResult {
    GridDelta delta;
    std::vector<RaySegmentTask> children;  // empty, or exactly four
};

// Voxel walk (Amanatides–Woo) with deterministic corner tie-breaking:
// equal boundary distances advance the lowest axis index first. Per cell
// crossed with path length dl: τ = n_H·x·σ·dl, absorbed = N·(1-e^-τ).
// Deterministic function of (grid, params, task).
SegmentResult trace_segment(const Grid& grid, const PhysicsParams& params,
                            const RaySegmentTask& task);

// Fixed little-endian payload layouts for task and result blobs.
mw::Bytes encode_segment(const RaySegmentTask& task);
std::optional<RaySegmentTask> decode_segment(std::span<const uint8_t> payload);

mw::Bytes encode_segment_result(const RayAddress& addr, const GridDelta& delta);
bool decode_segment_result(std::span<const uint8_t> payload, RayAddress& addr, GridDelta& delta);

}  // namespace radtrans
