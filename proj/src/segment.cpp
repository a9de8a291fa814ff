#include "radtrans/segment.hpp"

#include <cmath>
#include <limits>

namespace radtrans {

Grid Grid::uniform(uint32_t n, double dx, Vec3 source, double density_value, double neutral0) {
    Grid g;
    g.n = n;
    g.dx = dx;
    g.source = source;
    g.density.assign(g.cells(), density_value);
    g.neutral.assign(g.cells(), neutral0);
    return g;
}

SegmentResult trace_segment(const Grid& grid, const PhysicsParams& params,
                            const RaySegmentTask& task) {
    SegmentResult out;
    const int n = static_cast<int>(grid.n);
    const double dx = grid.dx;
    const Vec3 dir = pixel_direction(task.addr);
    const double d[3] = {dir.x, dir.y, dir.z};
    const double start[3] = {task.start.x, task.start.y, task.start.z};
    const double cutoff = params.ray_cutoff();
    const double omega = pixel_solid_angle(task.addr.level);
    const double split_rhs = params.split_factor * dx * dx;

    double photons = task.photons;

    // Entry cell; a start exactly on a boundary belongs to the cell the
    // ray is entering.
    int cell[3];
    for (int a = 0; a < 3; ++a) {
        double s = start[a] / dx;
        double fl = std::floor(s);
        int c = static_cast<int>(fl);
        if (s == fl && d[a] < 0) c -= 1;
        cell[a] = c;
        if (c < 0 || c >= n) return out;  // degenerate: start outside
    }

    const double inf = std::numeric_limits<double>::infinity();
    double t_max[3], t_delta[3];
    int step[3];
    for (int a = 0; a < 3; ++a) {
        if (d[a] > 0) {
            step[a] = 1;
            t_max[a] = ((cell[a] + 1) * dx - start[a]) / d[a];
            t_delta[a] = dx / d[a];
        } else if (d[a] < 0) {
            step[a] = -1;
            t_max[a] = (cell[a] * dx - start[a]) / d[a];
            t_delta[a] = -dx / d[a];
        } else {
            step[a] = 0;
            t_max[a] = inf;
            t_delta[a] = inf;
        }
    }

    double t_prev = 0.0;
    while (true) {
        int ax = 0;
        if (t_max[1] < t_max[ax]) ax = 1;
        if (t_max[2] < t_max[ax]) ax = 2;
        double t_exit = t_max[ax];

        double dl = t_exit - t_prev;
        if (dl > 0) {
            size_t ci = grid.idx(cell[0], cell[1], cell[2]);
            double tau = grid.density[ci] * grid.neutral[ci] * params.cross_section * dl;
            double absorbed = photons * -std::expm1(-tau);
            out.delta.entries.push_back({static_cast<uint16_t>(cell[0]),
                                         static_cast<uint16_t>(cell[1]),
                                         static_cast<uint16_t>(cell[2]), absorbed});
            photons -= absorbed;
        }

        // Boundary point, with the crossed coordinate snapped onto its
        // plane so child starts sit exactly on a cell face.
        double bp[3] = {start[0] + d[0] * t_exit, start[1] + d[1] * t_exit,
                        start[2] + d[2] * t_exit};
        bp[ax] = (cell[ax] + (step[ax] > 0 ? 1 : 0)) * dx;

        bool exits = cell[ax] + step[ax] < 0 || cell[ax] + step[ax] >= n;
        if (exits) return out;  // leaves the grid: no children

        if (photons < cutoff) return out;  // exhausted: no children

        double rx = bp[0] - grid.source.x;
        double ry = bp[1] - grid.source.y;
        double rz = bp[2] - grid.source.z;
        double r2 = rx * rx + ry * ry + rz * rz;
        if (r2 * omega > split_rhs) {
            // Children continue at the split radius along their own pixel
            // directions. Re-centering each child onto its radial line is
            // what keeps every cell in the beam footprint covered; children
            // inheriting the parent's endpoint drift off their lines and
            // leave face-center cells untraversed.
            double r = std::sqrt(r2);
            double share = photons / 4.0;
            for (const RayAddress& kid : children(task.addr)) {
                Vec3 kd = pixel_direction(kid);
                Vec3 ks{grid.source.x + r * kd.x, grid.source.y + r * kd.y,
                        grid.source.z + r * kd.z};
                out.children.push_back({kid, ks, share});
            }
            return out;
        }

        cell[ax] += step[ax];
        t_max[ax] += t_delta[ax];
        t_prev = t_exit;
    }
}

mw::Bytes encode_segment(const RaySegmentTask& task) {
    mw::ByteWriter w;
    w.u8(task.addr.face);
    w.u8(task.addr.level);
    w.u32(task.addr.ix);
    w.u32(task.addr.iy);
    w.f64(task.start.x);
    w.f64(task.start.y);
    w.f64(task.start.z);
    w.f64(task.photons);
    return w.take();
}

std::optional<RaySegmentTask> decode_segment(std::span<const uint8_t> payload) {
    mw::ByteReader r(payload);
    RaySegmentTask t;
    t.addr.face = r.u8();
    t.addr.level = r.u8();
    t.addr.ix = r.u32();
    t.addr.iy = r.u32();
    t.start.x = r.f64();
    t.start.y = r.f64();
    t.start.z = r.f64();
    t.photons = r.f64();
    if (!r.ok() || !r.exhausted() || t.addr.face > 5) return std::nullopt;
    return t;
}

mw::Bytes encode_segment_result(const RayAddress& addr, const GridDelta& delta) {
    mw::ByteWriter w;
    w.u8(addr.face);
    w.u8(addr.level);
    w.u32(addr.ix);
    w.u32(addr.iy);
    w.u32(static_cast<uint32_t>(delta.entries.size()));
    for (const DeltaEntry& e : delta.entries) {
        w.u16(e.i);
        w.u16(e.j);
        w.u16(e.k);
        w.f64(e.absorbed);
    }
    return w.take();
}

bool decode_segment_result(std::span<const uint8_t> payload, RayAddress& addr, GridDelta& delta) {
    mw::ByteReader r(payload);
    addr.face = r.u8();
    addr.level = r.u8();
    addr.ix = r.u32();
    addr.iy = r.u32();
    uint32_t count = r.u32();
    delta.entries.clear();
    delta.entries.reserve(count);
    for (uint32_t i = 0; i < count && r.ok(); ++i) {
        DeltaEntry e;
        e.i = r.u16();
        e.j = r.u16();
        e.k = r.u16();
        e.absorbed = r.f64();
        delta.entries.push_back(e);
    }
    return r.ok() && r.exhausted() && addr.face <= 5;
}

}  // namespace radtrans
