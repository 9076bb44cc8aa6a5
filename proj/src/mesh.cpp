#include "homog/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

#include "homog/geometry.hpp"

namespace homog {

namespace {

// Vertex state relative to the circle after snapping: -1 inside, 0 on the
// circle, +1 outside.
using State = int;

struct Builder {
    const CellGeometry& geom;
    int n;
    double s;
    std::vector<Vec2> verts;
    std::vector<State> state;
    std::vector<Triangle> tris;

    explicit Builder(const CellGeometry& g, int n_) : geom(g), n(n_), s(1.0 / n_) {}

    int grid(int i, int j) const { return j * (n + 1) + i; }

    Vec2 snap_to_circle(const Vec2& v) const {
        return CellGeometry::center() + geom.a * (v - CellGeometry::center()).normalized();
    }

    void background() {
        verts.reserve(static_cast<std::size_t>((n + 1) * (n + 1) + n * n));
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        std::vector<int> center_idx(static_cast<std::size_t>(n) * n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                center_idx[static_cast<std::size_t>(j) * n + i] = static_cast<int>(verts.size());
                verts.push_back({(i + 0.5) / n, (j + 0.5) / n});
            }
        tris.reserve(static_cast<std::size_t>(4) * n * n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int p00 = grid(i, j), p10 = grid(i + 1, j);
                const int p11 = grid(i + 1, j + 1), p01 = grid(i, j + 1);
                const int q = center_idx[static_cast<std::size_t>(j) * n + i];
                tris.push_back({{p00, p10, q}, Region::Exterior});
                tris.push_back({{p10, p11, q}, Region::Exterior});
                tris.push_back({{p11, p01, q}, Region::Exterior});
                tris.push_back({{p01, p00, q}, Region::Exterior});
            }
    }

    bool on_cell_boundary(const Vec2& v) const {
        return v.x == 0.0 || v.y == 0.0 || v.x == 1.0 || v.y == 1.0;
    }

    void snap() {
        state.resize(verts.size());
        const double threshold = 0.2 * s;
        for (std::size_t k = 0; k < verts.size(); ++k) {
            const double phi = level_set(geom, verts[k]);
            if (std::abs(phi) < threshold) {
                if (on_cell_boundary(verts[k]))
                    throw GeometryError("inclusion touches the cell boundary grid layer");
                verts[k] = snap_to_circle(verts[k]);
                state[k] = 0;
            } else {
                state[k] = phi < 0.0 ? -1 : +1;
            }
        }
    }

    int edge_intersection(int va, int vb, std::map<std::pair<int, int>, int>& cache) {
        const std::pair<int, int> key{std::min(va, vb), std::max(va, vb)};
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const Vec2 A = verts[va] - CellGeometry::center();
        const Vec2 d = verts[vb] - verts[va];
        const double qa = d.norm2();
        const double qb = 2.0 * d.dot(A);
        const double qc = A.norm2() - geom.a * geom.a;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) throw GeometryError("interface intersection lost (discriminant < 0)");
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        double t = -1.0;
        for (const double cand : {q / qa, qc / q}) {
            if (cand > 0.0 && cand < 1.0) t = cand;
        }
        if (t < 0.0) throw GeometryError("interface intersection outside edge");
        const Vec2 p = snap_to_circle(verts[va] + t * d);
        const int idx = static_cast<int>(verts.size());
        verts.push_back(p);
        state.push_back(0);
        cache.emplace(key, idx);
        return idx;
    }

    // Region tags are combinatorial: decided by the sign of the vertices each
    // fragment keeps, never by centroid tests, so no fragment straddles the
    // polygonal interface.
    void subdivide() {
        std::map<std::pair<int, int>, int> cut;
        std::vector<Triangle> out;
        out.reserve(tris.size() + 512);
        for (const Triangle& T : tris) {
            int v[3] = {T.v[0], T.v[1], T.v[2]};
            int st[3] = {state[v[0]], state[v[1]], state[v[2]]};
            const bool has_pos = st[0] > 0 || st[1] > 0 || st[2] > 0;
            const bool has_neg = st[0] < 0 || st[1] < 0 || st[2] < 0;
            if (!(has_pos && has_neg)) {
                const Region r = has_neg ? Region::Interior : Region::Exterior;
                out.push_back({{v[0], v[1], v[2]}, r});
                continue;
            }
            int zeros = 0;
            for (int k = 0; k < 3; ++k) zeros += (st[k] == 0);
            if (zeros == 1) {
                // Rotate the on-circle vertex to slot 0; single crossing edge.
                while (st[0] != 0) {
                    std::rotate(v, v + 1, v + 3);
                    std::rotate(st, st + 1, st + 3);
                }
                const int p = edge_intersection(v[1], v[2], cut);
                out.push_back({{v[0], v[1], p},
                               st[1] < 0 ? Region::Interior : Region::Exterior});
                out.push_back({{v[0], p, v[2]},
                               st[2] < 0 ? Region::Interior : Region::Exterior});
            } else if (zeros == 0) {
                // Rotate the lone-sign vertex to slot 0; two crossing edges.
                while (st[0] == st[1] || st[0] == st[2]) {
                    std::rotate(v, v + 1, v + 3);
                    std::rotate(st, st + 1, st + 3);
                }
                const int p01 = edge_intersection(v[0], v[1], cut);
                const int p02 = edge_intersection(v[0], v[2], cut);
                const Region lone = st[0] < 0 ? Region::Interior : Region::Exterior;
                const Region pair = st[1] < 0 ? Region::Interior : Region::Exterior;
                out.push_back({{v[0], p01, p02}, lone});
                // Quad (p01, v1, v2, p02) split about its centroid; the
                // symmetric pattern keeps the mesh D4-equivariant.
                const Vec2 q =
                    (verts[p01] + verts[v[1]] + verts[v[2]] + verts[p02]) * 0.25;
                const int qi = static_cast<int>(verts.size());
                verts.push_back(q);
                state.push_back(st[1]);
                out.push_back({{p01, v[1], qi}, pair});
                out.push_back({{v[1], v[2], qi}, pair});
                out.push_back({{v[2], p02, qi}, pair});
                out.push_back({{p02, p01, qi}, pair});
            } else {
                throw GeometryError("unexpected interface pattern (two on-circle vertices "
                                    "with a sign change)");
            }
        }
        tris = std::move(out);
    }
};

}  // namespace

CellMesh build_cell_mesh_n(const CellGeometry& geom, int n_background) {
    const int n = n_background;
    if (n < 4) throw ValidationError("build_cell_mesh: background grid too coarse");
    const double s = 1.0 / n;
    if (geom.a + 2.0 * s >= 0.5)
        throw GeometryError("infeasible geometry: radius " + std::to_string(geom.a) +
                            " within two grid cells of the boundary (limit " +
                            std::to_string(0.5 - 2.0 * s) + ")");
    if (geom.a < 2.5 * s)
        throw GeometryError("infeasible geometry: radius " + std::to_string(geom.a) +
                            " below the resolvable limit " + std::to_string(2.5 * s));

    Builder b(geom, n);
    b.background();
    b.snap();
    b.subdivide();

    CellMesh cm;
    cm.mesh.vertices = std::move(b.verts);
    cm.mesh.triangles = std::move(b.tris);
    cm.target_h = 1.5 * s;
    cm.radius = geom.a;

    // Enforce counter-clockwise orientation.
    for (std::size_t t = 0; t < cm.mesh.triangles.size(); ++t) {
        const double area = cm.mesh.triangle_area(static_cast<int>(t));
        if (area < 0.0) std::swap(cm.mesh.triangles[t].v[1], cm.mesh.triangles[t].v[2]);
        if (std::abs(area) < 1e-18)
            throw GeometryError("degenerate triangle produced by interface subdivision");
    }

    // Edge adjacency: conformity check and edge extraction.
    std::map<std::pair<int, int>, std::vector<int>> edges;
    for (std::size_t t = 0; t < cm.mesh.triangles.size(); ++t) {
        const Triangle& T = cm.mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int va = T.v[k], vb = T.v[(k + 1) % 3];
            edges[{std::min(va, vb), std::max(va, vb)}].push_back(static_cast<int>(t));
        }
    }
    const Vec2 c = CellGeometry::center();
    for (const auto& [key, ts] : edges) {
        const Vec2& pa = cm.mesh.vertices[key.first];
        const Vec2& pb = cm.mesh.vertices[key.second];
        if (ts.size() == 1) {
            // Must lie on the outer boundary.
            int side = -1;
            if (pa.x == 0.0 && pb.x == 0.0) side = 0;
            else if (pa.x == 1.0 && pb.x == 1.0) side = 1;
            else if (pa.y == 0.0 && pb.y == 0.0) side = 2;
            else if (pa.y == 1.0 && pb.y == 1.0) side = 3;
            if (side < 0) throw GeometryError("non-conforming mesh: dangling interior edge");
            static const Vec2 kNormals[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
            cm.outer_edges.push_back(
                {key.first, key.second, kNormals[side], (pb - pa).norm(), ts[0], side});
        } else if (ts.size() == 2) {
            const Region r0 = cm.mesh.triangles[ts[0]].region;
            const Region r1 = cm.mesh.triangles[ts[1]].region;
            if (r0 != r1) {
                InterfaceEdge e;
                const int ti = r0 == Region::Interior ? ts[0] : ts[1];
                const int te = r0 == Region::Interior ? ts[1] : ts[0];
                e.tri_interior = ti;
                e.tri_exterior = te;
                e.a = key.first;
                e.b = key.second;
                Vec2 normal = (pb - pa).perp_cw();
                const Vec2 mid = (pa + pb) * 0.5;
                if (normal.dot(mid - c) < 0.0) {
                    std::swap(e.a, e.b);
                    normal = normal * -1.0;
                }
                e.length = normal.norm();
                e.normal = normal / e.length;
                // Interface endpoints must sit on the circle.
                for (const int v : {e.a, e.b}) {
                    if (std::abs(level_set(geom, cm.mesh.vertices[v])) > 1e-12)
                        throw GeometryError("interface vertex off the circle");
                }
                cm.interface_edges.push_back(e);
            }
        } else {
            throw GeometryError("non-conforming mesh: edge shared by >2 triangles");
        }
    }

    // Periodic identification: right -> left, top -> bottom (corners chain to
    // the origin through both rules).
    for (int j = 0; j <= n; ++j)
        cm.periodic_pairs.emplace_back(b.grid(n, j), b.grid(0, j));
    for (int i = 0; i < n; ++i)
        cm.periodic_pairs.emplace_back(b.grid(i, n), b.grid(i, 0));

    const double total = cm.total_area();
    if (std::abs(total - 1.0) > 1e-10)
        throw GeometryError("mesh area defect: total area " + std::to_string(total));
    return cm;
}

CellMesh build_cell_mesh(const CellGeometry& geom, double target_h) {
    if (!(target_h > 0.0 && target_h <= 0.1))
        throw ValidationError("target_h must lie in (0, 0.1]");
    if (geom.a > 0.5 - 2.0 * target_h)
        throw GeometryError("infeasible geometry: a > 0.5 - 2 target_h");
    // Snapped vertices move by up to 0.2 of a grid cell, so size the grid with
    // headroom to keep post-snap edges below target_h near the interface.
    const int n = static_cast<int>(std::ceil(1.5 / target_h));
    return build_cell_mesh_n(geom, n);
}

PointLocator::PointLocator(const TriMesh& mesh, int bins_per_side)
    : mesh_(mesh), nb_(bins_per_side) {
    bins_.resize(static_cast<std::size_t>(nb_) * nb_);
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
        const Triangle& T = mesh_.triangles[t];
        double xmin = 2.0, xmax = -1.0, ymin = 2.0, ymax = -1.0;
        for (int k = 0; k < 3; ++k) {
            const Vec2& p = mesh_.vertices[T.v[k]];
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        const int i0 = std::clamp(static_cast<int>(xmin * nb_), 0, nb_ - 1);
        const int i1 = std::clamp(static_cast<int>(xmax * nb_), 0, nb_ - 1);
        const int j0 = std::clamp(static_cast<int>(ymin * nb_), 0, nb_ - 1);
        const int j1 = std::clamp(static_cast<int>(ymax * nb_), 0, nb_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                bins_[static_cast<std::size_t>(j) * nb_ + i].push_back(static_cast<int>(t));
    }
}

std::optional<std::pair<int, std::array<double, 3>>> PointLocator::locate(
    const Vec2& p, std::optional<Region> region) const {
    const int i = std::clamp(static_cast<int>(p.x * nb_), 0, nb_ - 1);
    const int j = std::clamp(static_cast<int>(p.y * nb_), 0, nb_ - 1);
    const double tol = -1e-11;
    for (const int t : bins_[static_cast<std::size_t>(j) * nb_ + i]) {
        const Triangle& T = mesh_.triangles[t];
        if (region && T.region != *region) continue;
        const Vec2& a = mesh_.vertices[T.v[0]];
        const Vec2& b = mesh_.vertices[T.v[1]];
        const Vec2& c = mesh_.vertices[T.v[2]];
        const double det = (b - a).cross(c - a);
        if (det == 0.0) continue;
        const double l1 = (p - a).cross(c - a) / det;
        const double l2 = (b - a).cross(p - a) / det;
        const double l0 = 1.0 - l1 - l2;
        if (l0 >= tol && l1 >= tol && l2 >= tol)
            return std::make_pair(t, std::array<double, 3>{l0, l1, l2});
    }
    return std::nullopt;
}

std::optional<double> eval_p1(const TriMesh& mesh, const PointLocator& loc,
                              const std::vector<double>& field, const Vec2& p,
                              std::optional<Region> region) {
    const auto hit = loc.locate(p, region);
    if (!hit) return std::nullopt;
    const Triangle& T = mesh.triangles[hit->first];
    const auto& l = hit->second;
    return l[0] * field[T.v[0]] + l[1] * field[T.v[1]] + l[2] * field[T.v[2]];
}

void export_trimesh(std::ostream& os, const TriMesh& mesh, const NamedFields& fields) {
    os << std::setprecision(17);
    os << "vertices " << mesh.vertices.size() << "\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        os << i << " " << mesh.vertices[i].x << " " << mesh.vertices[i].y << "\n";
    os << "triangles " << mesh.triangles.size() << "\n";
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& T = mesh.triangles[t];
        os << t << " " << T.v[0] << " " << T.v[1] << " " << T.v[2] << " "
           << (T.region == Region::Interior ? "i" : "e") << "\n";
    }
    for (const auto& [name, values] : fields) {
        os << "field " << name << " " << values->size() << "\n";
        for (std::size_t i = 0; i < values->size(); ++i) os << (*values)[i] << "\n";
    }
}

void export_mesh(std::ostream& os, const CellMesh& cm, const NamedFields& fields) {
    os << std::setprecision(17);
    os << "vertices " << cm.mesh.vertices.size() << "\n";
    for (std::size_t i = 0; i < cm.mesh.vertices.size(); ++i)
        os << i << " " << cm.mesh.vertices[i].x << " " << cm.mesh.vertices[i].y << "\n";
    os << "triangles " << cm.mesh.triangles.size() << "\n";
    for (std::size_t t = 0; t < cm.mesh.triangles.size(); ++t) {
        const Triangle& T = cm.mesh.triangles[t];
        os << t << " " << T.v[0] << " " << T.v[1] << " " << T.v[2] << " "
           << (T.region == Region::Interior ? "i" : "e") << "\n";
    }
    os << "interface_edges " << cm.interface_edges.size() << "\n";
    for (const auto& e : cm.interface_edges)
        os << e.a << " " << e.b << " " << e.normal.x << " " << e.normal.y << "\n";
    os << "periodic_pairs " << cm.periodic_pairs.size() << "\n";
    for (const auto& [slave, master] : cm.periodic_pairs) os << slave << " " << master << "\n";
    for (const auto& [name, values] : fields) {
        os << "field " << name << " " << values->size() << "\n";
        for (std::size_t i = 0; i < values->size(); ++i) os << (*values)[i] << "\n";
    }
}

}  // namespace homog
