#pragma once

// Triangle mesh containers shared by the cell solver and the fine-scale DNS
// solver, plus the conforming periodic unit-cell mesh.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "homog/core.hpp"

namespace homog {

enum class Region : std::uint8_t { Interior = 0, Exterior = 1 };

struct Triangle {
    int v[3];
    Region region;
};

struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;

    double triangle_area(int t) const {
        const Vec2& a = vertices[triangles[t].v[0]];
        const Vec2& b = vertices[triangles[t].v[1]];
        const Vec2& c = vertices[triangles[t].v[2]];
        return 0.5 * ((b - a).cross(c - a));
    }
    Vec2 centroid(int t) const {
        const Vec2& a = vertices[triangles[t].v[0]];
        const Vec2& b = vertices[triangles[t].v[1]];
        const Vec2& c = vertices[triangles[t].v[2]];
        return (a + b + c) / 3.0;
    }
};

// Directed interface edge with cached geometric data. The normal points out of
// the inclusion (from Region::Interior into Region::Exterior).
struct InterfaceEdge {
    int a, b;           // vertex indices, (a,b) oriented so the inclusion is on the left
    Vec2 normal;        // unit outward normal of the polygonal edge
    double length;
    int tri_interior;   // adjacent triangle indices
    int tri_exterior;
};

// Edge on the outer cell boundary; exactly one adjacent triangle.
struct OuterEdge {
    int a, b;
    Vec2 normal;   // outward unit normal of the unit square (+-e1 / +-e2)
    double length;
    int tri;
    int side;      // 0:x=0  1:x=1  2:y=0  3:y=1
};

struct CellMesh {
    TriMesh mesh;
    std::vector<InterfaceEdge> interface_edges;
    std::vector<OuterEdge> outer_edges;
    // slave -> master vertex identification (right->left, top->bottom, corners
    // chained to (0,0)). Values on paired vertices are equal by construction.
    std::vector<std::pair<int, int>> periodic_pairs;
    double target_h = 0.0;
    double radius = 0.0;

    double interior_area() const {
        double s = 0.0;
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
            if (mesh.triangles[t].region == Region::Interior)
                s += mesh.triangle_area(static_cast<int>(t));
        return s;
    }
    double total_area() const {
        double s = 0.0;
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
            s += mesh.triangle_area(static_cast<int>(t));
        return s;
    }
};

// Brute-force-with-bins point locator. `region` restricts the search; points
// on the interface resolve to a triangle of the requested region.
class PointLocator {
public:
    explicit PointLocator(const TriMesh& mesh, int bins_per_side = 32);
    // Returns triangle index and barycentric coordinates, or nullopt.
    std::optional<std::pair<int, std::array<double, 3>>> locate(
        const Vec2& p, std::optional<Region> region = std::nullopt) const;

private:
    const TriMesh& mesh_;
    int nb_;
    std::vector<std::vector<int>> bins_;
};

// Evaluates a P1 vertex field at a point (nullopt if outside the mesh).
std::optional<double> eval_p1(const TriMesh& mesh, const PointLocator& loc,
                              const std::vector<double>& field, const Vec2& p,
                              std::optional<Region> region = std::nullopt);

// Plain-text debug format: sections for vertices, triangles, interface edges
// and periodic pairs; optional named per-vertex fields appended.
using NamedFields = std::vector<std::pair<std::string, const std::vector<double>*>>;
void export_trimesh(std::ostream& os, const TriMesh& mesh, const NamedFields& fields = {});
void export_mesh(std::ostream& os, const CellMesh& cm, const NamedFields& fields = {});

}  // namespace homog
