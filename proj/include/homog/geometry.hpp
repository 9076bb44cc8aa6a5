#pragma once

// Level-set description of the slowly varying circular inclusion: normal
// expansion, boundary velocity, boundary quadrature and the conforming
// periodic unit-cell mesh.
//
// The unit cell is D = [0,1]^2 with the inclusion centered at c = (0.5,0.5);
// the level set is h(X) = |X - c| - a, so grad_X h is a unit vector on the
// boundary and several formulas below use |grad_X h| = 1 explicitly (noted
// where they do).

#include <functional>

#include "homog/mesh.hpp"

namespace homog {

struct CellGeometry {
    double a;       // inclusion radius, 0 < a < 0.5
    Vec2 grad_a;    // slow gradient of the radius at this cell's anchor point

    static constexpr Vec2 center() { return {0.5, 0.5}; }

    CellGeometry(double radius, Vec2 grad = {0.0, 0.0}) : a(radius), grad_a(grad) {
        if (!(a > 0.0 && a < 0.5))
            throw ValidationError("inclusion radius must lie in (0, 0.5), got " +
                                  std::to_string(a));
    }
};

// h(X) = |X - c| - a: negative inside, zero on the boundary, positive outside.
double level_set(const CellGeometry& geom, const Vec2& X);

// n0 = grad_X h / |grad_X h| = (X - c)/|X - c|, the outward radial unit vector.
Vec2 normal0(const CellGeometry& geom, const Vec2& X);

// n1 = grad_x h/|grad_X h| - (grad_x h . grad_X h) grad_X h/|grad_X h|^3 with
// grad_x h = -grad_a; for the circular level set this is the tangential part
// of -grad_a:  n1 = -grad_a + (grad_a . n0) n0.
Vec2 normal1(const CellGeometry& geom, const Vec2& X);

// Boundary velocity V_jk = dR^b_k/dx_j for boundary points R^b = c + a(x) n0:
// V = grad_a (x) n0 (outer product). Satisfies V.n0 = grad_a.
Mat2 boundary_velocity(const CellGeometry& geom, const Vec2& X);

struct BoundaryQuadrature {
    std::vector<Vec2> points;
    std::vector<double> weights;   // arc-length weights; sum = 2 pi a (closed)
    std::vector<Vec2> normals0;
    std::vector<Vec2> normals1;
    std::vector<Mat2> velocity;
    bool closed = true;

    double integrate(const std::function<double(std::size_t)>& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * f(i);
        return s;
    }
};

// Equally spaced points by arc length (trapezoid rule on the circle;
// spectrally accurate for smooth periodic integrands). n_points >= 8.
BoundaryQuadrature boundary_quadrature(const CellGeometry& geom, int n_points);

// Gauss-Legendre quadrature on the open arc theta in [theta_start, theta_end].
BoundaryQuadrature arc_quadrature(const CellGeometry& geom, double theta_start,
                                  double theta_end, int n_points);

// Smooth-in-a quadratures for region integrals (Gauss in r x trapezoid in
// theta over the disk). Used by transport-identity checks, which differentiate
// with respect to a and must not see mesh-discretization jitter.
double disk_integral(const CellGeometry& geom, const std::function<double(Vec2)>& f,
                     int n_r = 24, int n_theta = 64);
// Integral over D_e = [0,1]^2 minus the disk (tensor Gauss on the square minus
// the disk integral).
double exterior_integral(const CellGeometry& geom, const std::function<double(Vec2)>& f,
                         int n_gauss = 24, int n_r = 24, int n_theta = 64);
// Tensor Gauss-Legendre over the whole unit square.
double square_integral(const std::function<double(Vec2)>& f, int n_gauss = 24);

// Boundary-conforming periodic triangulation: structured background grid (each
// square split into four triangles about its center), radial snapping of
// near-interface vertices onto the circle, and pattern subdivision of crossed
// triangles. Interface vertices land exactly on the circle; vertices on the
// four cell edges are never moved, so periodic pairs are exact translates.
//
// Throws GeometryError when the circle comes within two background cells of
// the outer boundary (a > 0.5 - 2 target_h) or is too small to resolve.
CellMesh build_cell_mesh(const CellGeometry& geom, double target_h);

// Same generator with the background resolution pinned directly; used by the
// DNS stitcher, which needs bit-identical outer vertex layouts across cells.
CellMesh build_cell_mesh_n(const CellGeometry& geom, int n_background);

}  // namespace homog
