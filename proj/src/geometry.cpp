#include "homog/geometry.hpp"

#include <cmath>

namespace homog {

double level_set(const CellGeometry& geom, const Vec2& X) {
    return (X - CellGeometry::center()).norm() - geom.a;
}

Vec2 normal0(const CellGeometry& geom, const Vec2& X) {
    const Vec2 d = X - CellGeometry::center();
    const double r = d.norm();
    if (r < 1e-14)
        throw GeometryError("normal0 undefined at the inclusion center");
    (void)geom;
    return d / r;
}

Vec2 normal1(const CellGeometry& geom, const Vec2& X) {
    const Vec2 n0 = normal0(geom, X);
    const double radial = geom.grad_a.dot(n0);
    return Vec2{-geom.grad_a.x + radial * n0.x, -geom.grad_a.y + radial * n0.y};
}

Mat2 boundary_velocity(const CellGeometry& geom, const Vec2& X) {
    return Mat2::outer(geom.grad_a, normal0(geom, X));
}

BoundaryQuadrature boundary_quadrature(const CellGeometry& geom, int n_points) {
    if (n_points < 8) throw ValidationError("boundary_quadrature: need n_points >= 8");
    BoundaryQuadrature q;
    q.closed = true;
    const double w = 2.0 * kPi * geom.a / n_points;
    q.points.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double theta = 2.0 * kPi * i / n_points;
        const Vec2 n0{std::cos(theta), std::sin(theta)};
        const Vec2 X = CellGeometry::center() + geom.a * n0;
        q.points.push_back(X);
        q.weights.push_back(w);
        q.normals0.push_back(n0);
        q.normals1.push_back(normal1(geom, X));
        q.velocity.push_back(Mat2::outer(geom.grad_a, n0));
    }
    return q;
}

BoundaryQuadrature arc_quadrature(const CellGeometry& geom, double theta_start,
                                  double theta_end, int nodes_per_panel) {
    if (!(theta_end > theta_start)) throw ValidationError("arc_quadrature: degenerate arc");
    nodes_per_panel = std::min(std::max(nodes_per_panel, 8), 32);
    // Composite Gauss panels keep the rule spectrally sharp on long arcs.
    const int panels =
        std::max(1, static_cast<int>(std::ceil((theta_end - theta_start) / (kPi / 8.0))));
    std::vector<double> nodes, weights;
    gauss_legendre(nodes_per_panel, nodes, weights);
    BoundaryQuadrature q;
    q.closed = false;
    for (int p = 0; p < panels; ++p) {
        const double t0 = theta_start + (theta_end - theta_start) * p / panels;
        const double t1 = theta_start + (theta_end - theta_start) * (p + 1) / panels;
        const double half = 0.5 * (t1 - t0), mid = 0.5 * (t1 + t0);
        for (int i = 0; i < nodes_per_panel; ++i) {
            const double theta = mid + half * nodes[i];
            const Vec2 n0{std::cos(theta), std::sin(theta)};
            const Vec2 X = CellGeometry::center() + geom.a * n0;
            q.points.push_back(X);
            q.weights.push_back(weights[i] * half * geom.a);  // dS = a dtheta
            q.normals0.push_back(n0);
            q.normals1.push_back(normal1(geom, X));
            q.velocity.push_back(Mat2::outer(geom.grad_a, n0));
        }
    }
    return q;
}

double disk_integral(const CellGeometry& geom, const std::function<double(Vec2)>& f,
                     int n_r, int n_theta) {
    std::vector<double> nodes, weights;
    gauss_legendre(n_r, nodes, weights);
    double total = 0.0;
    const double dtheta = 2.0 * kPi / n_theta;
    for (int j = 0; j < n_theta; ++j) {
        const double theta = dtheta * j;
        const Vec2 dir{std::cos(theta), std::sin(theta)};
        for (int i = 0; i < n_r; ++i) {
            const double r = 0.5 * geom.a * (nodes[i] + 1.0);
            const double w = 0.5 * geom.a * weights[i] * r * dtheta;
            total += w * f(CellGeometry::center() + r * dir);
        }
    }
    return total;
}

double square_integral(const std::function<double(Vec2)>& f, int n_gauss) {
    std::vector<double> nodes, weights;
    gauss_legendre(n_gauss, nodes, weights);
    double total = 0.0;
    for (int i = 0; i < n_gauss; ++i) {
        const double x = 0.5 * (nodes[i] + 1.0);
        for (int j = 0; j < n_gauss; ++j) {
            const double y = 0.5 * (nodes[j] + 1.0);
            total += 0.25 * weights[i] * weights[j] * f({x, y});
        }
    }
    return total;
}

double exterior_integral(const CellGeometry& geom, const std::function<double(Vec2)>& f,
                         int n_gauss, int n_r, int n_theta) {
    return square_integral(f, n_gauss) - disk_integral(geom, f, n_r, n_theta);
}

}  // namespace homog
