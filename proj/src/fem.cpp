#include "homog/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace homog {

CsrMatrix CsrMatrix::from_triplets(int n, std::vector<std::array<double, 3>>& triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
        if (a[0] != b[0]) return a[0] < b[0];
        return a[1] < b[1];
    });
    CsrMatrix m;
    m.n = n;
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
        std::size_t j = k;
        double sum = 0.0;
        while (j < triplets.size() && triplets[j][0] == triplets[k][0] &&
               triplets[j][1] == triplets[k][1]) {
            sum += triplets[j][2];
            ++j;
        }
        m.cols.push_back(static_cast<int>(triplets[k][1]));
        m.vals.push_back(sum);
        ++m.row_ptr[static_cast<int>(triplets[k][0]) + 1];
        k = j;
    }
    for (int i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

void CsrMatrix::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[cols[k]];
        y[i] = s;
    }
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (cols[k] == i) d[i] = vals[k];
    return d;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void remove_mean(std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    for (double& x : v) x -= m;
}

}  // namespace

CgResult pcg(const CsrMatrix& A, const std::vector<double>& b0, std::vector<double>& x,
             double tol_rel, int max_iterations, bool deflate_constants) {
    const int n = A.n;
    std::vector<double> b = b0;
    if (deflate_constants) remove_mean(b);
    x.assign(n, 0.0);
    const double bnorm = std::sqrt(dot(b, b));
    CgResult res;
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    std::vector<double> diag = A.diagonal();
    for (double& d : diag) {
        if (d <= 0.0) throw NumericalError("pcg: non-positive diagonal entry");
        d = 1.0 / d;
    }
    std::vector<double> r = b, z(n), p(n), Ap(n);
    for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
    if (deflate_constants) remove_mean(z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iterations; ++it) {
        A.apply(p, Ap);
        const double pAp = dot(p, Ap);
        if (pAp <= 0.0) throw NumericalError("pcg: matrix not positive definite on iterate");
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        if (deflate_constants) remove_mean(r);
        const double rnorm = std::sqrt(dot(r, r));
        if (rnorm <= tol_rel * bnorm) {
            res.iterations = it;
            res.rel_residual = rnorm / bnorm;
            res.converged = true;
            return res;
        }
        for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
        if (deflate_constants) remove_mean(z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NumericalError("pcg: no convergence after " + std::to_string(max_iterations) +
                         " iterations");
}

DofMap build_dof_map(int n_vertices, const std::vector<std::pair<int, int>>& periodic_pairs,
                     const std::map<int, double>& dirichlet,
                     const std::vector<char>* active) {
    DofMap dm;
    dm.master.resize(n_vertices);
    std::iota(dm.master.begin(), dm.master.end(), 0);
    for (const auto& [slave, master] : periodic_pairs) dm.master[slave] = master;
    // Flatten chains (corner vertices go through two rules).
    for (int v = 0; v < n_vertices; ++v) {
        int m = v;
        while (dm.master[m] != m) m = dm.master[m];
        dm.master[v] = m;
    }
    dm.unknown.assign(n_vertices, -3);
    dm.fixed.assign(n_vertices, 0.0);
    for (int v = 0; v < n_vertices; ++v) {
        if (!active || (*active)[v]) dm.unknown[dm.master[v]] = -2;
    }
    for (const auto& [v, value] : dirichlet) {
        const int m = dm.master[v];
        dm.unknown[m] = -1;
        dm.fixed[m] = value;
    }
    int next = 0;
    for (int v = 0; v < n_vertices; ++v) {
        if (dm.master[v] != v) continue;
        if (dm.unknown[v] == -2) dm.unknown[v] = next++;
    }
    dm.n_unknowns = next;
    return dm;
}

std::array<Vec2, 3> shape_gradients(const TriMesh& mesh, int t) {
    const Triangle& T = mesh.triangles[t];
    const Vec2& a = mesh.vertices[T.v[0]];
    const Vec2& b = mesh.vertices[T.v[1]];
    const Vec2& c = mesh.vertices[T.v[2]];
    const double inv2A = 1.0 / ((b - a).cross(c - a));
    auto perp_ccw = [](const Vec2& v) { return Vec2{-v.y, v.x}; };
    return {perp_ccw(c - b) * inv2A, perp_ccw(a - c) * inv2A, perp_ccw(b - a) * inv2A};
}

Vec2 tri_gradient(const TriMesh& mesh, int t, const std::vector<double>& field) {
    const auto g = shape_gradients(mesh, t);
    const Triangle& T = mesh.triangles[t];
    Vec2 r{0.0, 0.0};
    for (int k = 0; k < 3; ++k) r += g[k] * field[T.v[k]];
    return r;
}

AssembledSystem assemble_p1(const TriMesh& mesh, const TriFilter& filter,
                            const TriCoefficient& coef, const PointSource& source,
                            const std::vector<std::pair<int, int>>& periodic_pairs,
                            const std::map<int, double>& dirichlet) {
    AssembledSystem sys;
    std::vector<char> active(mesh.vertices.size(), filter ? 0 : 1);
    if (filter) {
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            if (!filter(static_cast<int>(t))) continue;
            for (int k = 0; k < 3; ++k) active[mesh.triangles[t].v[k]] = 1;
        }
    }
    sys.dofs = build_dof_map(static_cast<int>(mesh.vertices.size()), periodic_pairs, dirichlet,
                             &active);
    sys.rhs.assign(sys.dofs.n_unknowns, 0.0);
    std::vector<std::array<double, 3>> triplets;
    triplets.reserve(mesh.triangles.size() * 9);

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const int ti = static_cast<int>(t);
        if (filter && !filter(ti)) continue;
        const Triangle& T = mesh.triangles[t];
        const double area = mesh.triangle_area(ti);
        const double eps = coef ? coef(ti) : 1.0;
        const auto g = shape_gradients(mesh, ti);

        int uk[3];
        for (int k = 0; k < 3; ++k) uk[k] = sys.dofs.unknown_of(T.v[k]);

        for (int r = 0; r < 3; ++r) {
            if (uk[r] < 0) continue;
            for (int c = 0; c < 3; ++c) {
                const double K = eps * area * g[r].dot(g[c]);
                if (uk[c] >= 0) {
                    triplets.push_back({static_cast<double>(uk[r]),
                                        static_cast<double>(uk[c]), K});
                } else {
                    sys.rhs[uk[r]] -= K * sys.dofs.fixed_of(T.v[c]);
                }
            }
        }

        if (source) {
            // Degree-2 edge-midpoint rule.
            const Vec2& a = mesh.vertices[T.v[0]];
            const Vec2& b = mesh.vertices[T.v[1]];
            const Vec2& c = mesh.vertices[T.v[2]];
            const Vec2 m01 = (a + b) * 0.5, m12 = (b + c) * 0.5, m20 = (c + a) * 0.5;
            const double f01 = source(m01), f12 = source(m12), f20 = source(m20);
            const double w = area / 3.0;
            const double load[3] = {w * 0.5 * (f01 + f20), w * 0.5 * (f01 + f12),
                                    w * 0.5 * (f12 + f20)};
            for (int r = 0; r < 3; ++r)
                if (uk[r] >= 0) sys.rhs[uk[r]] += load[r];
        }
    }
    sys.A = CsrMatrix::from_triplets(sys.dofs.n_unknowns, triplets);
    return sys;
}

void add_edge_load(AssembledSystem& sys, int va, int vb, double edge_length,
                   double value_per_unit_length) {
    const double half = 0.5 * edge_length * value_per_unit_length;
    for (const int v : {va, vb}) {
        const int u = sys.dofs.unknown_of(v);
        if (u >= 0) sys.rhs[u] += half;
    }
}

std::vector<double> expand_solution(const DofMap& dofs, const std::vector<double>& u) {
    std::vector<double> full(dofs.master.size(), 0.0);
    for (std::size_t v = 0; v < dofs.master.size(); ++v) {
        const int m = dofs.master[v];
        full[v] = dofs.unknown[m] >= 0 ? u[dofs.unknown[m]] : dofs.fixed[m];
    }
    return full;
}

double p1_integral(const TriMesh& mesh, const TriFilter& filter,
                   const std::vector<double>& field) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (filter && !filter(static_cast<int>(t))) continue;
        const Triangle& T = mesh.triangles[t];
        s += mesh.triangle_area(static_cast<int>(t)) / 3.0 *
             (field[T.v[0]] + field[T.v[1]] + field[T.v[2]]);
    }
    return s;
}

double p1_mean(const TriMesh& mesh, const TriFilter& filter, const std::vector<double>& field) {
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (filter && !filter(static_cast<int>(t))) continue;
        area += mesh.triangle_area(static_cast<int>(t));
    }
    return p1_integral(mesh, filter, field) / area;
}

std::vector<double> vertex_residuals(const TriMesh& mesh, const TriFilter& filter,
                                     const TriCoefficient& coef,
                                     const std::vector<double>& field,
                                     const PointSource& source) {
    std::vector<double> r(mesh.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const int ti = static_cast<int>(t);
        if (filter && !filter(ti)) continue;
        const Triangle& T = mesh.triangles[t];
        const double area = mesh.triangle_area(ti);
        const double eps = coef ? coef(ti) : 1.0;
        const auto g = shape_gradients(mesh, ti);
        const Vec2 grad = g[0] * field[T.v[0]] + g[1] * field[T.v[1]] + g[2] * field[T.v[2]];
        for (int k = 0; k < 3; ++k) r[T.v[k]] += eps * area * grad.dot(g[k]);
        if (source) {
            const Vec2& a = mesh.vertices[T.v[0]];
            const Vec2& b = mesh.vertices[T.v[1]];
            const Vec2& c = mesh.vertices[T.v[2]];
            const Vec2 m01 = (a + b) * 0.5, m12 = (b + c) * 0.5, m20 = (c + a) * 0.5;
            const double f01 = source(m01), f12 = source(m12), f20 = source(m20);
            const double w = area / 3.0;
            r[T.v[0]] -= w * 0.5 * (f01 + f20);
            r[T.v[1]] -= w * 0.5 * (f01 + f12);
            r[T.v[2]] -= w * 0.5 * (f12 + f20);
        }
    }
    return r;
}

}  // namespace homog
