#pragma once

// P1 finite-element machinery on TriMesh: dof maps (periodic identification by
// shared unknowns, Dirichlet by elimination), CSR assembly, and a deterministic
// Jacobi-preconditioned conjugate-gradient solver with optional deflation of
// the constant nullspace.

#include <functional>
#include <map>

#include "homog/mesh.hpp"

namespace homog {

struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> cols;
    std::vector<double> vals;

    static CsrMatrix from_triplets(int n, std::vector<std::array<double, 3>>& triplets);

    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> diagonal() const;
};

struct CgResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Solves A x = b. With `deflate_constants`, b and the iterates are kept
// orthogonal to the all-ones vector (pure-Neumann systems). Throws
// NumericalError when the iteration stalls past max_iterations.
CgResult pcg(const CsrMatrix& A, const std::vector<double>& b, std::vector<double>& x,
             double tol_rel = 1e-12, int max_iterations = 200000,
             bool deflate_constants = false);

// Vertex -> unknown bookkeeping. Periodic slaves share their master's unknown;
// Dirichlet vertices carry a fixed value and no unknown; vertices outside the
// assembled region (inactive) carry neither.
struct DofMap {
    std::vector<int> master;      // vertex -> representative vertex
    std::vector<int> unknown;     // representative -> unknown index, -1 fixed, -3 inactive
    std::vector<double> fixed;    // fixed value where unknown == -1
    int n_unknowns = 0;

    int unknown_of(int v) const { return unknown[master[v]]; }
    double fixed_of(int v) const { return fixed[master[v]]; }
};

DofMap build_dof_map(int n_vertices, const std::vector<std::pair<int, int>>& periodic_pairs,
                     const std::map<int, double>& dirichlet,
                     const std::vector<char>* active = nullptr);

// Gradient of a P1 vertex field on one triangle (constant per triangle).
Vec2 tri_gradient(const TriMesh& mesh, int t, const std::vector<double>& field);

// Shape-function gradients of triangle t, row k = grad lambda_k.
std::array<Vec2, 3> shape_gradients(const TriMesh& mesh, int t);

using TriFilter = std::function<bool(int tri)>;
using TriCoefficient = std::function<double(int tri)>;
using PointSource = std::function<double(const Vec2&)>;

struct AssembledSystem {
    CsrMatrix A;
    std::vector<double> rhs;
    DofMap dofs;
};

// Stiffness + load over the selected triangles:
//   sum_T coef(T) int grad(u).grad(v)  =  sum_T int source v   (+ Dirichlet lift)
// `source` may be null for homogeneous loads. Loads use the degree-2
// edge-midpoint rule.
AssembledSystem assemble_p1(const TriMesh& mesh, const TriFilter& filter,
                            const TriCoefficient& coef, const PointSource& source,
                            const std::vector<std::pair<int, int>>& periodic_pairs,
                            const std::map<int, double>& dirichlet);

// Adds boundary-line load contributions sum_e w_e * g(edge) * phi_v to an
// assembled RHS: value per edge times the hat functions of its endpoints.
void add_edge_load(AssembledSystem& sys, int va, int vb, double edge_length,
                   double value_per_unit_length);

// Expands the reduced solution back to per-vertex values (periodic images
// copied bit-exactly, Dirichlet values inserted).
std::vector<double> expand_solution(const DofMap& dofs, const std::vector<double>& u);

// Mean of a P1 field over the selected triangles (integral / area).
double p1_mean(const TriMesh& mesh, const TriFilter& filter, const std::vector<double>& field);
double p1_integral(const TriMesh& mesh, const TriFilter& filter,
                   const std::vector<double>& field);

// Per-vertex residuals r_v = sum_T coef int grad(field).grad(phi_v) - int source phi_v,
// computed on raw vertex images (no periodic identification). At a converged
// solution these vanish at interior vertices and recover consistent boundary
// fluxes at boundary vertices.
std::vector<double> vertex_residuals(const TriMesh& mesh, const TriFilter& filter,
                                     const TriCoefficient& coef,
                                     const std::vector<double>& field,
                                     const PointSource& source);

}  // namespace homog
