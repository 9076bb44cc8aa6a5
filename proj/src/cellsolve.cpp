#include "homog/cellsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace homog {

bool is_limit_mode(CellMode m) {
    return m == CellMode::PsiLimitNeumann || m == CellMode::PsiLimitConstraint ||
           m == CellMode::XiLimitNeumann || m == CellMode::XiLimitConstraint;
}

bool is_xi_mode(CellMode m) {
    return m == CellMode::XiFinite || m == CellMode::XiLimitNeumann ||
           m == CellMode::XiLimitConstraint;
}

const char* to_string(CellMode m) {
    switch (m) {
        case CellMode::PsiFinite: return "psi-finite";
        case CellMode::PsiLimitNeumann: return "psi-limit-neumann";
        case CellMode::PsiLimitConstraint: return "psi-limit-constraint";
        case CellMode::XiFinite: return "xi-finite";
        case CellMode::XiLimitNeumann: return "xi-limit-neumann";
        case CellMode::XiLimitConstraint: return "xi-limit-constraint";
    }
    return "?";
}

void CellProblemSpec::check() const {
    if (!mesh) throw ValidationError("cell problem spec has no mesh");
    if (!(eps_e > 0.0)) throw ValidationError("eps_e must be positive");
    const bool inf = std::isinf(eps_i);
    if (is_limit_mode(mode) && !inf)
        throw ValidationError(std::string("mode ") + to_string(mode) +
                              " requires eps_i = INFINITE");
    if (!is_limit_mode(mode) && !(eps_i > 0.0 && std::isfinite(eps_i)))
        throw ValidationError(std::string("mode ") + to_string(mode) +
                              " requires finite positive eps_i");
    if (is_xi_mode(mode) && rho.empty())
        throw ValidationError("XI modes require a charge density expression");
}

TriFilter exterior_filter(const CellMesh& cm) {
    const TriMesh* m = &cm.mesh;
    return [m](int t) { return m->triangles[t].region == Region::Exterior; };
}

TriFilter interior_filter(const CellMesh& cm) {
    const TriMesh* m = &cm.mesh;
    return [m](int t) { return m->triangles[t].region == Region::Interior; };
}

namespace {

std::vector<int> interface_vertices(const CellMesh& cm) {
    std::set<int> s;
    for (const auto& e : cm.interface_edges) {
        s.insert(e.a);
        s.insert(e.b);
    }
    return {s.begin(), s.end()};
}

PointSource rho_source(const CellProblemSpec& spec) {
    const FieldExpr rho = spec.rho;           // value copy; tree itself is shared/immutable
    const Vec2 x = spec.anchor_x;
    return [rho, x](const Vec2& X) { return eval_xX(rho, x, X); };
}

double check_compatibility(const CellProblemSpec& spec, bool exterior_only) {
    const auto f = [&](Vec2 X) { return eval_xX(spec.rho, spec.anchor_x, X); };
    const double integral = exterior_only
                                ? exterior_integral(spec.geom, f)
                                : square_integral(f);
    if (std::abs(integral) > 1e-8)
        throw NumericalError(std::string("charge compatibility violated: integral of rho over ") +
                             (exterior_only ? "D_e" : "D") + " = " + std::to_string(integral));
    return integral;
}

void subtract_cell_mean(const CellMesh& cm, std::vector<double>& field) {
    const double mean = p1_integral(cm.mesh, nullptr, field) / cm.total_area();
    for (double& v : field) v -= mean;
}

// Gradient-type load for the Psi problems: rhs_v = -sum_T eps_T area (e_k . grad phi_v).
void add_gradient_load(const CellMesh& cm, const TriFilter& filter, const TriCoefficient& coef,
                       const Vec2& ek, AssembledSystem& sys) {
    const TriMesh& mesh = cm.mesh;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const int ti = static_cast<int>(t);
        if (filter && !filter(ti)) continue;
        const double area = mesh.triangle_area(ti);
        const double eps = coef(ti);
        const auto g = shape_gradients(mesh, ti);
        for (int r = 0; r < 3; ++r) {
            const int u = sys.dofs.unknown_of(mesh.triangles[t].v[r]);
            if (u >= 0) sys.rhs[u] -= eps * area * ek.dot(g[r]);
        }
    }
}

}  // namespace

CellSolution solve_psi_finite(const CellProblemSpec& spec) {
    spec.check();
    const CellMesh& cm = *spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = spec.eps_e, eps_i = spec.eps_i;
    const TriCoefficient coef = [&mesh, eps_e, eps_i](int t) {
        return mesh.triangles[t].region == Region::Interior ? eps_i : eps_e;
    };

    CellSolution sol;
    sol.spec = spec;
    AssembledSystem sys =
        assemble_p1(mesh, nullptr, coef, nullptr, cm.periodic_pairs, {});
    for (int k = 0; k < 2; ++k) {
        std::fill(sys.rhs.begin(), sys.rhs.end(), 0.0);
        const Vec2 ek = k == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
        add_gradient_load(cm, nullptr, coef, ek, sys);
        std::vector<double> u;
        const CgResult cg = pcg(sys.A, sys.rhs, u, 1e-12, 200000, /*deflate=*/true);
        sol.max_rel_residual = std::max(sol.max_rel_residual, cg.rel_residual);
        sol.max_iterations = std::max(sol.max_iterations, cg.iterations);
        sol.psi[k] = expand_solution(sys.dofs, u);
        subtract_cell_mean(cm, sol.psi[k]);
    }
    return sol;
}

// The perfect-dielectric limit in its Neumann form. The Neumann data
// n0.(grad Psi + e_k) = 0 holds on the interior trace (dividing the flux jump
// by eps_i as eps_i -> infinity), so the realization follows the limit's own
// order: a pure-Neumann interior solve determines Psi inside the inclusion up
// to its gauge constant, continuity hands the trace to the exterior Dirichlet
// solve, and zero cell mean fixes the constant.
CellSolution solve_psi_limit_neumann(const CellProblemSpec& spec) {
    spec.check();
    const CellMesh& cm = *spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = spec.eps_e;
    const TriFilter ext = exterior_filter(cm);
    const TriFilter interior = interior_filter(cm);
    const TriCoefficient coef = [eps_e](int) { return eps_e; };

    // Neumann compatibility: the closed interface polygon makes the boundary
    // data sum to zero exactly.
    for (int k = 0; k < 2; ++k) {
        Vec2 ek = k == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
        double net = 0.0;
        for (const auto& e : cm.interface_edges) net += e.length * e.normal.dot(ek);
        if (std::abs(net) > 1e-12)
            throw NumericalError("Neumann compatibility violated on interface: " +
                                 std::to_string(net));
    }

    CellSolution sol;
    sol.spec = spec;
    AssembledSystem inner = assemble_p1(mesh, interior, coef, nullptr, {}, {});
    for (int k = 0; k < 2; ++k) {
        const Vec2 ek = k == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
        std::fill(inner.rhs.begin(), inner.rhs.end(), 0.0);
        for (const auto& e : cm.interface_edges)
            add_edge_load(inner, e.a, e.b, e.length, -eps_e * e.normal.dot(ek));
        std::vector<double> ui;
        const CgResult cgi = pcg(inner.A, inner.rhs, ui, 1e-12, 200000, /*deflate=*/true);
        sol.max_rel_residual = std::max(sol.max_rel_residual, cgi.rel_residual);
        sol.max_iterations = std::max(sol.max_iterations, cgi.iterations);
        const std::vector<double> interior_field = expand_solution(inner.dofs, ui);

        std::map<int, double> trace;
        for (const auto& e : cm.interface_edges) {
            trace[e.a] = interior_field[e.a];
            trace[e.b] = interior_field[e.b];
        }
        AssembledSystem outer = assemble_p1(mesh, ext, coef, nullptr, cm.periodic_pairs, trace);
        std::vector<double> ue;
        const CgResult cge = pcg(outer.A, outer.rhs, ue, 1e-12, 200000, /*deflate=*/false);
        sol.max_rel_residual = std::max(sol.max_rel_residual, cge.rel_residual);
        sol.max_iterations = std::max(sol.max_iterations, cge.iterations);

        std::vector<double> field = expand_solution(outer.dofs, ue);
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
            if (outer.dofs.unknown_of(static_cast<int>(v)) == -3) field[v] = interior_field[v];
        subtract_cell_mean(cm, field);
        sol.psi[k] = std::move(field);
    }
    return sol;
}

CellSolution solve_psi_limit_constraint(const CellProblemSpec& spec) {
    spec.check();
    const CellMesh& cm = *spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = spec.eps_e;
    const TriFilter ext = exterior_filter(cm);
    const TriCoefficient coef = [eps_e](int) { return eps_e; };

    CellSolution sol;
    sol.spec = spec;
    const std::vector<int> iface = interface_vertices(cm);
    for (int k = 0; k < 2; ++k) {
        // Bordered system (exterior Laplace + unknown interior constant c_k
        // + zero-mean closure) reduced by its Schur complement: the field
        // depends on c_k only through a global additive shift, so solve the
        // c_k = 0 gauge and recover c_k from the zero-mean condition.
        std::map<int, double> dirichlet;
        for (const int v : iface)
            dirichlet[v] = -(k == 0 ? mesh.vertices[v].x : mesh.vertices[v].y);
        AssembledSystem sys = assemble_p1(mesh, ext, coef, nullptr, cm.periodic_pairs, dirichlet);
        std::vector<double> u;
        const CgResult cg = pcg(sys.A, sys.rhs, u, 1e-12, 200000, /*deflate=*/false);
        sol.max_rel_residual = std::max(sol.max_rel_residual, cg.rel_residual);
        sol.max_iterations = std::max(sol.max_iterations, cg.iterations);
        std::vector<double> field = expand_solution(sys.dofs, u);
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            if (sys.dofs.unknown_of(static_cast<int>(v)) == -3)
                field[v] = -(k == 0 ? mesh.vertices[v].x : mesh.vertices[v].y);
        }
        const double mean = p1_integral(mesh, nullptr, field) / cm.total_area();
        for (double& v : field) v -= mean;
        (k == 0 ? sol.inclusion_constants.x : sol.inclusion_constants.y) = -mean;
        sol.psi[k] = std::move(field);
    }
    return sol;
}

CellSolution solve_xi_finite(const CellProblemSpec& spec) {
    spec.check();
    check_compatibility(spec, /*exterior_only=*/false);
    const CellMesh& cm = *spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = spec.eps_e, eps_i = spec.eps_i;
    const TriCoefficient coef = [&mesh, eps_e, eps_i](int t) {
        return mesh.triangles[t].region == Region::Interior ? eps_i : eps_e;
    };
    CellSolution sol;
    sol.spec = spec;
    AssembledSystem sys =
        assemble_p1(mesh, nullptr, coef, rho_source(spec), cm.periodic_pairs, {});
    std::vector<double> u;
    const CgResult cg = pcg(sys.A, sys.rhs, u, 1e-12, 200000, /*deflate=*/true);
    sol.max_rel_residual = cg.rel_residual;
    sol.max_iterations = cg.iterations;
    sol.xi = expand_solution(sys.dofs, u);
    subtract_cell_mean(cm, sol.xi);
    return sol;
}

// The xi limit in its Neumann form: the interface condition n0.grad(xi) = 0
// holds on the interior trace (flux jump / eps_i), so xi is constant in the
// inclusion and its trace is Dirichlet data for the exterior Poisson solve.
CellSolution solve_xi_limit_neumann(const CellProblemSpec& spec) {
    spec.check();
    check_compatibility(spec, /*exterior_only=*/true);
    const CellMesh& cm = *spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = spec.eps_e;
    const TriFilter ext = exterior_filter(cm);
    const TriCoefficient coef = [eps_e](int) { return eps_e; };
    CellSolution sol;
    sol.spec = spec;
    // Interior stage: pure-Neumann Laplace with zero data -> constant; take
    // the zero gauge for the trace.
    std::map<int, double> trace;
    for (const int v : interface_vertices(cm)) trace[v] = 0.0;
    AssembledSystem sys =
        assemble_p1(mesh, ext, coef, rho_source(spec), cm.periodic_pairs, trace);
    std::vector<double> u;
    const CgResult cg = pcg(sys.A, sys.rhs, u, 1e-12, 200000, /*deflate=*/false);
    sol.max_rel_residual = cg.rel_residual;
    sol.max_iterations = cg.iterations;
    std::vector<double> field = expand_solution(sys.dofs, u);
    subtract_cell_mean(cm, field);
    sol.xi = std::move(field);
    return sol;
}

CellSolution solve_xi_limit_constraint(const CellProblemSpec& spec) {
    spec.check();
    check_compatibility(spec, /*exterior_only=*/false);
    const CellMesh& cm = *spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = spec.eps_e;
    const TriFilter ext = exterior_filter(cm);
    const TriCoefficient coef = [eps_e](int) { return eps_e; };
    CellSolution sol;
    sol.spec = spec;
    std::map<int, double> dirichlet;
    for (const int v : interface_vertices(cm)) dirichlet[v] = 0.0;
    AssembledSystem sys =
        assemble_p1(mesh, ext, coef, rho_source(spec), cm.periodic_pairs, dirichlet);
    std::vector<double> u;
    const CgResult cg = pcg(sys.A, sys.rhs, u, 1e-12, 200000, /*deflate=*/false);
    sol.max_rel_residual = cg.rel_residual;
    sol.max_iterations = cg.iterations;
    std::vector<double> field = expand_solution(sys.dofs, u);
    // Interior propagates the interface constant (zero in this gauge).
    const double mean = p1_integral(mesh, nullptr, field) / cm.total_area();
    for (double& v : field) v -= mean;
    sol.xi_constant = -mean;
    sol.xi = std::move(field);
    return sol;
}

CellSolution solve_cell(const CellProblemSpec& spec) {
    switch (spec.mode) {
        case CellMode::PsiFinite: return solve_psi_finite(spec);
        case CellMode::PsiLimitNeumann: return solve_psi_limit_neumann(spec);
        case CellMode::PsiLimitConstraint: return solve_psi_limit_constraint(spec);
        case CellMode::XiFinite: return solve_xi_finite(spec);
        case CellMode::XiLimitNeumann: return solve_xi_limit_neumann(spec);
        case CellMode::XiLimitConstraint: return solve_xi_limit_constraint(spec);
    }
    throw ValidationError("unknown cell mode");
}

double interface_flux_residual(const CellSolution& sol, int component) {
    const CellMesh& cm = *sol.spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const double eps_e = sol.spec.eps_e;
    const TriFilter ext = exterior_filter(cm);
    const TriCoefficient coef = [eps_e](int) { return eps_e; };
    const std::vector<int> iface = interface_vertices(cm);

    if (sol.has_psi()) {
        const Vec2 ek = component == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
        const std::vector<double> r =
            vertex_residuals(mesh, ext, coef, sol.psi[component], nullptr);
        // Discrete flux from the exterior side plus the exact polygonal flux
        // of the constant field e_k.
        double flux = 0.0;
        for (const int v : iface) flux -= r[v];
        for (const auto& e : cm.interface_edges) flux += eps_e * e.length * e.normal.dot(ek);
        return std::abs(flux);
    }
    const std::vector<double> r =
        vertex_residuals(mesh, ext, coef, sol.xi,
                         [&](const Vec2& X) { return eval_xX(sol.spec.rho, sol.spec.anchor_x, X); });
    double flux = 0.0;
    for (const int v : iface) flux -= r[v];
    const double rho_interior = disk_integral(
        sol.spec.geom, [&](Vec2 X) { return eval_xX(sol.spec.rho, sol.spec.anchor_x, X); });
    return std::abs(flux + rho_interior);
}

double psi_energy(const CellSolution& sol, int component) {
    const CellMesh& cm = *sol.spec.mesh;
    const TriMesh& mesh = cm.mesh;
    const Vec2 ek = component == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    double e = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const int ti = static_cast<int>(t);
        const double eps = mesh.triangles[t].region == Region::Interior ? sol.spec.eps_i
                                                                        : sol.spec.eps_e;
        const Vec2 g = tri_gradient(mesh, ti, sol.psi[component]) + ek;
        e += eps * mesh.triangle_area(ti) * g.norm2();
    }
    return e;
}

}  // namespace homog
