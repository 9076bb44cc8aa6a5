#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "homog/config.hpp"
#include "homog/macro.hpp"

using namespace homog;

namespace {

std::shared_ptr<const CellMesh> reference_mesh() {
    static auto mesh =
        std::make_shared<const CellMesh>(build_cell_mesh(CellGeometry(0.25), 0.05));
    return mesh;
}

MacroProblem base_problem(int n) {
    MacroProblem p;
    p.a_of_x = FieldExpr::parse("0.2");
    p.rho = FieldExpr::parse("0");
    p.boundary_value = FieldExpr::parse("0");
    p.grid_n = n;
    p.uniform_eps = 1.0;
    p.reference_mesh = reference_mesh();
    return p;
}

std::shared_ptr<const EffectiveTable> small_table() {
    static std::shared_ptr<const EffectiveTable> table = [] {
        TableOptions opts;
        opts.a_values = linspace(0.15, 0.3, 5);
        opts.target_h = 0.04;
        opts.with_xi = false;
        return std::make_shared<const EffectiveTable>(build_effective_table(opts));
    }();
    return table;
}

}  // namespace

TEST_CASE("manufactured solution converges at second order in max norm") {
    const auto exact = [](const Vec2& x) {
        return std::sin(kPi * x.x) * std::sin(kPi * x.y);
    };
    std::vector<double> errs;
    for (const int n : {32, 64}) {
        MacroProblem p = base_problem(n);
        p.rho = FieldExpr::parse("2*pi^2*sin(pi*x1)*sin(pi*x2)");
        const MacroSolution s = solve_homogenized(p);
        double e = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                e = std::max(e, std::abs(s.value(i, j) - exact(s.center(i, j))));
        errs.push_back(e);
    }
    const double ratio = errs[0] / errs[1];
    CHECK(ratio >= 3.6);
    CHECK(ratio <= 4.4);
}

TEST_CASE("linear solutions are reproduced exactly") {
    MacroProblem p = base_problem(32);
    p.boundary_value = FieldExpr::parse("x1");
    const MacroSolution s = solve_homogenized(p);
    for (int j = 0; j < s.n; ++j)
        for (int i = 0; i < s.n; ++i)
            CHECK(std::abs(s.value(i, j) - s.center(i, j).x) < 1e-10);
}

TEST_CASE("constant radius degenerates to the constant-coefficient solve") {
    MacroProblem with_table = base_problem(16);
    with_table.uniform_eps.reset();
    with_table.table = small_table();
    with_table.a_of_x = FieldExpr::parse("0.2");
    with_table.rho = FieldExpr::parse("sin(pi*x1)*sin(pi*x2)");
    const MacroSolution a = solve_homogenized(with_table);

    MacroProblem uniform = with_table;
    uniform.uniform_eps = small_table()->eps_at(0.2);
    uniform.table.reset();
    const MacroSolution b = solve_homogenized(uniform);
    for (std::size_t k = 0; k < a.phi.size(); ++k) CHECK(a.phi[k] == b.phi[k]);
}

TEST_CASE("discrete maximum principle with zero source") {
    MacroProblem p = base_problem(24);
    p.boundary_value = FieldExpr::parse("sin(3*x1) + cos(2*x2)");
    p.a_of_x = FieldExpr::parse("0.2 + 0.05*x1");
    p.uniform_eps.reset();
    p.table = small_table();
    const MacroSolution s = solve_homogenized(p);
    double gmin = 1e300, gmax = -1e300;
    const FieldExpr g = FieldExpr::parse("sin(3*x1) + cos(2*x2)");
    for (int k = 0; k <= 200; ++k) {
        const double t = k / 200.0;
        for (const Vec2 x : {Vec2{t, 0.0}, Vec2{t, 1.0}, Vec2{0.0, t}, Vec2{1.0, t}}) {
            const double v = g.evaluate({{"x1", x.x}, {"x2", x.y}});
            gmin = std::min(gmin, v);
            gmax = std::max(gmax, v);
        }
    }
    for (const double v : s.phi) {
        CHECK(v >= gmin - 1e-9);
        CHECK(v <= gmax + 1e-9);
    }
}

TEST_CASE("discrete conservation: boundary fluxes balance the source") {
    MacroProblem p = base_problem(32);
    p.rho = FieldExpr::parse("1 + x1*x2");
    p.boundary_value = FieldExpr::parse("0.2*x1 - 0.1*x2");
    p.a_of_x = FieldExpr::parse("0.2 + 0.05*x1");
    p.uniform_eps.reset();
    p.table = small_table();
    const MacroSolution s = solve_homogenized(p);
    const int n = s.n;
    const double h = s.h();
    const FieldExpr g = FieldExpr::parse("0.2*x1 - 0.1*x2");
    double flux_in = 0.0;
    const auto idx = [n](int i, int j) { return static_cast<std::size_t>(j) * n + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
            for (int f = 0; f < 4; ++f) {
                const int ni = i + di[f], nj = j + dj[f];
                if (ni >= 0 && ni < n && nj >= 0 && nj < n) continue;
                const Vec2 face{(i + 0.5 + 0.5 * di[f]) / n, (j + 0.5 + 0.5 * dj[f]) / n};
                const double gb = g.evaluate({{"x1", face.x}, {"x2", face.y}});
                flux_in += 2.0 * s.eps_center[idx(i, j)] * (gb - s.value(i, j));
            }
        }
    double source = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) source += s.rho_center[idx(i, j)] * h * h;
    CHECK(std::abs(flux_in + source) < 1e-9 * std::max(1.0, std::abs(source)));
}

TEST_CASE("swap symmetry when data is symmetric in x1 and x2") {
    MacroProblem p = base_problem(20);
    p.a_of_x = FieldExpr::parse("0.2 + 0.04*x1*x2");
    p.rho = FieldExpr::parse("sin(pi*x1)*sin(pi*x2)");
    p.uniform_eps.reset();
    p.table = small_table();
    const MacroSolution s = solve_homogenized(p);
    for (int j = 0; j < s.n; ++j)
        for (int i = 0; i < s.n; ++i)
            CHECK(std::abs(s.value(i, j) - s.value(j, i)) < 1e-9);
}

TEST_CASE("pointwise monotone dependence on the source") {
    const char* bumps[3] = {"0.4*sin(pi*x1)*sin(pi*x2)", "x1*(1 - x1)", "0.25*x2*(1 - x2)"};
    for (const char* bump : bumps) {
        MacroProblem p1 = base_problem(16);
        p1.rho = FieldExpr::parse("sin(pi*x1)*sin(pi*x2)");
        MacroProblem p2 = p1;
        p2.rho = FieldExpr::parse(std::string("sin(pi*x1)*sin(pi*x2) + ") + bump);
        const MacroSolution s1 = solve_homogenized(p1);
        const MacroSolution s2 = solve_homogenized(p2);
        for (std::size_t k = 0; k < s1.phi.size(); ++k) CHECK(s2.phi[k] >= s1.phi[k] - 1e-12);
    }
}

TEST_CASE("coefficient field per rho mode") {
    MacroProblem p = base_problem(16);
    p.rho = FieldExpr::parse("1");
    const CoefficientField cf = coefficient_field(p);
    for (const double r : cf.rho_center) CHECK(r == doctest::Approx(1.0).epsilon(1e-10));

    // Flux-divergence mode with no slow variation gives a zero source.
    TableOptions opts;
    opts.a_values = linspace(0.15, 0.3, 5);
    opts.target_h = 0.04;
    opts.rho = FieldExpr::parse("sin(2*pi*X1)");
    MacroProblem q = base_problem(16);
    q.uniform_eps.reset();
    q.table = std::make_shared<const EffectiveTable>(build_effective_table(opts));
    q.rho_mode = RhoMode::FluxDivergence;
    q.a_of_x = FieldExpr::parse("0.22");
    const CoefficientField cf2 = coefficient_field(q);
    for (const double r : cf2.rho_center) CHECK(r == 0.0);
}

TEST_CASE("validation of the grid size") {
    MacroProblem p = base_problem(4);
    CHECK_THROWS_AS(solve_homogenized(p), ValidationError);
}

TEST_CASE("csv exports") {
    const MacroSolution s = solve_homogenized(base_problem(8));
    std::ostringstream os1, os2;
    write_macro_solution_csv(os1, s);
    write_macro_coefficients_csv(os2, s);
    CHECK(os1.str().rfind("x1,x2,phi0\n", 0) == 0);
    CHECK(os2.str().rfind("x1,x2,eps_eff,rho_eff\n", 0) == 0);
}
