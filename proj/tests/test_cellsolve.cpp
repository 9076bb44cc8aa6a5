#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "homog/cellsolve.hpp"
#include "homog/effective.hpp"

using namespace homog;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<const CellMesh> mesh_at(double a, double h) {
    return std::make_shared<const CellMesh>(build_cell_mesh(CellGeometry(a), h));
}

CellProblemSpec make_spec(std::shared_ptr<const CellMesh> mesh, double a, double eps_i,
                          CellMode mode, const char* rho = nullptr) {
    CellProblemSpec s;
    s.mesh = std::move(mesh);
    s.geom = CellGeometry(a);
    s.eps_e = 1.0;
    s.eps_i = eps_i;
    s.mode = mode;
    if (rho) s.rho = FieldExpr::parse(rho);
    return s;
}

double l2_exterior_diff(const CellMesh& cm, const std::vector<double>& u,
                        const std::vector<double>& v) {
    std::vector<double> d(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) d[i] = (u[i] - v[i]) * (u[i] - v[i]);
    return std::sqrt(p1_integral(cm.mesh, exterior_filter(cm), d));
}

}  // namespace

TEST_CASE("no contrast gives the zero corrector") {
    auto mesh = mesh_at(0.25, 0.05);
    const CellSolution s = solve_psi_finite(make_spec(mesh, 0.25, 1.0, CellMode::PsiFinite));
    for (int k = 0; k < 2; ++k)
        for (const double v : s.psi[k]) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("solution invariants: zero mean, exact periodicity, residual") {
    auto mesh = mesh_at(0.25, 0.04);
    const CellSolution s = solve_psi_finite(make_spec(mesh, 0.25, 1e3, CellMode::PsiFinite));
    CHECK(s.max_rel_residual <= 1e-10);
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(p1_integral(mesh->mesh, nullptr, s.psi[k])) < 1e-10);
        for (const auto& [slave, master] : mesh->periodic_pairs)
            CHECK(s.psi[k][slave] == s.psi[k][master]);
    }
}

TEST_CASE("dilute-limit oracle at a=0.2, contrast 1e6") {
    auto mesh = mesh_at(0.2, 0.02);
    const CellSolution s = solve_psi_finite(make_spec(mesh, 0.2, 1e6, CellMode::PsiFinite));
    const double eps = epsilon_volume(s).isotropic_value();
    // Clausius-Mossotti dilute value 1 + 2 pi a^2, spec tolerance 3%.
    CHECK(std::abs(eps - 1.2513) < 0.04);
}

TEST_CASE("square-lattice symmetry: Psi1(X1,X2) = Psi2(X2,X1)") {
    auto mesh = mesh_at(0.2, 0.04);
    const CellSolution s = solve_psi_finite(make_spec(mesh, 0.2, 100.0, CellMode::PsiFinite));
    const PointLocator loc(mesh->mesh);
    for (const Vec2 p : {Vec2{0.12, 0.33}, Vec2{0.81, 0.64}, Vec2{0.4, 0.52}, Vec2{0.28, 0.71}}) {
        const auto a = eval_p1(mesh->mesh, loc, s.psi[0], p);
        const auto b = eval_p1(mesh->mesh, loc, s.psi[1], {p.y, p.x});
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(std::abs(*a - *b) < 1e-9);
    }
}

TEST_CASE("D4 reflection symmetry of the corrector") {
    auto mesh = mesh_at(0.25, 0.04);
    const CellSolution s = solve_psi_finite(make_spec(mesh, 0.25, 1e3, CellMode::PsiFinite));
    const PointLocator loc(mesh->mesh);
    for (const Vec2 p : {Vec2{0.2, 0.3}, Vec2{0.7, 0.8}, Vec2{0.15, 0.62}}) {
        // X1 -> 1-X1: Psi1 odd, Psi2 even.
        const auto u = eval_p1(mesh->mesh, loc, s.psi[0], p);
        const auto um = eval_p1(mesh->mesh, loc, s.psi[0], {1.0 - p.x, p.y});
        REQUIRE((u && um));
        CHECK(std::abs(*u + *um) < 1e-9);
        const auto v = eval_p1(mesh->mesh, loc, s.psi[1], p);
        const auto vm = eval_p1(mesh->mesh, loc, s.psi[1], {1.0 - p.x, p.y});
        REQUIRE((v && vm));
        CHECK(std::abs(*v - *vm) < 1e-9);
    }
}

TEST_CASE("limit modes agree with each other and with huge finite contrast") {
    auto mesh = mesh_at(0.2, 0.02);
    const CellSolution fin = solve_psi_finite(make_spec(mesh, 0.2, 1e8, CellMode::PsiFinite));
    const CellSolution neu =
        solve_psi_limit_neumann(make_spec(mesh, 0.2, kInf, CellMode::PsiLimitNeumann));
    const CellSolution con =
        solve_psi_limit_constraint(make_spec(mesh, 0.2, kInf, CellMode::PsiLimitConstraint));
    const std::vector<double> zero(neu.psi[0].size(), 0.0);
    const double scale = l2_exterior_diff(*mesh, neu.psi[0], zero);
    CHECK(l2_exterior_diff(*mesh, fin.psi[0], neu.psi[0]) / scale < 1e-3);
    CHECK(l2_exterior_diff(*mesh, neu.psi[0], con.psi[0]) / scale < 1e-3);
}

TEST_CASE("limit corrector shrinks with the inclusion") {
    double prev = 1e9;
    for (const double a : {0.2, 0.1, 0.05}) {
        auto mesh = mesh_at(a, 0.02);
        const CellSolution s =
            solve_psi_limit_neumann(make_spec(mesh, a, kInf, CellMode::PsiLimitNeumann));
        std::vector<double> sq(s.psi[0].size());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = s.psi[0][i] * s.psi[0][i];
        const double norm = std::sqrt(p1_integral(mesh->mesh, exterior_filter(*mesh), sq));
        CHECK(norm < prev);
        prev = norm;
    }
}

TEST_CASE("constraint mode: interior constant and enforced flux") {
    auto mesh = mesh_at(0.25, 0.04);
    const CellSolution s =
        solve_psi_limit_constraint(make_spec(mesh, 0.25, kInf, CellMode::PsiLimitConstraint));
    CHECK(s.inclusion_constants.x == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.inclusion_constants.y == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(interface_flux_residual(s, 0) < 1e-10);
    CHECK(interface_flux_residual(s, 1) < 1e-10);
    for (int k = 0; k < 2; ++k)
        CHECK(std::abs(p1_integral(mesh->mesh, nullptr, s.psi[k])) < 1e-10);
}

TEST_CASE("xi: zero charge gives the zero field in all three modes") {
    auto mesh = mesh_at(0.25, 0.05);
    for (const CellMode mode :
         {CellMode::XiFinite, CellMode::XiLimitNeumann, CellMode::XiLimitConstraint}) {
        const double eps_i = mode == CellMode::XiFinite ? 10.0 : kInf;
        const CellSolution s = solve_cell(make_spec(mesh, 0.25, eps_i, mode, "0"));
        for (const double v : s.xi) CHECK(std::abs(v) < 1e-12);
        if (mode == CellMode::XiLimitConstraint) CHECK(s.xi_constant == doctest::Approx(0.0));
    }
}

TEST_CASE("xi compatibility violations are rejected with the integral named") {
    auto mesh = mesh_at(0.25, 0.05);
    CHECK_THROWS_AS(solve_xi_finite(make_spec(mesh, 0.25, 10.0, CellMode::XiFinite, "1")),
                    NumericalError);
    // cos(2 pi X1) integrates to zero over D but not over D_e.
    CHECK_THROWS_AS(solve_xi_limit_neumann(
                        make_spec(mesh, 0.25, kInf, CellMode::XiLimitNeumann, "cos(2*pi*X1)")),
                    NumericalError);
}

TEST_CASE("xi limit Neumann accepts a charge balanced by a compensating constant") {
    const double a = 0.25;
    auto mesh = mesh_at(a, 0.04);
    // cos(2 pi X1) has zero mean over D but not over D_e; shift it.
    const CellGeometry geom(a);
    const double c0 = exterior_integral(geom, [](Vec2 X) {
                          return std::cos(2.0 * kPi * X.x);
                      }) / (1.0 - kPi * a * a);
    std::ostringstream rho;
    rho.precision(17);
    rho << "cos(2*pi*X1) - (" << c0 << ")";
    const CellSolution s = solve_xi_limit_neumann(
        make_spec(mesh, a, kInf, CellMode::XiLimitNeumann, rho.str().c_str()));
    CHECK(s.max_rel_residual < 1e-10);
    CHECK(std::abs(p1_integral(mesh->mesh, nullptr, s.xi)) < 1e-10);
}

TEST_CASE("manufactured xi: rho = 4 pi^2 sin(2 pi X1) at unit permittivity") {
    std::vector<double> hs = {0.08, 0.04, 0.02}, errs;
    for (const double h : hs) {
        auto mesh = mesh_at(0.25, h);
        const CellSolution s = solve_xi_finite(
            make_spec(mesh, 0.25, 1.0, CellMode::XiFinite, "4*pi^2*sin(2*pi*X1)"));
        std::vector<double> sq(s.xi.size());
        for (std::size_t v = 0; v < sq.size(); ++v) {
            const double exact = std::sin(2.0 * kPi * mesh->mesh.vertices[v].x);
            sq[v] = (s.xi[v] - exact) * (s.xi[v] - exact);
        }
        errs.push_back(std::sqrt(p1_integral(mesh->mesh, nullptr, sq)));
    }
    CHECK(errs[0] < 0.05);
    CHECK(fit_loglog_slope(hs, errs) >= 1.8);
}

TEST_CASE("xi limit modes: zero mean, residual, odd symmetry for odd charge") {
    auto mesh = mesh_at(0.25, 0.04);
    for (const CellMode mode : {CellMode::XiLimitNeumann, CellMode::XiLimitConstraint}) {
        const CellSolution s = solve_cell(make_spec(mesh, 0.25, kInf, mode, "sin(2*pi*X1)"));
        CHECK(s.max_rel_residual < 1e-10);
        CHECK(std::abs(p1_integral(mesh->mesh, nullptr, s.xi)) < 1e-10);
        const PointLocator loc(mesh->mesh);
        for (const Vec2 p : {Vec2{0.1, 0.37}, Vec2{0.31, 0.8}}) {
            const auto u = eval_p1(mesh->mesh, loc, s.xi, p);
            const auto um = eval_p1(mesh->mesh, loc, s.xi, {1.0 - p.x, p.y});
            REQUIRE((u && um));
            CHECK(std::abs(*u + *um) < 1e-9);
        }
    }
}

TEST_CASE("xi constraint: zero enclosed charge means zero net interface flux") {
    // sin(2 pi X1) has no net charge inside the centered inclusion, so the
    // closure reduces to a vanishing net flux through the interface.
    auto mesh = mesh_at(0.25, 0.04);
    const CellSolution s =
        solve_cell(make_spec(mesh, 0.25, kInf, CellMode::XiLimitConstraint, "sin(2*pi*X1)"));
    CHECK(interface_flux_residual(s) < 1e-10);
}

TEST_CASE("energy decreases as the contrast is removed") {
    auto mesh = mesh_at(0.25, 0.04);
    double prev = 1e300;
    for (const double eps_i : {1e4, 1e2, 10.0, 1.0}) {
        const CellSolution s = solve_psi_finite(make_spec(mesh, 0.25, eps_i, CellMode::PsiFinite));
        const double e = psi_energy(s, 0);
        CHECK(e < prev + 1e-12);
        prev = e;
    }
}

TEST_CASE("mesh-refinement self-convergence of the corrector") {
    const std::vector<double> hs = {0.08, 0.04, 0.02};
    std::vector<CellSolution> sols;
    std::vector<std::shared_ptr<const CellMesh>> meshes;
    for (const double h : hs) {
        meshes.push_back(mesh_at(0.25, h));
        sols.push_back(solve_psi_finite(make_spec(meshes.back(), 0.25, 1e3, CellMode::PsiFinite)));
    }
    std::vector<double> diffs, hs2 = {hs[0], hs[1]};
    for (int lvl = 0; lvl < 2; ++lvl) {
        const PointLocator la(meshes[lvl]->mesh), lb(meshes[lvl + 1]->mesh);
        double sum = 0.0;
        int n = 0;
        for (int i = 1; i < 20; ++i)
            for (int j = 1; j < 20; ++j) {
                const Vec2 p{i / 20.0, j / 20.0};
                const auto a = eval_p1(meshes[lvl]->mesh, la, sols[lvl].psi[0], p);
                const auto b = eval_p1(meshes[lvl + 1]->mesh, lb, sols[lvl + 1].psi[0], p);
                if (a && b) {
                    sum += (*a - *b) * (*a - *b);
                    ++n;
                }
            }
        diffs.push_back(std::sqrt(sum / n));
    }
    CHECK(fit_loglog_slope(hs2, diffs) >= 1.8);
}

TEST_CASE("mode/eps consistency is validated") {
    auto mesh = mesh_at(0.25, 0.05);
    CHECK_THROWS_AS(solve_psi_finite(make_spec(mesh, 0.25, kInf, CellMode::PsiFinite)),
                    ValidationError);
    CHECK_THROWS_AS(
        solve_psi_limit_neumann(make_spec(mesh, 0.25, 100.0, CellMode::PsiLimitNeumann)),
        ValidationError);
    CHECK_THROWS_AS(solve_xi_finite(make_spec(mesh, 0.25, 10.0, CellMode::XiFinite)),
                    ValidationError);
}
