#include "homog/macro.hpp"

#include <cmath>
#include <iomanip>

namespace homog {

CoefficientField coefficient_field(const MacroProblem& p) {
    if (p.grid_n < 8) throw ValidationError("macro grid_n must be at least 8");
    const int n = p.grid_n;
    CoefficientField cf;
    cf.eps_center.resize(static_cast<std::size_t>(n) * n);
    cf.rho_center.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 x{(i + 0.5) / n, (j + 0.5) / n};
            const std::size_t idx = static_cast<std::size_t>(j) * n + i;
            if (p.uniform_eps) {
                cf.eps_center[idx] = *p.uniform_eps;
            } else {
                if (!p.table) throw ValidationError("macro problem needs an effective table");
                const double a = p.a_of_x.evaluate({{"x1", x.x}, {"x2", x.y}});
                cf.eps_center[idx] = p.table->eps_at(a);
            }
            switch (p.rho_mode) {
                case RhoMode::CellAverage: {
                    if (!p.reference_mesh)
                        throw ValidationError("cell-average mode needs a reference cell mesh");
                    cf.rho_center[idx] = rho_eff_cell_average(p.rho, x, *p.reference_mesh);
                    break;
                }
                case RhoMode::FluxDivergence: {
                    if (!p.table) throw ValidationError("macro problem needs an effective table");
                    cf.rho_center[idx] = rho_eff_flux_divergence(*p.table, p.a_of_x, x).f_form;
                    break;
                }
            }
        }
    }
    return cf;
}

MacroSolution solve_homogenized(const MacroProblem& p) {
    const int n = p.grid_n;
    CoefficientField cf = coefficient_field(p);
    const double h = 1.0 / n;
    const auto idx = [n](int i, int j) { return static_cast<std::size_t>(j) * n + i; };

    std::vector<std::array<double, 3>> triplets;
    std::vector<double> rhs(static_cast<std::size_t>(n) * n, 0.0);
    triplets.reserve(static_cast<std::size_t>(5) * n * n);

    auto g = [&](const Vec2& x) { return p.boundary_value.evaluate({{"x1", x.x}, {"x2", x.y}}); };

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t row = idx(i, j);
            double diag = 0.0;
            const double ec = cf.eps_center[row];
            // Four faces; harmonic-mean transmissibility, half-cell Dirichlet.
            const int di[4] = {-1, 1, 0, 0};
            const int dj[4] = {0, 0, -1, 1};
            for (int f = 0; f < 4; ++f) {
                const int ni = i + di[f], nj = j + dj[f];
                if (ni >= 0 && ni < n && nj >= 0 && nj < n) {
                    const double en = cf.eps_center[idx(ni, nj)];
                    const double t = 2.0 * ec * en / (ec + en);
                    diag += t;
                    triplets.push_back({static_cast<double>(row),
                                        static_cast<double>(idx(ni, nj)), -t});
                } else {
                    const double t = 2.0 * ec;  // half-cell distance to the face
                    diag += t;
                    const Vec2 face{(i + 0.5 + 0.5 * di[f]) / n, (j + 0.5 + 0.5 * dj[f]) / n};
                    rhs[row] += t * g(face);
                }
            }
            triplets.push_back({static_cast<double>(row), static_cast<double>(row), diag});
            rhs[row] += cf.rho_center[row] * h * h;
        }
    }

    CsrMatrix A = CsrMatrix::from_triplets(n * n, triplets);
    std::vector<double> u;
    const CgResult cg = pcg(A, rhs, u, 1e-11, 200000, /*deflate=*/false);

    MacroSolution sol;
    sol.n = n;
    sol.phi = std::move(u);
    sol.eps_center = std::move(cf.eps_center);
    sol.rho_center = std::move(cf.rho_center);
    sol.rel_residual = cg.rel_residual;
    sol.iterations = cg.iterations;
    return sol;
}

double MacroSolution::interpolate(const Vec2& p) const {
    const double gx = std::clamp(p.x * n - 0.5, 0.0, n - 1.0);
    const double gy = std::clamp(p.y * n - 0.5, 0.0, n - 1.0);
    const int i0 = std::min(static_cast<int>(gx), n - 2);
    const int j0 = std::min(static_cast<int>(gy), n - 2);
    const double tx = gx - i0, ty = gy - j0;
    const auto v = [&](int i, int j) { return phi[static_cast<std::size_t>(j) * n + i]; };
    return (1 - tx) * (1 - ty) * v(i0, j0) + tx * (1 - ty) * v(i0 + 1, j0) +
           (1 - tx) * ty * v(i0, j0 + 1) + tx * ty * v(i0 + 1, j0 + 1);
}

void write_macro_solution_csv(std::ostream& os, const MacroSolution& sol) {
    os << "x1,x2,phi0\n" << std::setprecision(17);
    for (int j = 0; j < sol.n; ++j)
        for (int i = 0; i < sol.n; ++i) {
            const Vec2 x = sol.center(i, j);
            os << x.x << ',' << x.y << ',' << sol.value(i, j) << "\n";
        }
}

void write_macro_coefficients_csv(std::ostream& os, const MacroSolution& sol) {
    os << "x1,x2,eps_eff,rho_eff\n" << std::setprecision(17);
    for (int j = 0; j < sol.n; ++j)
        for (int i = 0; i < sol.n; ++i) {
            const Vec2 x = sol.center(i, j);
            const std::size_t k = static_cast<std::size_t>(j) * sol.n + i;
            os << x.x << ',' << x.y << ',' << sol.eps_center[k] << ',' << sol.rho_center[k]
               << "\n";
        }
}

}  // namespace homog
