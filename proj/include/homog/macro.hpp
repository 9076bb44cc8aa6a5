#pragma once

// Homogenised macroscale problem grad.(eps_eff(a(x)) grad phi0) = -rho_eff on
// the unit square with Dirichlet data, discretized by conservative finite
// volumes with harmonic-mean face coefficients. A deliberately different
// discretization from the FEM cell machinery, so macro/DNS agreement is not a
// shared-scheme artifact.

#include "homog/effective.hpp"

namespace homog {

enum class RhoMode { CellAverage, FluxDivergence };

struct MacroProblem {
    FieldExpr a_of_x;
    std::shared_ptr<const EffectiveTable> table;
    RhoMode rho_mode = RhoMode::CellAverage;
    FieldExpr rho;             // rho(x,X); cell-averaged in CellAverage mode
    FieldExpr boundary_value;  // Dirichlet data g(x)
    int grid_n = 64;
    // Reference cell mesh for the cell-average quadrature (any radius works:
    // the average runs over both regions).
    std::shared_ptr<const CellMesh> reference_mesh;
    // Test hook: bypass the table with a constant permittivity.
    std::optional<double> uniform_eps;
};

struct MacroSolution {
    int n = 0;
    std::vector<double> phi;         // n*n cell-center values
    std::vector<double> eps_center;  // coefficient field at centers
    std::vector<double> rho_center;  // source field at centers
    double rel_residual = 0.0;
    int iterations = 0;

    double h() const { return 1.0 / n; }
    Vec2 center(int i, int j) const { return {(i + 0.5) / n, (j + 0.5) / n}; }
    double value(int i, int j) const { return phi[static_cast<std::size_t>(j) * n + i]; }
    // Bilinear interpolation between cell centers (clamped at the margin).
    double interpolate(const Vec2& p) const;
};

// Coefficient and source fields at the cell centers (shared by the solver).
struct CoefficientField {
    std::vector<double> eps_center;
    std::vector<double> rho_center;
};
CoefficientField coefficient_field(const MacroProblem& problem);

MacroSolution solve_homogenized(const MacroProblem& problem);

// CSV exports: `x1,x2,phi0` and `x1,x2,eps_eff,rho_eff`.
void write_macro_solution_csv(std::ostream& os, const MacroSolution& sol);
void write_macro_coefficients_csv(std::ostream& os, const MacroSolution& sol);

}  // namespace homog
