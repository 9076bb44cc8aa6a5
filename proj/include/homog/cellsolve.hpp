#pragma once

// Finite-element solution of the six unit-cell problems: the corrector Psi at
// finite contrast, its perfect-dielectric limit in Neumann form and in
// integral-constraint form, and the charge corrector xi in the same three
// flavors. All solutions are periodic with zero cell mean.

#include <memory>

#include "homog/expr.hpp"
#include "homog/fem.hpp"
#include "homog/geometry.hpp"

namespace homog {

enum class CellMode {
    PsiFinite,
    PsiLimitNeumann,
    PsiLimitConstraint,
    XiFinite,
    XiLimitNeumann,
    XiLimitConstraint,
};

bool is_limit_mode(CellMode m);
bool is_xi_mode(CellMode m);
const char* to_string(CellMode m);

struct CellProblemSpec {
    std::shared_ptr<const CellMesh> mesh;
    CellGeometry geom{0.25};
    double eps_e = 1.0;
    double eps_i = 1.0;   // infinity() for limit modes
    CellMode mode = CellMode::PsiFinite;
    FieldExpr rho;        // XI modes only
    Vec2 anchor_x{0.0, 0.0};

    // Throws ValidationError on inconsistent mode/eps_i combinations.
    void check() const;
};

struct CellSolution {
    CellProblemSpec spec;
    // Per-vertex fields over the full mesh (interior filled per mode).
    std::array<std::vector<double>, 2> psi;   // empty for XI modes
    std::vector<double> xi;                   // empty for PSI modes
    Vec2 inclusion_constants{0.0, 0.0};       // c_k of Psi_k = -X_k + c_k (constraint mode)
    double xi_constant = 0.0;                 // interior constant of xi (constraint mode)
    double max_rel_residual = 0.0;
    int max_iterations = 0;

    bool has_psi() const { return !psi[0].empty(); }
    bool has_xi() const { return !xi.empty(); }
};

CellSolution solve_psi_finite(const CellProblemSpec& spec);
CellSolution solve_psi_limit_neumann(const CellProblemSpec& spec);
CellSolution solve_psi_limit_constraint(const CellProblemSpec& spec);
CellSolution solve_xi_finite(const CellProblemSpec& spec);
CellSolution solve_xi_limit_neumann(const CellProblemSpec& spec);
CellSolution solve_xi_limit_constraint(const CellProblemSpec& spec);

// Dispatch on spec.mode.
CellSolution solve_cell(const CellProblemSpec& spec);

// Discrete flux-constraint residual |∮ eps_e (grad Psi_k + e_k).n0 dS| through
// the inclusion boundary, evaluated variationally (exact for the scheme). For
// XI solutions, returns |∮ eps_e grad xi.n0 dS + ∫_{D_i} rho dX|.
double interface_flux_residual(const CellSolution& sol, int component = 0);

// Energy ∫ eps |grad Psi_k + e_k|^2 dX over the cell (finite mode).
double psi_energy(const CellSolution& sol, int component);

// Interior / exterior triangle filters and region coefficient helpers.
TriFilter exterior_filter(const CellMesh& cm);
TriFilter interior_filter(const CellMesh& cm);

}  // namespace homog
