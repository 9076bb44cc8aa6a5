#pragma once

// Assembly of effective coefficients from cell solutions: the effective
// permittivity by its volume and boundary formulas, the effective charge by
// cell average and by both slow-divergence-of-cell-flux forms, and tabulation
// over the inclusion radius for the macroscale solver.

#include "homog/cellsolve.hpp"

namespace homog {

enum class EpsFormula { Volume, Boundary };

struct EffectiveCoefficients {
    Mat2 eps_eff;
    EpsFormula formula = EpsFormula::Volume;
    double a = 0.0;
    double eps_e = 1.0;
    double eps_i = 1.0;  // infinity() for limit solutions

    // Symmetry / positive-definiteness / Voigt-Reuss checks; throws
    // NumericalError with the offending quantity on violation.
    void check() const;
    double isotropic_value() const { return 0.5 * (eps_eff(0, 0) + eps_eff(1, 1)); }
};

// (eps_eff)_ij = int_D eps (delta_ij + dPsi_i/dX_j) dX  (finite-contrast solves).
EffectiveCoefficients epsilon_volume(const CellSolution& sol);

// (eps_eff)_ij = eps_e (delta_ij + oint_{dD} X_j dPsi_i/dX_k n_k dS), the outer
// cell boundary integral evaluated variationally (consistent discrete fluxes at
// boundary vertex images, periodic pairing supplies the image coordinates).
EffectiveCoefficients epsilon_boundary(const CellSolution& sol);

// int_D rho(x, X) dX by the degree-2 composite rule over the mesh (both regions).
double rho_eff_cell_average(const FieldExpr& rho, const Vec2& x, const CellMesh& mesh);

struct EffectiveTable {
    std::vector<double> a_values;
    std::vector<double> eps_iso;
    std::vector<Vec2> F;  // int_D eps grad_X xi dX
    std::vector<Vec2> G;  // oint_{dD} eps_e X (grad xi . n) dS + int_{D_e} rho X dX

    std::size_t size() const { return a_values.size(); }
    // Monotone-cubic (overshoot-free) interpolation of eps_iso.
    double eps_at(double a) const;
    // Valid query range for the derivative forms (one table step inside).
    std::pair<double, double> derivative_range() const;
};

struct TableOptions {
    std::vector<double> a_values;
    double eps_e = 1.0;
    double eps_i = std::numeric_limits<double>::infinity();
    CellMode psi_mode = CellMode::PsiLimitNeumann;
    FieldExpr rho;           // defaults to sin(2 pi X1) when empty
    double target_h = 0.025;
    bool with_xi = true;     // skip the xi solves when only eps_iso is needed
    double xi_surrogate_contrast = 1e6;  // finite stand-in for F in limit tables
    int threads = 1;
};

// For each radius: builds the mesh (grid adapted to small radii), solves the
// configured Psi mode plus the xi problems, and stores eps_iso, F and G.
// F is the volume-flux form from the finite-contrast xi (surrogate contrast
// for limit tables); G is the boundary form from the integral-constraint xi
// (limit) or from the same finite xi (finite tables).
EffectiveTable build_effective_table(const TableOptions& opts);

// The per-solution flux vectors behind the table columns, exposed for the
// route cross-checks. `full_domain_moment=false` reproduces the formal limit
// bookkeeping that restricts the charge moment to D_e.
Vec2 flux_volume_vector(const CellSolution& sol);
Vec2 flux_boundary_vector(const CellSolution& sol, bool full_domain_moment = true);

struct RhoEffValue {
    double f_form = 0.0;  // grad_x . F(a(x)), the canonical value
    double g_form = 0.0;  // grad_x . G(a(x)), the boundary-form cross-check
};

// Chain rule rho_eff = dF/da . grad_x a with dF/da by central differences on
// the table (interpolated between nodes). Throws when a(x) is within one table
// step of the ends or the table has fewer than 3 entries.
RhoEffValue rho_eff_flux_divergence(const EffectiveTable& table, const FieldExpr& a_of_x,
                                    const Vec2& x);

// CSV export: header `a,eps_iso,F1,F2,G1,G2`, 17 significant digits.
void write_table_csv(std::ostream& os, const EffectiveTable& table);

}  // namespace homog
