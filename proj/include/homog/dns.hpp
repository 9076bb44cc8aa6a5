#pragma once

// Direct numerical simulation of the fine-scale problem at finite delta = 1/N:
// per-cell unit meshes (reusing the cell geometry machinery) scaled and
// stitched into a global conforming mesh, one large P1 solve, cell averaging,
// and the delta -> 0 convergence study against the homogenised model.

#include "homog/macro.hpp"

namespace homog {

enum class DnsMode { Standard, LargeCharge };

struct DnsProblem {
    int N = 8;                    // delta = 1/N
    FieldExpr a_of_x;             // per-cell radius a(cell center)
    double eps_e = 1.0;
    double eps_i = 1e4;           // large finite contrast approximating the limit
    FieldExpr rho;                // slow-only in Standard; rho(x,X) in LargeCharge
    FieldExpr boundary_value;     // Dirichlet g on the outer boundary
    DnsMode mode = DnsMode::Standard;
    int resolution_per_cell = 14; // background grid per unit cell
};

struct DnsField {
    TriMesh mesh;
    std::vector<double> phi;
    std::vector<int> owner_cell;  // per triangle, row-major macro cell index
    int N = 0;
    int unknowns = 0;
    double rel_residual = 0.0;
    int iterations = 0;

    double delta() const { return 1.0 / N; }
};

// Builds the stitched mesh and solves; throws on infeasible per-cell geometry
// (reporting the cell) or when the unknown count exceeds the desk-scale guard.
DnsField solve_full(const DnsProblem& problem);

// Area-weighted per-cell means of phi, located at cell centers (row-major N*N).
std::vector<double> cell_average(const DnsField& field);

struct ConvergenceReport {
    std::vector<double> delta_values;  // strictly decreasing
    std::vector<double> errors;        // L2(cell-averaged DNS - phi0)
    std::vector<int> unknowns;
    std::vector<double> seconds;
    double slope = 0.0;
};

struct ConvergenceOptions {
    std::vector<int> Ns = {8, 16, 32};
    DnsProblem base;                   // N overridden per run
    TableOptions table;                // effective table for the macro model
    int macro_grid_n = 128;
};

ConvergenceReport convergence_study(const ConvergenceOptions& opts);

// CSV: delta,error_L2,unknowns,seconds.
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);

}  // namespace homog
