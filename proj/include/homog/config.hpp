#pragma once

// Configuration-driven experiment front end: a single JSON config file with
// one section per module, full static validation before any solve, and the
// experiment runners behind the CLI.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "homog/cellsolve.hpp"
#include "homog/dns.hpp"

namespace homog {

struct CellSection {
    double a = 0.2;
    Vec2 grad_a{0.0, 0.0};
    double eps_e = 1.0;
    double eps_i = std::numeric_limits<double>::infinity();
    CellMode psi_mode = CellMode::PsiLimitNeumann;
    double target_h = 0.02;
    bool export_solution = false;  // write solution.txt in the mesh debug format
};

struct TableSection {
    double a_min = 0.1, a_max = 0.3;
    int count = 9;
    double eps_e = 1.0;
    double eps_i = std::numeric_limits<double>::infinity();
    CellMode psi_mode = CellMode::PsiLimitNeumann;
    std::string rho = "sin(2*pi*X1)";
    double target_h = 0.025;
};

struct MsintSection {
    std::string q1, q2, a_of_x;
    Vec2 x_hat{0.5, 0.5};
    std::vector<double> deltas{0.1, 0.05, 0.025};
    int n_quad = 256;
    int measure_exponent = 1;
    double arc_start = 0.4, arc_end = 2.8;
};

struct MacroSection {
    std::string a_of_x, rho, boundary_value;
    RhoMode rho_mode = RhoMode::CellAverage;
    int grid_n = 64;
};

struct DnsSection {
    std::vector<int> Ns{8, 16, 32};
    std::string a_of_x, rho, boundary_value;
    double eps_e = 1.0, eps_i = 1e4;
    DnsMode mode = DnsMode::Standard;
    int resolution_per_cell = 14;
    int macro_grid_n = 128;
    double table_a_min = 0.18, table_a_max = 0.32;
    int table_count = 8;
    double table_target_h = 0.03;
    bool export_fine_field = false;  // write the coarsest fine field (large)
};

struct RunConfig {
    std::string raw_text;  // exact file bytes, hashed into the manifest
    std::optional<CellSection> cell;
    std::optional<TableSection> table;
    std::optional<MsintSection> msint;
    std::optional<MacroSection> macro;
    std::optional<DnsSection> dns;
};

const std::vector<std::string>& experiment_names();  // cell, eff-table, ...

// Parses the JSON text; malformed JSON or unknown enum strings throw
// ValidationError with a description.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

struct Violation {
    std::string where;
    std::string message;
};

// Full static validation without solving: expression syntax (with character
// positions), numeric ranges, mode consistency, and table coverage of the
// a(x) image on a 64x64 sample. Empty result means runnable.
std::vector<Violation> validate(const RunConfig& config, const std::string& experiment);

// Executes one experiment, writing CSV outputs plus a manifest into out_dir.
// Throws ValidationError (config problems) or NumericalError/GeometryError
// (solver failures); the CLI maps these to exit codes 2 and 3.
void run_experiment(const RunConfig& config, const std::string& experiment,
                    const std::filesystem::path& out_dir, int threads);

// Helpers shared with tests.
TableOptions table_options_from(const TableSection& section, int threads);
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace homog
