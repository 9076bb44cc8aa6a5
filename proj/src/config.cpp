#include "homog/config.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "homog/acceptance.hpp"
#include "homog/io.hpp"
#include "homog/msint.hpp"

namespace homog {

using nlohmann::json;

namespace {

double parse_eps(const json& v, const std::string& where) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ValidationError(where + ": permittivity must be a number or \"inf\"");
    }
    return v.get<double>();
}

CellMode parse_psi_mode(const std::string& s, const std::string& where) {
    if (s == "psi-finite") return CellMode::PsiFinite;
    if (s == "psi-limit-neumann") return CellMode::PsiLimitNeumann;
    if (s == "psi-limit-constraint") return CellMode::PsiLimitConstraint;
    throw ValidationError(where + ": unknown psi mode '" + s + "'");
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key))
        throw ValidationError(where + ": missing required field '" + key + "'");
    return j.at(key).get<T>();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"cell",  "eff-table",    "msint",
                                                   "macro", "dns-converge", "paper-suite"};
    return names;
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    cfg.raw_text = text;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (j.contains("cell")) {
        const json& s = j["cell"];
        CellSection c;
        c.a = require<double>(s, "a", "cell");
        if (s.contains("grad_a")) {
            const auto g = s["grad_a"].get<std::vector<double>>();
            if (g.size() != 2) throw ValidationError("cell.grad_a must have two components");
            c.grad_a = {g[0], g[1]};
        }
        c.eps_e = require<double>(s, "eps_e", "cell");
        if (!s.contains("eps_i")) throw ValidationError("cell: missing required field 'eps_i'");
        c.eps_i = parse_eps(s["eps_i"], "cell.eps_i");
        c.psi_mode = parse_psi_mode(require<std::string>(s, "psi_mode", "cell"), "cell.psi_mode");
        c.target_h = require<double>(s, "target_h", "cell");
        c.export_solution = require<bool>(s, "export_solution", "cell");
        cfg.cell = c;
    }
    if (j.contains("table")) {
        const json& s = j["table"];
        TableSection t;
        t.a_min = require<double>(s, "a_min", "table");
        t.a_max = require<double>(s, "a_max", "table");
        t.count = require<int>(s, "count", "table");
        t.eps_e = require<double>(s, "eps_e", "table");
        if (!s.contains("eps_i")) throw ValidationError("table: missing required field 'eps_i'");
        t.eps_i = parse_eps(s["eps_i"], "table.eps_i");
        t.psi_mode =
            parse_psi_mode(require<std::string>(s, "psi_mode", "table"), "table.psi_mode");
        t.rho = require<std::string>(s, "rho", "table");
        t.target_h = require<double>(s, "target_h", "table");
        cfg.table = t;
    }
    if (j.contains("msint")) {
        const json& s = j["msint"];
        MsintSection m;
        m.q1 = require<std::string>(s, "Q1", "msint");
        m.q2 = require<std::string>(s, "Q2", "msint");
        m.a_of_x = require<std::string>(s, "a_of_x", "msint");
        const auto xh = require<std::vector<double>>(s, "x_hat", "msint");
        if (xh.size() != 2) throw ValidationError("msint.x_hat must have two components");
        m.x_hat = {xh[0], xh[1]};
        m.deltas = require<std::vector<double>>(s, "deltas", "msint");
        m.n_quad = require<int>(s, "n_quad", "msint");
        m.measure_exponent = require<int>(s, "measure_exponent", "msint");
        const auto arc = require<std::vector<double>>(s, "arc", "msint");
        if (arc.size() != 2) throw ValidationError("msint.arc must be [theta_start, theta_end]");
        m.arc_start = arc[0];
        m.arc_end = arc[1];
        cfg.msint = m;
    }
    if (j.contains("macro")) {
        const json& s = j["macro"];
        MacroSection m;
        m.a_of_x = require<std::string>(s, "a_of_x", "macro");
        m.rho = require<std::string>(s, "rho", "macro");
        m.boundary_value = require<std::string>(s, "boundary_value", "macro");
        const std::string mode = require<std::string>(s, "rho_mode", "macro");
        if (mode == "cell-average") m.rho_mode = RhoMode::CellAverage;
        else if (mode == "flux-divergence") m.rho_mode = RhoMode::FluxDivergence;
        else throw ValidationError("macro.rho_mode: unknown mode '" + mode + "'");
        m.grid_n = require<int>(s, "grid_n", "macro");
        cfg.macro = m;
    }
    if (j.contains("dns")) {
        const json& s = j["dns"];
        DnsSection d;
        d.Ns = require<std::vector<int>>(s, "Ns", "dns");
        d.a_of_x = require<std::string>(s, "a_of_x", "dns");
        d.rho = require<std::string>(s, "rho", "dns");
        d.boundary_value = require<std::string>(s, "boundary_value", "dns");
        d.eps_e = require<double>(s, "eps_e", "dns");
        d.eps_i = require<double>(s, "eps_i", "dns");
        const std::string mode = require<std::string>(s, "mode", "dns");
        if (mode == "standard") d.mode = DnsMode::Standard;
        else if (mode == "large-charge") d.mode = DnsMode::LargeCharge;
        else throw ValidationError("dns.mode: unknown mode '" + mode + "'");
        d.resolution_per_cell = require<int>(s, "resolution_per_cell", "dns");
        d.macro_grid_n = require<int>(s, "macro_grid_n", "dns");
        d.table_a_min = require<double>(s, "table_a_min", "dns");
        d.table_a_max = require<double>(s, "table_a_max", "dns");
        d.table_count = require<int>(s, "table_count", "dns");
        d.table_target_h = require<double>(s, "table_target_h", "dns");
        d.export_fine_field = require<bool>(s, "export_fine_field", "dns");
        cfg.dns = d;
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
    return v;
}

TableOptions table_options_from(const TableSection& s, int threads) {
    TableOptions opts;
    opts.a_values = linspace(s.a_min, s.a_max, s.count);
    opts.eps_e = s.eps_e;
    opts.eps_i = s.eps_i;
    opts.psi_mode = s.psi_mode;
    opts.rho = FieldExpr::parse(s.rho);
    opts.target_h = s.target_h;
    opts.threads = threads;
    return opts;
}

namespace {

void check_expr(std::vector<Violation>& out, const std::string& where, const std::string& text,
                bool slow_only = false) {
    try {
        const FieldExpr e = FieldExpr::parse(text);
        if (slow_only) {
            for (const auto& v : e.variables())
                if (v == "X1" || v == "X2")
                    out.push_back({where, "expression must not use fast variables (" + v + ")"});
        }
    } catch (const ParseError& e) {
        out.push_back({where, e.what()});
    }
}

// Image of a(x) over a 64x64 sample of the unit square.
std::pair<double, double> radius_image(const FieldExpr& a_of_x) {
    double lo = 1e300, hi = -1e300;
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i) {
            const double v = a_of_x.evaluate(
                {{"x1", (i + 0.5) / 64.0}, {"x2", (j + 0.5) / 64.0}});
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    return {lo, hi};
}

}  // namespace

std::vector<Violation> validate(const RunConfig& cfg, const std::string& experiment) {
    std::vector<Violation> out;
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
        out.push_back({"experiment", "unknown experiment '" + experiment + "'"});
        return out;
    }

    auto need = [&](bool present, const char* section) {
        if (!present) out.push_back({section, "section required by experiment '" + experiment +
                                                  "' is missing"});
        return present;
    };

    if (cfg.cell) {
        const CellSection& c = *cfg.cell;
        if (!(c.a > 0.0 && c.a < 0.5))
            out.push_back({"cell.a", "radius " + std::to_string(c.a) + " outside (0, 0.5)"});
        if (!(c.eps_e > 0.0)) out.push_back({"cell.eps_e", "must be positive"});
        if (!(c.target_h > 0.0 && c.target_h <= 0.1))
            out.push_back({"cell.target_h", "must lie in (0, 0.1]"});
        const bool inf = std::isinf(c.eps_i);
        if (is_limit_mode(c.psi_mode) != inf)
            out.push_back({"cell.psi_mode", "limit modes require eps_i = \"inf\" and finite "
                                            "modes a finite eps_i"});
        if (!inf && !(c.eps_i > 0.0)) out.push_back({"cell.eps_i", "must be positive"});
    }
    if (cfg.table) {
        const TableSection& t = *cfg.table;
        if (!(t.a_min > 0.02 && t.a_max < 0.45 && t.a_min < t.a_max))
            out.push_back({"table.a_min/a_max", "need 0.02 < a_min < a_max < 0.45"});
        if (t.count < 5) out.push_back({"table.count", "need at least 5 radii"});
        if (!(t.target_h > 0.0 && t.target_h <= 0.1))
            out.push_back({"table.target_h", "must lie in (0, 0.1]"});
        if (is_limit_mode(t.psi_mode) != std::isinf(t.eps_i))
            out.push_back({"table.psi_mode", "mode/eps_i mismatch"});
        check_expr(out, "table.rho", t.rho);
    }
    if (cfg.msint) {
        const MsintSection& m = *cfg.msint;
        check_expr(out, "msint.Q1", m.q1);
        check_expr(out, "msint.Q2", m.q2);
        check_expr(out, "msint.a_of_x", m.a_of_x, /*slow_only=*/true);
        if (m.deltas.size() < 3) out.push_back({"msint.deltas", "need at least 3 values"});
        for (const double d : m.deltas)
            if (!(d > 0.0 && d <= 0.2))
                out.push_back({"msint.deltas", "delta " + std::to_string(d) +
                                                   " outside (0, 0.2]"});
        if (m.n_quad < 8) out.push_back({"msint.n_quad", "need at least 8 points"});
        if (m.measure_exponent < 0 || m.measure_exponent > 3)
            out.push_back({"msint.measure_exponent", "expected 0..3"});
        if (!(m.arc_end > m.arc_start)) out.push_back({"msint.arc", "degenerate arc"});
        if (out.empty()) {
            const FieldExpr a = FieldExpr::parse(m.a_of_x);
            const double a0 =
                a.evaluate({{"x1", m.x_hat.x}, {"x2", m.x_hat.y}});
            if (!(a0 > 0.0 && a0 < 0.5))
                out.push_back({"msint.a_of_x", "a(x_hat) = " + std::to_string(a0) +
                                                   " outside (0, 0.5)"});
        }
    }
    if (cfg.macro) {
        const MacroSection& m = *cfg.macro;
        check_expr(out, "macro.a_of_x", m.a_of_x, /*slow_only=*/true);
        check_expr(out, "macro.rho", m.rho,
                   /*slow_only=*/m.rho_mode == RhoMode::FluxDivergence);
        check_expr(out, "macro.boundary_value", m.boundary_value, /*slow_only=*/true);
        if (m.grid_n < 8) out.push_back({"macro.grid_n", "need grid_n >= 8"});
    }
    if (cfg.dns) {
        const DnsSection& d = *cfg.dns;
        if (d.Ns.size() < 3) out.push_back({"dns.Ns", "need at least 3 resolutions"});
        for (std::size_t i = 0; i < d.Ns.size(); ++i) {
            if (d.Ns[i] < 4) out.push_back({"dns.Ns", "N must be >= 4"});
            if (i > 0 && d.Ns[i] <= d.Ns[i - 1])
                out.push_back({"dns.Ns", "must be strictly increasing"});
        }
        check_expr(out, "dns.a_of_x", d.a_of_x, /*slow_only=*/true);
        check_expr(out, "dns.rho", d.rho, /*slow_only=*/d.mode == DnsMode::Standard);
        check_expr(out, "dns.boundary_value", d.boundary_value, /*slow_only=*/true);
        if (!(d.eps_e > 0.0 && d.eps_i > 0.0 && std::isfinite(d.eps_i)))
            out.push_back({"dns.eps", "DNS permittivities must be finite and positive"});
        if (d.resolution_per_cell < 6)
            out.push_back({"dns.resolution_per_cell", "need at least 6"});
        if (d.macro_grid_n < 8) out.push_back({"dns.macro_grid_n", "need at least 8"});
        if (!(d.table_a_min > 0.02 && d.table_a_max < 0.45 && d.table_a_min < d.table_a_max))
            out.push_back({"dns.table_a_min/max", "need 0.02 < min < max < 0.45"});
        if (d.table_count < 5) out.push_back({"dns.table_count", "need at least 5"});
        if (d.mode == DnsMode::LargeCharge) {
            check_expr(out, "dns.rho (large-charge)", d.rho);
            try {
                const FieldExpr r = FieldExpr::parse(d.rho);
                for (const auto& v : r.variables())
                    if (v == "x1" || v == "x2")
                        out.push_back({"dns.rho",
                                       "large-charge convergence studies need a fast-only rho"});
            } catch (const ParseError&) {
            }
        }
        // Radius feasibility against the per-cell grid and the table range.
        try {
            const FieldExpr a = FieldExpr::parse(d.a_of_x);
            const auto [lo, hi] = radius_image(a);
            const double s = 1.0 / d.resolution_per_cell;
            if (!(lo > 2.5 * s) || !(hi < 0.5 - 2.0 * s))
                out.push_back({"dns.a_of_x",
                               "radius image [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                   "] infeasible for resolution_per_cell = " +
                                   std::to_string(d.resolution_per_cell)});
            if (lo < d.table_a_min || hi > d.table_a_max)
                out.push_back({"dns.table_a_min/max",
                               "table range [" + std::to_string(d.table_a_min) + ", " +
                                   std::to_string(d.table_a_max) +
                                   "] does not cover the a(x) image [" + std::to_string(lo) +
                                   ", " + std::to_string(hi) + "]"});
        } catch (const ParseError&) {
        }
    }
    // Macro experiment needs table coverage of the radius image.
    if (experiment == "macro" && cfg.macro && cfg.table) {
        try {
            const FieldExpr a = FieldExpr::parse(cfg.macro->a_of_x);
            const auto [lo, hi] = radius_image(a);
            if (lo < cfg.table->a_min || hi > cfg.table->a_max)
                out.push_back({"macro.a_of_x",
                               "a(x) image [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                   "] not covered by table range [" +
                                   std::to_string(cfg.table->a_min) + ", " +
                                   std::to_string(cfg.table->a_max) + "]"});
        } catch (const ParseError&) {
        }
    }

    if (experiment == "cell") need(cfg.cell.has_value(), "cell");
    if (experiment == "eff-table") need(cfg.table.has_value(), "table");
    if (experiment == "msint") need(cfg.msint.has_value(), "msint");
    if (experiment == "macro") {
        need(cfg.macro.has_value(), "macro");
        need(cfg.table.has_value(), "table");
    }
    if (experiment == "dns-converge") need(cfg.dns.has_value(), "dns");
    return out;
}

namespace {

void run_cell(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const CellSection& c = *cfg.cell;
    const CellGeometry geom(c.a, c.grad_a);
    auto mesh = std::make_shared<const CellMesh>(build_cell_mesh(geom, c.target_h));
    CellProblemSpec spec;
    spec.mesh = mesh;
    spec.geom = geom;
    spec.eps_e = c.eps_e;
    spec.eps_i = c.eps_i;
    spec.mode = c.psi_mode;
    const CellSolution sol = solve_cell(spec);

    if (c.export_solution) {
        atomic_write(out_dir / "solution.txt", [&](std::ostream& os) {
            export_mesh(os, *mesh, {{"psi1", &sol.psi[0]}, {"psi2", &sol.psi[1]}});
        });
    }

    atomic_write(out_dir / "eps_eff.csv", [&](std::ostream& os) {
        os << "formula,eps11,eps12,eps21,eps22\n" << std::setprecision(17);
        if (c.psi_mode == CellMode::PsiFinite) {
            const EffectiveCoefficients ev = epsilon_volume(sol);
            ev.check();
            os << "volume," << ev.eps_eff(0, 0) << ',' << ev.eps_eff(0, 1) << ','
               << ev.eps_eff(1, 0) << ',' << ev.eps_eff(1, 1) << "\n";
        }
        const EffectiveCoefficients eb = epsilon_boundary(sol);
        eb.check();
        os << "boundary," << eb.eps_eff(0, 0) << ',' << eb.eps_eff(0, 1) << ','
           << eb.eps_eff(1, 0) << ',' << eb.eps_eff(1, 1) << "\n";
    });
}

void run_eff_table(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads) {
    const EffectiveTable table =
        build_effective_table(table_options_from(*cfg.table, threads));
    atomic_write(out_dir / "table.csv", [&](std::ostream& os) { write_table_csv(os, table); });
}

void run_msint(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const MsintSection& m = *cfg.msint;
    const FluxField flux =
        FluxField::from_expressions(FieldExpr::parse(m.q1), FieldExpr::parse(m.q2));
    OrderStudyOptions opts;
    opts.a_of_x = FieldExpr::parse(m.a_of_x);
    opts.x_hat = m.x_hat;
    opts.deltas = m.deltas;
    opts.n_quad = m.n_quad;
    opts.measure_exponent = m.measure_exponent;
    const MsIntReport closed = order_study(flux, opts);
    atomic_write(out_dir / "msint.csv", [&](std::ostream& os) { write_msint_csv(os, closed); });
    opts.arc = std::make_pair(m.arc_start, m.arc_end);
    const MsIntReport arc = order_study(flux, opts);
    atomic_write(out_dir / "msint_arc.csv", [&](std::ostream& os) { write_msint_csv(os, arc); });
}

void run_macro(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads) {
    const MacroSection& m = *cfg.macro;
    MacroProblem mp;
    mp.a_of_x = FieldExpr::parse(m.a_of_x);
    mp.table = std::make_shared<const EffectiveTable>(
        build_effective_table(table_options_from(*cfg.table, threads)));
    mp.rho_mode = m.rho_mode;
    mp.rho = FieldExpr::parse(m.rho);
    mp.boundary_value = FieldExpr::parse(m.boundary_value);
    mp.grid_n = m.grid_n;
    if (mp.rho_mode == RhoMode::CellAverage)
        mp.reference_mesh =
            std::make_shared<const CellMesh>(build_cell_mesh(CellGeometry(0.25), 0.05));
    const MacroSolution sol = solve_homogenized(mp);
    atomic_write(out_dir / "phi0.csv",
                 [&](std::ostream& os) { write_macro_solution_csv(os, sol); });
    atomic_write(out_dir / "coeffs.csv",
                 [&](std::ostream& os) { write_macro_coefficients_csv(os, sol); });
}

void run_dns(const RunConfig& cfg, const std::filesystem::path& out_dir, int threads) {
    const DnsSection& d = *cfg.dns;
    ConvergenceOptions opts;
    opts.Ns = d.Ns;
    opts.base.a_of_x = FieldExpr::parse(d.a_of_x);
    opts.base.eps_e = d.eps_e;
    opts.base.eps_i = d.eps_i;
    opts.base.rho = FieldExpr::parse(d.rho);
    opts.base.boundary_value = FieldExpr::parse(d.boundary_value);
    opts.base.mode = d.mode;
    opts.base.resolution_per_cell = d.resolution_per_cell;
    opts.macro_grid_n = d.macro_grid_n;
    opts.table.a_values = linspace(d.table_a_min, d.table_a_max, d.table_count);
    opts.table.eps_e = d.eps_e;
    opts.table.eps_i = d.eps_i;
    opts.table.psi_mode = CellMode::PsiFinite;
    opts.table.rho = d.mode == DnsMode::LargeCharge ? opts.base.rho
                                                    : FieldExpr::parse("sin(2*pi*X1)");
    opts.table.target_h = d.table_target_h;
    opts.table.threads = threads;
    const ConvergenceReport rep = convergence_study(opts);
    atomic_write(out_dir / "dns.csv", [&](std::ostream& os) { write_convergence_csv(os, rep); });
    if (d.export_fine_field) {
        DnsProblem coarse = opts.base;
        coarse.N = d.Ns.front();
        const DnsField fine = solve_full(coarse);
        atomic_write(out_dir / ("fine_N" + std::to_string(coarse.N) + ".txt"),
                     [&](std::ostream& os) { export_trimesh(os, fine.mesh, {{"phi", &fine.phi}}); });
    }
}

}  // namespace

void run_experiment(const RunConfig& cfg, const std::string& experiment,
                    const std::filesystem::path& out_dir, int threads) {
    const auto violations = validate(cfg, experiment);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "configuration invalid for '" << experiment << "':";
        for (const auto& v : violations) os << "\n  [" << v.where << "] " << v.message;
        throw ValidationError(os.str());
    }
    std::filesystem::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    if (experiment == "cell") run_cell(cfg, out_dir);
    else if (experiment == "eff-table") run_eff_table(cfg, out_dir, threads);
    else if (experiment == "msint") run_msint(cfg, out_dir);
    else if (experiment == "macro") run_macro(cfg, out_dir, threads);
    else if (experiment == "dns-converge") run_dns(cfg, out_dir, threads);
    else if (experiment == "paper-suite") {
        const AcceptanceReport rep = run_acceptance_suite(threads);
        atomic_write(out_dir / "acceptance.csv",
                     [&](std::ostream& os) { write_acceptance_csv(os, rep); });
        if (!rep.all_passed())
            throw NumericalError("paper-suite: " + std::to_string(rep.failures()) +
                                 " acceptance criteria failed (see acceptance.csv)");
    }

    Manifest m;
    m.experiment = experiment;
    m.config_hash = fnv1a_hex(cfg.raw_text);
    m.tool_version = kToolVersion;
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_dir / "manifest.json", m);
}

}  // namespace homog
