#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "homog/acceptance.hpp"
#include "homog/config.hpp"
#include "homog/io.hpp"

using namespace homog;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string defaults_text() {
    static const std::string text = read_file(fs::path(HOMOG_CONFIG_DIR) / "defaults.json");
    return text;
}

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "homog_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("defaults config parses and validates for every experiment") {
    const RunConfig cfg = parse_config(defaults_text());
    REQUIRE(cfg.cell.has_value());
    REQUIRE(cfg.table.has_value());
    REQUIRE(cfg.msint.has_value());
    REQUIRE(cfg.macro.has_value());
    REQUIRE(cfg.dns.has_value());
    for (const std::string& name : experiment_names()) {
        const auto violations = validate(cfg, name);
        for (const auto& v : violations) MESSAGE(name, ": [", v.where, "] ", v.message);
        CHECK(violations.empty());
    }
}

TEST_CASE("malformed configs are rejected with clear messages") {
    CHECK_THROWS_AS(parse_config("{ not json"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"cell": {"a": 0.2}})"), ValidationError);  // missing fields
    CHECK_THROWS_AS(parse_config(R"({"cell": {"a": 0.2, "eps_e": 1.0, "eps_i": "huge",
        "psi_mode": "psi-limit-neumann", "target_h": 0.02}})"),
                    ValidationError);
}

TEST_CASE("validation catches out-of-range radii citing the bound") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->a = 0.6;
    const auto violations = validate(cfg, "cell");
    REQUIRE(!violations.empty());
    bool cited = false;
    for (const auto& v : violations)
        if (v.message.find("(0, 0.5)") != std::string::npos) cited = true;
    CHECK(cited);
}

TEST_CASE("validation catches unparseable expressions with a position") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.msint->q1 = "(X1 + ";
    const auto violations = validate(cfg, "msint");
    REQUIRE(!violations.empty());
    CHECK(violations[0].message.find("position 6") != std::string::npos);
}

TEST_CASE("validation catches a table range not covering the radius image") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.macro->a_of_x = "0.4 + 0.02*x1";
    const auto violations = validate(cfg, "macro");
    bool found = false;
    for (const auto& v : violations)
        if (v.message.find("not covered") != std::string::npos ||
            v.message.find("does not cover") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("mode/eps mismatches are violations, not crashes") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->eps_i = 100.0;  // limit mode with finite eps_i
    const auto violations = validate(cfg, "cell");
    CHECK(!violations.empty());
}

TEST_CASE("cell experiment writes its outputs and a manifest") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->target_h = 0.05;
    const fs::path out = temp_dir("cell");
    run_experiment(cfg, "cell", out, 1);
    CHECK(fs::exists(out / "eps_eff.csv"));
    CHECK(fs::exists(out / "manifest.json"));
    const std::string csv = read_file(out / "eps_eff.csv");
    CHECK(csv.rfind("formula,eps11,eps12,eps21,eps22\n", 0) == 0);
    const std::string manifest = read_file(out / "manifest.json");
    CHECK(manifest.find("\"experiment\": \"cell\"") != std::string::npos);
    CHECK(manifest.find(fnv1a_hex(cfg.raw_text)) != std::string::npos);
}

TEST_CASE("cell experiment at zero contrast writes the identity") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->eps_i = 1.0;
    cfg.cell->psi_mode = CellMode::PsiFinite;
    cfg.cell->target_h = 0.05;
    const fs::path out = temp_dir("cellid");
    run_experiment(cfg, "cell", out, 1);
    std::istringstream is(read_file(out / "eps_eff.csv"));
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::string formula;
        double e11, e12, e21, e22;
        row >> formula >> e11 >> e12 >> e21 >> e22;
        CHECK(std::abs(e11 - 1.0) < 1e-10);
        CHECK(std::abs(e22 - 1.0) < 1e-10);
        CHECK(std::abs(e12) < 1e-10);
        CHECK(std::abs(e21) < 1e-10);
    }
}

TEST_CASE("identical configs produce byte-identical csv outputs") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->target_h = 0.05;
    cfg.msint->deltas = {0.1, 0.05, 0.025};
    const fs::path out1 = temp_dir("det1"), out2 = temp_dir("det2");
    run_experiment(cfg, "cell", out1, 1);
    run_experiment(cfg, "cell", out2, 1);
    CHECK(read_file(out1 / "eps_eff.csv") == read_file(out2 / "eps_eff.csv"));
    run_experiment(cfg, "msint", out1, 1);
    run_experiment(cfg, "msint", out2, 1);
    CHECK(read_file(out1 / "msint.csv") == read_file(out2 / "msint.csv"));
    CHECK(read_file(out1 / "msint_arc.csv") == read_file(out2 / "msint_arc.csv"));
}

TEST_CASE("invalid configs abort the run with a validation error") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->a = 0.6;
    CHECK_THROWS_AS(run_experiment(cfg, "cell", temp_dir("bad"), 1), ValidationError);
}

TEST_CASE("eff-table experiment writes the pinned schema") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.table->count = 5;
    cfg.table->a_min = 0.15;
    cfg.table->a_max = 0.3;
    cfg.table->target_h = 0.04;
    const fs::path out = temp_dir("table");
    run_experiment(cfg, "eff-table", out, 1);
    const std::string csv = read_file(out / "table.csv");
    CHECK(csv.rfind("a,eps_iso,F1,F2,G1,G2\n", 0) == 0);
    // 5 data rows.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("cell experiment can export the solution in the debug format") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.cell->target_h = 0.06;
    cfg.cell->export_solution = true;
    const fs::path out = temp_dir("cellexp");
    run_experiment(cfg, "cell", out, 1);
    const std::string text = read_file(out / "solution.txt");
    CHECK(text.find("field psi1") != std::string::npos);
    CHECK(text.find("field psi2") != std::string::npos);
    CHECK(text.find("periodic_pairs") != std::string::npos);
}

TEST_CASE("macro experiment writes solution and coefficient fields") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.table->count = 5;
    cfg.table->a_min = 0.12;
    cfg.table->a_max = 0.28;
    cfg.table->target_h = 0.05;
    cfg.macro->grid_n = 16;
    const fs::path out = temp_dir("macro");
    run_experiment(cfg, "macro", out, 1);
    CHECK(read_file(out / "phi0.csv").rfind("x1,x2,phi0\n", 0) == 0);
    CHECK(read_file(out / "coeffs.csv").rfind("x1,x2,eps_eff,rho_eff\n", 0) == 0);
}

TEST_CASE("dns-converge experiment writes the convergence csv") {
    RunConfig cfg = parse_config(defaults_text());
    cfg.dns->Ns = {4, 8, 12};
    cfg.dns->eps_i = 100.0;
    cfg.dns->table_count = 5;
    cfg.dns->table_target_h = 0.05;
    cfg.dns->macro_grid_n = 32;
    cfg.dns->resolution_per_cell = 14;
    const fs::path out = temp_dir("dnssmoke");
    run_experiment(cfg, "dns-converge", out, 1);
    const std::string csv = read_file(out / "dns.csv");
    CHECK(csv.rfind("delta,error_L2,unknowns,seconds\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("acceptance report rendering") {
    AcceptanceReport rep;
    rep.results.push_back({1, "first, with a comma", true, "value=1, threshold=2", 0.1});
    rep.results.push_back({2, "second", false, "broke", 0.2});
    CHECK(!rep.all_passed());
    CHECK(rep.failures() == 1);
    std::ostringstream csv, lines;
    write_acceptance_csv(csv, rep);
    print_acceptance(lines, rep);
    CHECK(csv.str().rfind("criterion,name,pass,detail\n", 0) == 0);
    CHECK(csv.str().find("value=1; threshold=2") != std::string::npos);  // commas escaped
    CHECK(lines.str().find("PASS  1") != std::string::npos);
    CHECK(lines.str().find("FAIL  2") != std::string::npos);
}

TEST_CASE("numerical failures surface as NumericalError for the exit-3 path") {
    RunConfig cfg = parse_config(defaults_text());
    // Valid statically, but the true-boundary fixed point cannot converge at
    // these deltas for so steep a radius field.
    cfg.msint->a_of_x = "0.3 + 4.9*x1";
    cfg.msint->x_hat = {0.0, 0.0};
    cfg.msint->deltas = {0.2, 0.19, 0.18};
    CHECK(validate(cfg, "msint").empty());
    CHECK_THROWS_AS(run_experiment(cfg, "msint", temp_dir("numfail"), 1), NumericalError);
}

TEST_CASE("cli binary maps validation and run errors to exit codes") {
    const fs::path dir = temp_dir("exitcodes");
    const fs::path good = dir / "good.json", bad = dir / "bad.json";
    {
        std::ofstream os(good);
        os << defaults_text();
    }
    {
        // a = 0.6 violates the (0, 0.5) bound.
        std::string text = defaults_text();
        const auto pos = text.find("\"a\": 0.2");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 8, "\"a\": 0.6");
        std::ofstream os(bad);
        os << text;
    }
    const std::string bin = HOMOG_BIN;
    auto run = [&](const std::string& args) {
        const std::string cmd = bin + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("cell --config " + bad.string() + " --out " + (dir / "o1").string()) == 2);
    CHECK(run("cell --config " + (dir / "missing.json").string()) == 2);
    CHECK(run("cell --validate-only --config " + good.string()) == 0);
    CHECK(run("bogus-experiment --config " + good.string()) != 0);
}
