// Command-line front end: <experiment> --config <file> [--out <dir>] [--threads N].
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "homog/config.hpp"
#include "homog/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"2D asymptotic-homogenisation toolkit"};
    app.set_version_flag("--version", homog::kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int threads = 1;
    bool validate_only = false;

    for (const std::string& name : homog::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "threads for independent solves");
        sub->add_flag("--validate-only", validate_only, "validate the config and exit");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string experiment = app.get_subcommands().front()->get_name();

    try {
        const homog::RunConfig cfg = homog::load_config(config_path);
        if (validate_only) {
            const auto violations = homog::validate(cfg, experiment);
            for (const auto& v : violations)
                std::cerr << "[" << v.where << "] " << v.message << "\n";
            if (!violations.empty()) return 2;
            std::cout << "config valid for '" << experiment << "'\n";
            return 0;
        }
        homog::run_experiment(cfg, experiment, out_dir, threads);
        std::cout << "wrote results for '" << experiment << "' to " << out_dir << "\n";
        return 0;
    } catch (const homog::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const homog::ParseError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
