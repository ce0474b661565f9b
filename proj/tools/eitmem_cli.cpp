#include <CLI11.hpp>
#include <iostream>

#include "eitmem/scenario_file.hpp"

int main(int argc, char** argv) {
    using namespace eitmem;
    CLI::App app{"eitmem: light storage and dark-state polariton simulator"};
    app.require_subcommand(1);

    std::string file;
    auto* run_cmd = app.add_subcommand("run", "run one scenario file");
    run_cmd->add_option("file", file, "scenario JSON file")->required();

    std::string dir;
    auto* verify_cmd = app.add_subcommand("verify", "re-run golden scenarios and compare metrics");
    verify_cmd->add_option("dir", dir, "directory of golden scenarios")->required();

    auto* bless_cmd = app.add_subcommand("bless", "rewrite golden expectations from fresh runs");
    bless_cmd->add_option("dir", dir, "directory of golden scenarios")->required();

    app.add_subcommand("list-scenarios", "list supported scenario kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }

    if (*run_cmd) return run_scenario(file, default_output_root(), std::cout);

    if (*verify_cmd) {
        try {
            const auto rep = verify_goldens(dir);
            for (const auto& e : rep.entries) {
                std::cout << (e.pass ? "PASS " : "FAIL ") << e.scenario << "\n";
                for (const auto& m : e.messages) std::cout << "  " << m << "\n";
            }
            return rep.all_pass() ? exit_ok : exit_mismatch;
        } catch (const std::exception& e) {
            std::cerr << "validation error: " << e.what() << "\n";
            return exit_validation;
        }
    }

    if (*bless_cmd) {
        try {
            bless_goldens(dir, std::cout);
            return exit_ok;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return exit_validation;
        }
    }

    for (const auto& k : scenario_kinds()) std::cout << k.kind << "\t" << k.description << "\n";
    return exit_ok;
}
