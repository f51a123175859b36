#include "liouville/lab.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"liouville-lab: exact families, Dirichlet solves and blow-up diagnostics"};
    app.require_subcommand(1, 1);
    liouville::CommandOptions opts;
    int grid_n = 0;
    std::uint64_t seed = 0;

    for (const char* name : {"generate", "solve", "diagnose", "sweep", "cascade"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "experiment config (JSON, schema liouville-lab/1)")->required();
        sub->add_option("--out", opts.out, "output directory (overrides the config)");
        sub->add_option("--jobs", opts.jobs, "worker threads for per-k work")->check(CLI::PositiveNumber);
        sub->add_option("--grid-n", grid_n, "grid points per side (odd)");
        sub->add_option("--seed", seed, "seed for probe points");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : liouville::exit_validation;
    }
    auto* sub = app.get_subcommands().front();
    if (sub->count("--grid-n")) opts.grid_n = grid_n;
    if (sub->count("--seed")) opts.seed = seed;
    return liouville::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
