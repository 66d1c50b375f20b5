#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "vortexopt/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Vorticity rearrangement optimization experiments"};

    std::string config_path;
    std::string output_dir;
    int seed_count = 0;
    bool quiet = false;

    app.add_option("config", config_path, "experiment config file (key = value)")->required();
    app.add_option("--output-dir", output_dir, "override the config's output_dir");
    app.add_option("--seed-count", seed_count, "truncate or extend the seed list to this many seeds");
    app.add_flag("--quiet", quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        vortexopt::ExperimentConfig config = vortexopt::parse_experiment_config(config_path);
        if (!output_dir.empty()) config.output_dir = output_dir;
        if (seed_count > 0) {
            std::uint64_t next = 0;
            for (const std::uint64_t s : config.seeds) next = std::max(next, s);
            while (static_cast<int>(config.seeds.size()) < seed_count) config.seeds.push_back(++next);
            config.seeds.resize(static_cast<std::size_t>(seed_count));
        }
        const vortexopt::ExperimentReport report = vortexopt::run_experiment(config, quiet);
        if (!quiet) std::printf("psi_final = %.17g\n", report.psi_final);
        return 0;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
}
