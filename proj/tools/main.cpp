// collapse-lab: command-line driver for the collapse dynamics toolkit.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "clab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"collapse-lab: stochastic collapse and decoherence simulation toolkit"};
    app.footer("Experiments: run `collapse-lab --list` for the full set.\n"
               "Exit codes: 0 success, 2 configuration error, 3 runtime failure.");

    std::string experiment;
    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    int workers = 0;
    bool list_experiments = false;

    app.add_option("experiment", experiment, "experiment to run (see --list)");
    app.add_flag("--list", list_experiments, "print the known experiments and exit");
    auto* config_opt =
        app.add_option("-c,--config", config_path, "INI-style run configuration file");
    auto* seed_opt = app.add_option("-s,--seed", seed, "master seed override");
    auto* workers_opt = app.add_option("-w,--workers", workers, "worker thread override");
    auto* out_opt = app.add_option("-o,--out", output_dir, "output directory override");
    app.add_option("-p,--param", overrides, "parameter override, key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (list_experiments) {
        for (const std::string& name : clab::known_experiments()) std::cout << name << "\n";
        return 0;
    }

    clab::RunConfig config;
    try {
        if (config_opt->count()) config = clab::parse_config_file(config_path);
        if (!experiment.empty()) {
            if (!config.experiment.empty() && config.experiment != experiment)
                throw clab::ValidationError(
                    "experiment", "command line says '" + experiment + "' but the config file says '" +
                                      config.experiment + "'");
            config.experiment = experiment;
        }
        if (config.experiment.empty())
            throw clab::ValidationError("experiment",
                                        "give an experiment name or a --config file");
        for (const std::string& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0)
                throw clab::ValidationError("param", "overrides take the form key=value");
            config.parameters[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        if (seed_opt->count()) config.parameters["master_seed"] = std::to_string(seed);
        if (workers_opt->count()) config.parameters["workers"] = std::to_string(workers);
        if (out_opt->count()) config.parameters["output_dir"] = output_dir;
    } catch (const clab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    return clab::run_cli(std::move(config));
}
