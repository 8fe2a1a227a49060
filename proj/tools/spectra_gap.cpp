#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spectra_gap/cli.hpp"

int main(int argc, char** argv) {
    using namespace spectra_gap;
    CLI::App app{"Commutator trace identities and universal eigenvalue bounds"};
    std::string command, config_path, out_dir = "reports";
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    app.add_option("command", command, "eig | identity | bound | convergence | randcheck")->required();
    app.add_option("--config", config_path, "problem configuration (JSON)")->required();
    app.add_option("--out-dir", out_dir, "report directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kConfigError;
    }

    const auto cmd = cli::parse_command(command);
    if (!cmd) {
        std::cerr << "unknown command '" << command << "'\n";
        return cli::kConfigError;
    }
    cli::ProblemConfig config;
    try {
        config = cli::load_config(config_path);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return cli::exit_status(e.code());
    }
    cli::RunOptions options;
    options.out_dir = out_dir;
    if (*seed_opt) options.seed = seed;
    options.jobs = jobs;
    return cli::run(config, *cmd, options);
}
