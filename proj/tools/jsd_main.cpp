#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jsd/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Jensen-Shannon noise-robust losses: verification and training lab"};
    app.require_subcommand(1);

    jsd::VerifyOptions verify_opts;
    CLI::App* verify = app.add_subcommand(
        "verify", "Run the analytic verification suite");
    verify
        ->add_option("selector", verify_opts.selector,
                     "Claim group: bounds, decomposition, gradients, limits, "
                     "risk-theorem, asym-conditions, all")
        ->default_str("all");
    verify->add_option("--report", verify_opts.report_path,
                       "Write the JSON report to this file");
    verify->add_flag("--fast", verify_opts.fast,
                     "Trimmed sample counts for smoke runs");
    verify->add_option("--seed", verify_opts.seed, "Suite seed");
    verify
        ->add_option("--z-fault", verify_opts.z_fault,
                     "Testing hook: scale the loss normalizer by this factor")
        ->group("");  // hidden from help

    std::string train_config;
    CLI::App* train = app.add_subcommand("train", "Run one training experiment");
    train->add_option("config", train_config, "Experiment config JSON")
        ->required();

    jsd::SweepOptions sweep_opts;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Run one experiment per value along an axis");
    sweep->add_option("config", sweep_opts.config_path, "Experiment config JSON")
        ->required();
    sweep
        ->add_option("--axis", sweep_opts.axis,
                     "Swept quantity: pi1, M, eta, jitter")
        ->required();
    sweep
        ->add_option("--values", sweep_opts.values,
                     "Comma-separated values for the axis")
        ->required()
        ->delimiter(',');

    std::string inspect_config;
    CLI::App* inspect = app.add_subcommand(
        "noise-inspect", "Print realized label-noise statistics for a config");
    inspect->add_option("config", inspect_config, "Experiment config JSON")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return jsd::kExitUsage;
    }

    try {
        if (verify->parsed())
            return jsd::cmd_verify(verify_opts, std::cout, std::cerr);
        if (train->parsed())
            return jsd::cmd_train(train_config, std::cout, std::cerr);
        if (sweep->parsed())
            return jsd::cmd_sweep(sweep_opts, std::cout, std::cerr);
        if (inspect->parsed())
            return jsd::cmd_noise_inspect(inspect_config, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return jsd::kExitFailure;
    }
    return jsd::kExitUsage;
}
