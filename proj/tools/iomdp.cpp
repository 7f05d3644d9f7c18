#include <CLI11.hpp>

#include "iomdp/cli.hpp"

int main(int argc, char** argv) {
    using namespace iomdp;
    cli::configure_logging();

    CLI::App app{"Constrained average-reward MDPs with intermittent state observation"};
    app.require_subcommand(1);

    cli::RunConfig cfg;
    std::string mode = "drop";
    double rho = 0.0;
    double budget = 0.0;

    auto add_common = [&](CLI::App* sub, bool needs_model) {
        if (needs_model) sub->add_option("model", cfg.model_path, "Model JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--rho", rho, "Override the observation probability")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--K", cfg.depth, "Truncation depth (maximum age)");
        sub->add_option("--mode", mode, "Boundary mode: drop, selfloop, forceobs")
            ->check(CLI::IsMember({"drop", "selfloop", "forceobs"}));
        sub->add_flag("--constrained", cfg.constrained, "Include the budget row");
        sub->add_option("--B", budget, "Override the budget");
        sub->add_option("--seed", cfg.seed, "Random seed");
        sub->add_option("--horizon", cfg.horizon, "Simulation horizon per replication");
        sub->add_option("--reps", cfg.replications, "Simulation replications");
        sub->add_option("--out", cfg.out_dir, "Output directory");
    };

    auto* validate = app.add_subcommand("validate", "Check stochasticity and recurrence of a model");
    add_common(validate, true);
    auto* solve = app.add_subcommand("solve", "Solve the truncated occupancy LP and write artifacts");
    add_common(solve, true);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of a solved policy (reads --out)");
    add_common(simulate, false);
    simulate->add_flag("--trace", cfg.trace, "Write a per-step trace of replication 0");
    auto* analyze = app.add_subcommand("analyze", "Duality, ACOE, unichain and drift checks");
    add_common(analyze, true);
    auto* reproduce = app.add_subcommand("reproduce", "Sweep rho on the wireless instance and emit policy tables");
    add_common(reproduce, false);

    CLI11_PARSE(app, argc, argv);

    const auto* chosen = app.get_subcommands().front();
    if (chosen == validate) cfg.command = cli::Command::Validate;
    else if (chosen == solve) cfg.command = cli::Command::Solve;
    else if (chosen == simulate) cfg.command = cli::Command::Simulate;
    else if (chosen == analyze) cfg.command = cli::Command::Analyze;
    else cfg.command = cli::Command::Reproduce;

    cfg.mode = parse_boundary_mode(mode);
    if (chosen->count("--rho") > 0) cfg.rho = rho;
    if (chosen->count("--B") > 0) cfg.budget = budget;
    return cli::run(cfg);
}
