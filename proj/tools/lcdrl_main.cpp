#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "lcdrl/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Life-cycle maintenance planning with deep reinforcement learning"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string checkpoint;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int episodes = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment configuration file")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--episodes", episodes, "episode-count override");
    };

    CLI::App* exact = app.add_subcommand("exact", "solve the enumerated joint MDP exactly");
    add_common(exact);
    CLI::App* train = app.add_subcommand("train", "train the configured agent");
    add_common(train);
    CLI::App* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
    add_common(eval);
    eval->add_option("--checkpoint", checkpoint, "agent checkpoint file")->required();
    CLI::App* optimize = app.add_subcommand("optimize-baselines", "grid-search the baseline policies");
    add_common(optimize);
    CLI::App* agreement = app.add_subcommand("agreement", "action agreement against the exact policy");
    add_common(agreement);
    agreement->add_option("--checkpoint", checkpoint, "agent checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        lcdrl::ExperimentConfig cfg = lcdrl::ExperimentConfig::load(config_path);
        if (seed_set) cfg.seed = seed;
        if (episodes > 0) {
            cfg.agent.episodes = episodes;
        }
        if (exact->parsed()) return lcdrl::run_exact(cfg, out_dir);
        if (train->parsed()) return lcdrl::run_train(cfg, out_dir);
        if (eval->parsed()) return lcdrl::run_eval(cfg, out_dir, checkpoint);
        if (optimize->parsed()) return lcdrl::run_optimize_baselines(cfg, out_dir);
        if (agreement->parsed()) return lcdrl::run_agreement(cfg, out_dir, checkpoint);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
