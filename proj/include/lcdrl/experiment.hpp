#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcdrl/agents.hpp"
#include "lcdrl/baselines.hpp"
#include "lcdrl/evaluate.hpp"
#include "lcdrl/flat_mdp.hpp"
#include "lcdrl/system.hpp"

namespace lcdrl {

struct AgentSpec {
    std::string type = "dcmac";  // "dcmac" or "ddqn"
    std::vector<int> hidden{40, 40};
    double actor_lr = 1e-4, actor_lr_final = 1e-5;
    double critic_lr = 1e-3, critic_lr_final = 1e-4;
    double ddqn_lr = 1e-3, ddqn_lr_final = 1e-4;
    int batch_size = 32;
    std::size_t buffer_capacity = 300000;
    double weight_cap = 2.0;
    int target_sync_period = 13;
    double epsilon_initial = 1.0, epsilon_final = 0.01;
    double epsilon_anneal_fraction = 0.4;
    int episodes = 10000;
    int eval_every = 0;
    int eval_episodes = 100;
    double cost_scale = 1.0;
    double lr_drop_fraction = 0.7;
    double do_nothing_bias = 0.0;
    double shaping_penalty = 0.0;
};

struct BaselineFamilySpec {
    std::string name;
    std::string family;  // "state-map" or "loss-threshold"
    std::vector<int> allowed_actions;
    std::vector<int> rate_thresholds;
    int rate_action = 0;
    std::vector<int> rate_states;
    int inspection_period = 0;
    std::vector<double> major_grid, replace_grid;
    std::vector<int> minor_rate_grid;

    std::vector<ThresholdPolicy> enumerate(const SystemModel& sys) const;
};

struct ExperimentConfig {
    std::string environment_path;
    std::uint64_t seed = 1;
    AgentSpec agent;
    std::vector<BaselineFamilySpec> baselines;
    int evaluation_episodes = 1000;
    int baseline_eval_episodes = 200;
    std::size_t exact_cap = 1000000;
    bool compare_exact = false;

    static ExperimentConfig load(const std::string& path);
};

DcmacConfig make_dcmac_config(const AgentSpec& spec);
DdqnConfig make_ddqn_config(const AgentSpec& spec);
TrainOptions make_train_options(const AgentSpec& spec, std::uint64_t seed);

/// Writes one greedy policy realization: per-step cost breakdown plus a
/// per-component row with state, observation, action and belief summary.
void write_realization_trace(const Policy& policy, const SystemModel& sys, std::uint64_t seed,
                             const std::string& steps_path, const std::string& components_path);

void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path);
void write_eval_curve_csv(const std::vector<EvalPoint>& evals, const std::string& path);
void write_evaluation_csv(const EvaluationReport& report, const std::string& path);
void write_grid_report_csv(const GridResult& grid, const std::string& path);

/// Subcommand entry points; each writes its artifacts under `out_dir` and is
/// byte-deterministic given (config, seed).
int run_exact(const ExperimentConfig& cfg, const std::string& out_dir);
int run_train(const ExperimentConfig& cfg, const std::string& out_dir);
int run_eval(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& checkpoint);
int run_optimize_baselines(const ExperimentConfig& cfg, const std::string& out_dir);
int run_agreement(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& checkpoint);

}  // namespace lcdrl
