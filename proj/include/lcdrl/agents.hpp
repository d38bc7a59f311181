#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcdrl/net.hpp"
#include "lcdrl/replay.hpp"
#include "lcdrl/system.hpp"

namespace lcdrl {

/// Linear epsilon anneal from `initial` to `final_value` over `anneal_episodes`.
struct ExplorationSchedule {
    double initial = 1.0;
    double final_value = 0.01;
    int anneal_episodes = 1;

    double at(int episode) const {
        if (anneal_episodes <= 0) return final_value;
        double f = static_cast<double>(episode) / anneal_episodes;
        if (f >= 1.0) return final_value;
        return initial + (final_value - initial) * f;
    }
};

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// DDQN

struct DdqnConfig {
    std::vector<int> hidden{40, 40};
    double learning_rate = 1e-3;
    double learning_rate_final = 1e-4;
    int batch_size = 32;
    std::size_t buffer_capacity = 300000;
    int target_sync_period = 13;
    ExplorationSchedule exploration;
};

/// Epsilon-greedy selection over the joint action space; greedy picks the
/// highest predicted reward Q (lowest cost-to-go) with ties toward the lowest
/// action index.
int select_action_ddqn(const DenseNet& q_net, std::span<const double> input, double epsilon, Rng& rng);

/// Double-Q targets: y = r for terminal records, else
/// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)).
std::vector<double> ddqn_target(const std::vector<const DdqnRecord*>& batch, const DenseNet& online,
                                const DenseNet& target, double gamma);

class DdqnAgent {
  public:
    DdqnAgent(int input_size, int num_actions, const DdqnConfig& config, double gamma,
              std::uint64_t init_seed);

    int select_action(std::span<const double> input, double epsilon, Rng& rng) const {
        return select_action_ddqn(online_, input, epsilon, rng);
    }

    void store(DdqnRecord record) { buffer_.add(std::move(record)); }

    /// One batch update: mean squared error against the double-Q targets, one
    /// Adam step, target sync every `target_sync_period` updates.
    double update(Rng& rng);
    double update_batch(const std::vector<const DdqnRecord*>& batch);

    const DenseNet& online() const { return online_; }
    const DenseNet& target() const { return target_; }
    DenseNet& online() { return online_; }
    AdamState& optimizer() { return opt_; }
    const ReplayBuffer<DdqnRecord>& buffer() const { return buffer_; }
    long update_count() const { return update_count_; }
    double gamma() const { return gamma_; }
    const DdqnConfig& config() const { return config_; }

    void save(std::ostream& out, const std::string& rng_state) const;
    void load(std::istream& in, std::string& rng_state);

  private:
    DdqnConfig config_;
    double gamma_;
    DenseNet online_, target_;
    AdamState opt_;
    ReplayBuffer<DdqnRecord> buffer_;
    long update_count_ = 0;
};

// ---------------------------------------------------------------------------
// DCMAC

struct DcmacConfig {
    std::vector<int> hidden{40, 40};
    double actor_learning_rate = 1e-4;
    double actor_learning_rate_final = 1e-5;
    double critic_learning_rate = 1e-3;
    double critic_learning_rate_final = 1e-4;
    int batch_size = 32;
    std::size_t buffer_capacity = 300000;
    double importance_weight_cap = 2.0;
    ExplorationSchedule exploration;
};

/// One-step advantage A = r + gamma * V(next) - V(current); terminal records
/// drop the bootstrap term.
double dcmac_advantage(const DcmacRecord& record, const DenseNet& critic, double gamma);

/// Truncated product of per-unit probability ratios:
/// min(cap, prod_j pi_j(a_j) / mu_j).
double importance_weight(const DcmacRecord& record, const DenseNet& actor, double cap);

class DcmacAgent {
  public:
    DcmacAgent(int input_size, std::vector<int> head_sizes, const DcmacConfig& config, double gamma,
               std::uint64_t init_seed);
    ~DcmacAgent();
    DcmacAgent(const DcmacAgent&) = delete;
    DcmacAgent& operator=(const DcmacAgent&) = delete;

    /// Per-unit epsilon mixture: each unit independently explores with
    /// probability epsilon (distribution `explore_dist`, uniform by default),
    /// otherwise samples its softmax head. Fills the chosen actions and their
    /// behavior probabilities mu_j = eps*q_j(a_j) + (1-eps)*pi_j(a_j).
    void select_actions(std::span<const double> input, double epsilon, Rng& rng,
                        std::vector<int>& actions, std::vector<double>& mu,
                        double do_nothing_bias = 0.0) const;

    void store(DcmacRecord record) { buffer_.add(std::move(record)); }

    /// Samples one batch, computes advantages and truncated weights once, and
    /// applies the actor and critic Adam steps.
    void update(Rng& rng);

    /// g = mean_i w_i (sum_j grad log pi_j(a_j)) A_i, ascent on the actor only.
    /// Returns the gradient L2 norm.
    double actor_update(const std::vector<const DcmacRecord*>& batch);

    /// Semi-gradient weighted TD step on the critic only (no gradient through
    /// the bootstrap). Returns the weighted squared-advantage loss.
    double critic_update(const std::vector<const DcmacRecord*>& batch);

    const DenseNet& actor() const { return actor_; }
    const DenseNet& critic() const { return critic_; }
    DenseNet& actor() { return actor_; }
    DenseNet& critic() { return critic_; }
    AdamState& actor_optimizer() { return actor_opt_; }
    AdamState& critic_optimizer() { return critic_opt_; }
    const ReplayBuffer<DcmacRecord>& buffer() const { return buffer_; }
    const std::vector<int>& head_sizes() const { return head_sizes_; }
    double gamma() const { return gamma_; }
    const DcmacConfig& config() const { return config_; }
    double last_mean_weight() const { return last_mean_weight_; }

    void save(std::ostream& out, const std::string& rng_state) const;
    void load(std::istream& in, std::string& rng_state);

  private:
    void prepare_batch(const std::vector<const DcmacRecord*>& batch, std::vector<double>& advantages,
                       std::vector<double>& weights) const;
    double actor_step(const std::vector<const DcmacRecord*>& batch, std::span<const double> advantages,
                      std::span<const double> weights);
    double critic_step(const std::vector<const DcmacRecord*>& batch, std::span<const double> advantages,
                       std::span<const double> weights);

    DcmacConfig config_;
    double gamma_;
    std::vector<int> head_sizes_;
    DenseNet actor_, critic_;
    AdamState actor_opt_, critic_opt_;
    ReplayBuffer<DcmacRecord> buffer_;
    double last_mean_weight_ = 1.0;

    // Reused batch-update scratch: whole-batch activation matrices and
    // gradient buffers keep the per-step update path allocation-light.
    struct Workspace;
    std::unique_ptr<Workspace> work_ptr_;
    Workspace& workspace();
};

// ---------------------------------------------------------------------------
// Training loops

struct CurveRow {
    int episode = 0;
    double epsilon = 0.0;
    double train_cost = 0.0;  // realized discounted episode cost (unscaled)
};

struct EvalPoint {
    int episode = 0;
    double mean_cost = 0.0;
    double ci_halfwidth = 0.0;
    double epsilon = 0.0;
};

struct TrainOptions {
    int episodes = 1000;
    std::uint64_t seed = 1;
    double cost_scale = 1.0;         // training rewards are -cost/cost_scale
    int eval_every = 0;              // 0 disables periodic greedy evaluation
    int eval_episodes = 100;
    double lr_drop_fraction = 0.7;   // switch to the final learning rates here
    int min_buffer = 32;             // updates start once the buffer holds this many records
    double do_nothing_bias = 0.0;    // exploration mass shifted toward action 0
    double shaping_penalty = 0.0;    // training-only cost for actions with no effect
    std::string checkpoint_dir;      // empty = no checkpoints
    std::function<void(const CurveRow&)> on_episode;
    std::function<void(const EvalPoint&)> on_eval;
};

struct TrainResult {
    std::vector<CurveRow> curve;
    std::vector<EvalPoint> evals;
};

TrainResult train_ddqn(DdqnAgent& agent, const SystemModel& sys, const TrainOptions& options);
TrainResult train_dcmac(DcmacAgent& agent, const SystemModel& sys, const TrainOptions& options);

/// Head sizes of the factored actor for a system: one head per control unit.
std::vector<int> actor_head_sizes(const SystemModel& sys);

}  // namespace lcdrl
