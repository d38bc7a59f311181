#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcdrl/component.hpp"
#include "lcdrl/rng.hpp"
#include "lcdrl/topology.hpp"
#include "lcdrl/truss.hpp"

namespace lcdrl {

/// One entity receiving an individualized action: a component (maintenance) or
/// the whole structure (inspection decision).
struct ControlUnit {
    int component = -1;  // -1 for the system-wide inspection unit
    int num_actions = 0;
    bool is_inspection = false;
};

struct KOutOfNRule {
    int min_state = 0;   // components at or beyond this state count toward the rule
    int percent = 0;     // rule active when count * 100 >= percent * num_components
    double factor = 1.0;
};

enum class ModeKind { None, Topology, KOutOfN, Displacement };

struct SystemState {
    std::vector<int> damage;  // 1-based damage state per component
    std::vector<int> rate;    // deterioration rate per component
    int t = 0;                // completed steps
};

struct BeliefState {
    std::vector<std::vector<double>> damage;  // per-component distribution over states
    std::vector<int> rate;                    // exactly known
    int t = 0;
};

struct StepOutcome {
    SystemState next;
    std::vector<int> post_action_state;  // condition the step costs were charged on
    double direct_losses = 0.0;          // summed before the penalty factor
    double penalty_factor = 1.0;
    double maintenance_cost = 0.0;
    double inspection_cost = 0.0;
    double displacement_ratio = -1.0;    // displacement-mode diagnostic, -1 elsewhere
    double total = 0.0;
};

struct SystemModel {
    std::string name;
    std::vector<ComponentModel> components;
    std::vector<ControlUnit> units;  // maintenance units in component order, inspection unit last
    int horizon = 0;
    double discount = 0.99;

    bool inspection_optional = false;
    double inspection_cost = 0.0;

    ModeKind mode_kind = ModeKind::None;
    FailureExpression failure_expr;      // Topology
    double failure_factor = 1.0;
    std::vector<KOutOfNRule> mode_rules; // KOutOfN; active factors multiply
    std::shared_ptr<const TrussGeometry> truss;  // Displacement
    std::vector<int> member_of_component;
    std::vector<double> ratio_thresholds;
    std::vector<double> ratio_factors;
    double yield_displacement = 0.0;     // cached for the displacement mode
    LoadModel load;

    int num_components() const { return static_cast<int>(components.size()); }
    int num_units() const { return static_cast<int>(units.size()); }
    int num_joint_actions() const;
    bool nonstationary() const;

    SystemState initial_state() const;
    BeliefState initial_belief() const;
    void validate() const;
};

/// Penalty factor for a joint post-action condition. The displacement mode
/// needs the load of the step; other modes ignore it.
double mode_penalty(const SystemModel& sys, const std::vector<int>& damage,
                    std::optional<double> displacement_ratio = std::nullopt);

/// Displacement ratio u/u_y under the given condition and load; nullopt when
/// the degraded structure is a mechanism (collapse).
std::optional<double> displacement_ratio(const SystemModel& sys, const std::vector<int>& damage,
                                         double load_magnitude);

/// Samples one environment step. Maintenance effects apply before the
/// transition; costs are charged on the post-action condition.
StepOutcome step(const SystemModel& sys, const SystemState& state,
                 const std::vector<int>& actions, Rng& rng);

/// Observation per component sampled from the row of the true next state.
/// Returns nullopt when the system has optional inspections and none was bought.
std::optional<std::vector<int>> observe(const SystemModel& sys, const SystemState& next_state,
                                        const std::vector<int>& actions, Rng& rng);

/// Exact per-component Bayesian update: prediction through the effective
/// transition matrix, then reweighting by the observation likelihood.
BeliefState belief_update(const BeliefState& belief, const std::vector<int>& actions,
                          const std::optional<std::vector<int>>& observations,
                          const SystemModel& sys);

/// Rebuilds every component's banded observation model at a new precision
/// (1.0 turns the system into its fully observable counterpart).
void set_observation_precision(SystemModel& sys, double precision);

/// Flat feature vector: per component the damage distribution (one-hot for
/// exact states) plus rate/T for non-stationary components, then the global t/T.
std::vector<double> encode_input(const BeliefState& belief, const SystemModel& sys);
std::vector<double> encode_input(const SystemState& state, const SystemModel& sys);
int encoded_input_size(const SystemModel& sys);

/// Splits a joint action index into the per-unit action vector (unit 0 least
/// significant) and back.
std::vector<int> decode_joint_action(const SystemModel& sys, int joint);
int encode_joint_action(const SystemModel& sys, const std::vector<int>& actions);

/// Per-episode bookkeeping shared by trainers, evaluation and baselines:
/// tracks the true state, the belief, the last observed state per component,
/// and the discounted cost.
class EpisodeRunner {
  public:
    explicit EpisodeRunner(const SystemModel& sys) : sys_(&sys) { reset(); }

    void reset();
    /// Applies one action vector; returns the step outcome. Belief and
    /// observation bookkeeping happen internally.
    const StepOutcome& advance(const std::vector<int>& actions, Rng& rng);

    bool done() const { return state_.t >= sys_->horizon; }
    int t() const { return state_.t; }
    const SystemState& state() const { return state_; }
    const BeliefState& belief() const { return belief_; }
    const std::vector<int>& observed() const { return observed_; }
    const std::optional<std::vector<int>>& last_observation() const { return last_obs_; }
    double discounted_cost() const { return discounted_cost_; }
    const SystemModel& system() const { return *sys_; }

  private:
    const SystemModel* sys_;
    SystemState state_;
    BeliefState belief_;
    std::vector<int> observed_;  // last observation per component (initial state before any)
    std::optional<std::vector<int>> last_obs_;
    StepOutcome outcome_;
    double discounted_cost_ = 0.0;
};

}  // namespace lcdrl
