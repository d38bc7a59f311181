#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lcdrl/system.hpp"

namespace lcdrl {

/// Inputs a policy is allowed to act on at one decision step.
struct DecisionContext {
    int t = 0;  // completed steps (0-based decision index)
    const SystemModel* sys = nullptr;
    const BeliefState* belief = nullptr;
    const std::vector<int>* observed = nullptr;  // last observed damage state per component
};

/// Parametric condition-based policy. The state-map family acts on the
/// observed damage state with an optional deterioration-rate override; the
/// loss-threshold family acts on the belief-mean section loss with periodic
/// inspections.
struct ThresholdPolicy {
    enum class Kind { StateMap, LossThreshold };
    Kind kind = Kind::StateMap;

    // StateMap
    std::vector<int> state_action;  // per observed damage state (1-based state s -> [s-1])
    int rate_threshold = std::numeric_limits<int>::max();
    int rate_action = 0;
    std::vector<std::uint8_t> rate_applicable;  // states where the rate override applies

    // LossThreshold (percent thresholds on the belief-mean section loss)
    int inspection_period = 0;  // inspect at steps with (t+1) % period == 0; 0 = never
    double major_loss_threshold = std::numeric_limits<double>::infinity();
    double replace_loss_threshold = std::numeric_limits<double>::infinity();
    int minor_rate_threshold = std::numeric_limits<int>::max();

    std::string describe() const;
};

/// Pure mapping from (observation/belief, rates, t) to the action vector.
std::vector<int> decide(const ThresholdPolicy& policy, const DecisionContext& ctx);

/// Belief-mean section loss of one component (percent).
double belief_mean_loss(const SystemModel& sys, const BeliefState& belief, int component);

struct GridEntry {
    ThresholdPolicy policy;
    double mean_cost = 0.0;
    double ci_halfwidth = 0.0;
};

struct GridResult {
    std::vector<GridEntry> entries;  // in enumeration order
    std::size_t best = 0;
};

/// Evaluates every candidate with `n_eval` Monte-Carlo episodes on shared
/// per-episode seeds and returns the cost-minimizing policy; ties keep the
/// earliest candidate.
GridResult grid_optimize(const std::vector<ThresholdPolicy>& candidates, const SystemModel& sys,
                         int n_eval, std::uint64_t master_seed);

/// Exhaustive state-action maps over an allowed action subset, optionally
/// crossed with a deterioration-rate override grid.
std::vector<ThresholdPolicy> enumerate_state_map_family(int num_states,
                                                        const std::vector<int>& allowed_actions,
                                                        const std::vector<int>& rate_thresholds = {},
                                                        int rate_action = 0,
                                                        const std::vector<int>& rate_states = {});

/// Loss-threshold candidates for one inspection period.
std::vector<ThresholdPolicy> enumerate_loss_threshold_family(int inspection_period,
                                                             const std::vector<double>& major_grid,
                                                             const std::vector<double>& replace_grid,
                                                             const std::vector<int>& minor_rate_grid);

}  // namespace lcdrl
