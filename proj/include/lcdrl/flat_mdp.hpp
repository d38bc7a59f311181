#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lcdrl/system.hpp"

namespace lcdrl {

/// Enumerated joint MDP over the product of component damage states (systems
/// must be stationary so the rate does not enter the state). Transition rows
/// are stored sparsely per action; costs are exact expectations over the
/// maintenance success branches.
struct FlatMDP {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    double discount = 0.99;
    std::vector<int> state_radix;   // per-component state count
    std::vector<int> action_radix;  // per-unit action count

    struct SparseRows {
        std::vector<std::size_t> row_start;  // num_states + 1
        std::vector<int> col;
        std::vector<double> prob;
    };
    std::vector<SparseRows> transition;  // per action
    std::vector<double> cost;            // [state * num_actions + action]

    int state_index(const std::vector<int>& damage) const;
    std::vector<int> damage_of(int state) const;
    int action_index(const std::vector<int>& actions) const;
    std::vector<int> actions_of(int action) const;
};

/// Expected immediate cost of a joint action: closed-form expectation over the
/// per-component success branches, including the mode penalty.
double expected_step_cost(const SystemModel& sys, const std::vector<int>& damage,
                          const std::vector<int>& actions);

FlatMDP enumerate_joint(const SystemModel& sys, std::size_t max_state_action_pairs = 1000000);

enum class Objective { MinimizeCost, MaximizeReward };

/// Backward induction over the full horizon. value[t] holds the optimal
/// cost-to-go at the start of step t (value[horizon] is all zeros); greedy[t]
/// the optimal action with ties broken toward the lowest action index.
struct ExactSolution {
    std::vector<std::vector<double>> value;   // horizon+1 tables
    std::vector<std::vector<int>> greedy;     // horizon tables
};

ExactSolution value_iteration_finite(const FlatMDP& mdp, Objective objective = Objective::MinimizeCost);

/// Expected discounted cost of an arbitrary time-indexed policy from a given
/// initial state.
double evaluate_policy_exact(const FlatMDP& mdp, const std::function<int(int, int)>& policy,
                             int initial_state);

/// Tabular export: state index, component states, t, V, greedy action tuple.
void export_solution_csv(const FlatMDP& mdp, const ExactSolution& sol, const std::string& path);

}  // namespace lcdrl
