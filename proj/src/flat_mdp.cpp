#include "lcdrl/flat_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "lcdrl/common.hpp"

namespace lcdrl {

int FlatMDP::state_index(const std::vector<int>& damage) const {
    int idx = 0;
    for (int l = static_cast<int>(state_radix.size()) - 1; l >= 0; --l)
        idx = idx * state_radix[static_cast<std::size_t>(l)] + (damage[static_cast<std::size_t>(l)] - 1);
    return idx;
}

std::vector<int> FlatMDP::damage_of(int state) const {
    std::vector<int> damage(state_radix.size());
    for (std::size_t l = 0; l < state_radix.size(); ++l) {
        damage[l] = state % state_radix[l] + 1;
        state /= state_radix[l];
    }
    return damage;
}

int FlatMDP::action_index(const std::vector<int>& actions) const {
    int idx = 0;
    for (int u = static_cast<int>(action_radix.size()) - 1; u >= 0; --u)
        idx = idx * action_radix[static_cast<std::size_t>(u)] + actions[static_cast<std::size_t>(u)];
    return idx;
}

std::vector<int> FlatMDP::actions_of(int action) const {
    std::vector<int> actions(action_radix.size());
    for (std::size_t u = 0; u < action_radix.size(); ++u) {
        actions[u] = action % action_radix[u];
        action /= action_radix[u];
    }
    return actions;
}

namespace {

// Per-component branch outcomes of a maintenance action: (probability,
// post-action state) pairs, at most two per component.
struct Branch {
    double prob;
    int post_state;
};

std::vector<Branch> component_branches(const ComponentModel& c, int state, int action) {
    const ActionEffect& eff = c.actions[static_cast<std::size_t>(action)];
    int shifted = c.shifted_state(state, action);
    if (eff.success_prob >= 1.0 || shifted == state)
        return {{1.0, eff.success_prob >= 1.0 ? shifted : state}};
    return {{eff.success_prob, shifted}, {1.0 - eff.success_prob, state}};
}

void accumulate_expected_loss(const SystemModel& sys, const std::vector<std::vector<Branch>>& branches,
                              std::size_t level, double prob, std::vector<int>& post, double& expected) {
    if (level == branches.size()) {
        double losses = 0.0;
        for (std::size_t l = 0; l < post.size(); ++l)
            losses += sys.components[l].direct_loss[static_cast<std::size_t>(post[l] - 1)];
        expected += prob * mode_penalty(sys, post) * losses;
        return;
    }
    for (const Branch& b : branches[level]) {
        post[level] = b.post_state;
        accumulate_expected_loss(sys, branches, level + 1, prob * b.prob, post, expected);
    }
}

}  // namespace

double expected_step_cost(const SystemModel& sys, const std::vector<int>& damage,
                          const std::vector<int>& actions) {
    std::vector<int> comp_action(damage.size(), 0);
    double maintenance = 0.0;
    double inspection = 0.0;
    for (int u = 0; u < sys.num_units(); ++u) {
        const ControlUnit& unit = sys.units[static_cast<std::size_t>(u)];
        int a = actions[static_cast<std::size_t>(u)];
        if (unit.is_inspection) {
            if (a == 1) inspection = sys.inspection_cost;
        } else {
            comp_action[static_cast<std::size_t>(unit.component)] = a;
            maintenance += sys.components[static_cast<std::size_t>(unit.component)].actions[static_cast<std::size_t>(a)].cost;
        }
    }
    std::vector<std::vector<Branch>> branches(damage.size());
    for (std::size_t l = 0; l < damage.size(); ++l)
        branches[l] = component_branches(sys.components[l], damage[l], comp_action[l]);
    double expected_loss = 0.0;
    std::vector<int> post(damage.size());
    accumulate_expected_loss(sys, branches, 0, 1.0, post, expected_loss);
    return expected_loss + maintenance + inspection;
}

FlatMDP enumerate_joint(const SystemModel& sys, std::size_t max_state_action_pairs) {
    if (sys.nonstationary())
        throw std::invalid_argument("enumerate_joint: only stationary systems are enumerable");
    if (sys.mode_kind == ModeKind::Displacement)
        throw std::invalid_argument("enumerate_joint: displacement modes are load-dependent");

    FlatMDP mdp;
    mdp.horizon = sys.horizon;
    mdp.discount = sys.discount;
    std::size_t states = 1;
    for (const ComponentModel& c : sys.components) {
        mdp.state_radix.push_back(c.num_states);
        states *= static_cast<std::size_t>(c.num_states);
    }
    std::size_t joint_actions = 1;
    for (const ControlUnit& u : sys.units) {
        mdp.action_radix.push_back(u.num_actions);
        joint_actions *= static_cast<std::size_t>(u.num_actions);
    }
    if (states * joint_actions > max_state_action_pairs)
        throw std::invalid_argument("enumerate_joint: state-action space exceeds the cap");
    mdp.num_states = static_cast<int>(states);
    mdp.num_actions = static_cast<int>(joint_actions);

    mdp.cost.resize(states * joint_actions);
    mdp.transition.resize(joint_actions);

    int m = sys.num_components();
    for (int a = 0; a < mdp.num_actions; ++a) {
        std::vector<int> actions = mdp.actions_of(a);
        std::vector<int> comp_action(static_cast<std::size_t>(m), 0);
        for (int u = 0; u < sys.num_units(); ++u)
            if (!sys.units[static_cast<std::size_t>(u)].is_inspection)
                comp_action[static_cast<std::size_t>(sys.units[static_cast<std::size_t>(u)].component)] =
                    actions[static_cast<std::size_t>(u)];

        std::vector<Matrix> eff(static_cast<std::size_t>(m));
        for (int l = 0; l < m; ++l)
            eff[static_cast<std::size_t>(l)] =
                sys.components[static_cast<std::size_t>(l)].effective_transition_matrix(comp_action[static_cast<std::size_t>(l)], 0);

        auto& rows = mdp.transition[static_cast<std::size_t>(a)];
        rows.row_start.assign(states + 1, 0);

        for (int s = 0; s < mdp.num_states; ++s) {
            std::vector<int> d = mdp.damage_of(s);
            mdp.cost[static_cast<std::size_t>(s) * joint_actions + static_cast<std::size_t>(a)] =
                expected_step_cost(sys, d, actions);

            // Product of per-component rows, depth-first over non-zero entries.
            std::function<void(int, double, int)> expand = [&](int level, double prob, int partial) {
                if (level == m) {
                    rows.col.push_back(partial);
                    rows.prob.push_back(prob);
                    return;
                }
                const Matrix& e = eff[static_cast<std::size_t>(level)];
                int radix = mdp.state_radix[static_cast<std::size_t>(level)];
                int weight = 1;
                for (int l = 0; l < level; ++l) weight *= mdp.state_radix[static_cast<std::size_t>(l)];
                for (int j = 0; j < radix; ++j) {
                    double p = e.at(d[static_cast<std::size_t>(level)] - 1, j);
                    if (p == 0.0) continue;
                    expand(level + 1, prob * p, partial + j * weight);
                }
            };
            expand(0, 1.0, 0);
            rows.row_start[static_cast<std::size_t>(s) + 1] = rows.col.size();
        }
    }
    return mdp;
}

ExactSolution value_iteration_finite(const FlatMDP& mdp, Objective objective) {
    ExactSolution sol;
    sol.value.assign(static_cast<std::size_t>(mdp.horizon) + 1,
                     std::vector<double>(static_cast<std::size_t>(mdp.num_states), 0.0));
    sol.greedy.assign(static_cast<std::size_t>(mdp.horizon),
                      std::vector<int>(static_cast<std::size_t>(mdp.num_states), 0));
    bool minimize = objective == Objective::MinimizeCost;

    for (int t = mdp.horizon - 1; t >= 0; --t) {
        const std::vector<double>& next = sol.value[static_cast<std::size_t>(t) + 1];
        std::vector<double>& cur = sol.value[static_cast<std::size_t>(t)];
        std::vector<int>& pol = sol.greedy[static_cast<std::size_t>(t)];
        for (int s = 0; s < mdp.num_states; ++s) {
            double best = 0.0;
            int best_action = 0;
            for (int a = 0; a < mdp.num_actions; ++a) {
                const auto& rows = mdp.transition[static_cast<std::size_t>(a)];
                double q = mdp.cost[static_cast<std::size_t>(s) * mdp.num_actions + static_cast<std::size_t>(a)];
                double future = 0.0;
                for (std::size_t k = rows.row_start[static_cast<std::size_t>(s)];
                     k < rows.row_start[static_cast<std::size_t>(s) + 1]; ++k)
                    future += rows.prob[k] * next[static_cast<std::size_t>(rows.col[k])];
                q += mdp.discount * future;
                bool better = a == 0 || (minimize ? q < best : q > best);
                if (better) {
                    best = q;
                    best_action = a;
                }
            }
            cur[static_cast<std::size_t>(s)] = best;
            pol[static_cast<std::size_t>(s)] = best_action;
        }
    }
    return sol;
}

double evaluate_policy_exact(const FlatMDP& mdp, const std::function<int(int, int)>& policy,
                             int initial_state) {
    std::vector<double> next(static_cast<std::size_t>(mdp.num_states), 0.0);
    std::vector<double> cur(static_cast<std::size_t>(mdp.num_states), 0.0);
    for (int t = mdp.horizon - 1; t >= 0; --t) {
        for (int s = 0; s < mdp.num_states; ++s) {
            int a = policy(t, s);
            if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("policy action out of range");
            const auto& rows = mdp.transition[static_cast<std::size_t>(a)];
            double v = mdp.cost[static_cast<std::size_t>(s) * mdp.num_actions + static_cast<std::size_t>(a)];
            double future = 0.0;
            for (std::size_t k = rows.row_start[static_cast<std::size_t>(s)];
                 k < rows.row_start[static_cast<std::size_t>(s) + 1]; ++k)
                future += rows.prob[k] * next[static_cast<std::size_t>(rows.col[k])];
            cur[static_cast<std::size_t>(s)] = v + mdp.discount * future;
        }
        std::swap(cur, next);
    }
    return next[static_cast<std::size_t>(initial_state)];
}

void export_solution_csv(const FlatMDP& mdp, const ExactSolution& sol, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write solution export: " + path);
    out << "t,state,component_states,value,greedy_actions\n";
    for (int t = 0; t < mdp.horizon; ++t) {
        for (int s = 0; s < mdp.num_states; ++s) {
            std::vector<int> d = mdp.damage_of(s);
            std::string ds, as;
            for (std::size_t i = 0; i < d.size(); ++i) ds += (i ? " " : "") + std::to_string(d[i]);
            std::vector<int> actions = mdp.actions_of(sol.greedy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]);
            for (std::size_t i = 0; i < actions.size(); ++i) as += (i ? " " : "") + std::to_string(actions[i]);
            out << t << ',' << s << ',' << ds << ','
                << format_full(sol.value[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]) << ',' << as
                << '\n';
        }
    }
}

}  // namespace lcdrl
