#include "lcdrl/policies.hpp"

namespace lcdrl {

std::vector<int> DcmacGreedyPolicy::decide(const DecisionContext& ctx) const {
    std::vector<double> input = encode_input(*ctx.belief, *sys_);
    std::vector<double> raw = forward_raw(*actor_, input);
    std::vector<int> actions(static_cast<std::size_t>(sys_->num_units()), 0);
    int offset = 0;
    for (int u = 0; u < sys_->num_units(); ++u) {
        int k = sys_->units[static_cast<std::size_t>(u)].num_actions;
        int best = 0;
        for (int a = 1; a < k; ++a)
            if (raw[static_cast<std::size_t>(offset + a)] > raw[static_cast<std::size_t>(offset + best)]) best = a;
        actions[static_cast<std::size_t>(u)] = best;
        offset += k;
    }
    return actions;
}

std::vector<int> DdqnGreedyPolicy::decide(const DecisionContext& ctx) const {
    std::vector<double> input = encode_input(*ctx.belief, *sys_);
    std::vector<double> q = forward_raw(*net_, input);
    int best = 0;
    for (int a = 1; a < static_cast<int>(q.size()); ++a)
        if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
    return decode_joint_action(*sys_, best);
}

std::vector<int> ExactGreedyPolicy::decide(const DecisionContext& ctx) const {
    int state = mdp_->state_index(*ctx.observed);
    int joint = solution_->greedy[static_cast<std::size_t>(ctx.t)][static_cast<std::size_t>(state)];
    return mdp_->actions_of(joint);
}

}  // namespace lcdrl
