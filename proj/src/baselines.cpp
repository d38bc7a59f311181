#include "lcdrl/baselines.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lcdrl/evaluate.hpp"
#include "lcdrl/policies.hpp"

namespace lcdrl {

std::string ThresholdPolicy::describe() const {
    std::ostringstream out;
    if (kind == Kind::StateMap) {
        out << "map=";
        for (std::size_t i = 0; i < state_action.size(); ++i) out << (i ? "/" : "") << state_action[i];
        if (rate_threshold != std::numeric_limits<int>::max()) {
            out << " rate>=" << rate_threshold << "->a" << rate_action << "@";
            for (std::size_t i = 0; i < rate_applicable.size(); ++i)
                if (rate_applicable[i]) out << (i + 1);
        }
    } else {
        out << "inspect=" << inspection_period << "y major>=" << major_loss_threshold
            << "% replace>=" << replace_loss_threshold << "% minor-rate>=" << minor_rate_threshold;
    }
    return out.str();
}

double belief_mean_loss(const SystemModel& sys, const BeliefState& belief, int component) {
    const ComponentModel& c = sys.components[static_cast<std::size_t>(component)];
    if (c.loss_rep.empty()) throw std::logic_error("belief_mean_loss: component has no loss representatives");
    double mean = 0.0;
    for (int k = 0; k < c.num_states; ++k)
        mean += belief.damage[static_cast<std::size_t>(component)][static_cast<std::size_t>(k)] *
                c.loss_rep[static_cast<std::size_t>(k)];
    return mean;
}

std::vector<int> decide(const ThresholdPolicy& policy, const DecisionContext& ctx) {
    const SystemModel& sys = *ctx.sys;
    std::vector<int> actions(static_cast<std::size_t>(sys.num_units()), 0);
    for (int u = 0; u < sys.num_units(); ++u) {
        const ControlUnit& unit = sys.units[static_cast<std::size_t>(u)];
        if (unit.is_inspection) {
            bool inspect = policy.kind == ThresholdPolicy::Kind::LossThreshold &&
                           policy.inspection_period > 0 && (ctx.t + 1) % policy.inspection_period == 0;
            actions[static_cast<std::size_t>(u)] = inspect ? 1 : 0;
            continue;
        }
        int l = unit.component;
        int tau = ctx.belief->rate[static_cast<std::size_t>(l)];
        if (policy.kind == ThresholdPolicy::Kind::StateMap) {
            int x = (*ctx.observed)[static_cast<std::size_t>(l)];
            int a = policy.state_action.at(static_cast<std::size_t>(x - 1));
            if (tau >= policy.rate_threshold && !policy.rate_applicable.empty() &&
                policy.rate_applicable.at(static_cast<std::size_t>(x - 1)))
                a = policy.rate_action;
            actions[static_cast<std::size_t>(u)] = a;
        } else {
            double mean_loss = belief_mean_loss(sys, *ctx.belief, l);
            int a = 0;
            if (mean_loss >= policy.replace_loss_threshold) {
                a = 3;
            } else if (mean_loss >= policy.major_loss_threshold) {
                a = 2;
            } else if (tau >= policy.minor_rate_threshold) {
                a = 1;
            }
            actions[static_cast<std::size_t>(u)] = a;
        }
    }
    return actions;
}

GridResult grid_optimize(const std::vector<ThresholdPolicy>& candidates, const SystemModel& sys,
                         int n_eval, std::uint64_t master_seed) {
    if (candidates.empty()) throw std::invalid_argument("grid_optimize: no candidates");
    GridResult result;
    result.entries.reserve(candidates.size());
    for (const ThresholdPolicy& p : candidates) {
        BaselinePolicy policy(p);
        EvaluationReport report = evaluate_policy(policy, sys, n_eval, master_seed);
        result.entries.push_back({p, report.mean_cost, report.ci_halfwidth});
    }
    for (std::size_t i = 1; i < result.entries.size(); ++i)
        if (result.entries[i].mean_cost < result.entries[result.best].mean_cost) result.best = i;
    return result;
}

std::vector<ThresholdPolicy> enumerate_state_map_family(int num_states,
                                                        const std::vector<int>& allowed_actions,
                                                        const std::vector<int>& rate_thresholds,
                                                        int rate_action,
                                                        const std::vector<int>& rate_states) {
    std::vector<ThresholdPolicy> out;
    std::size_t combos = 1;
    for (int s = 0; s < num_states; ++s) combos *= allowed_actions.size();
    for (std::size_t c = 0; c < combos; ++c) {
        ThresholdPolicy base;
        base.kind = ThresholdPolicy::Kind::StateMap;
        base.state_action.resize(static_cast<std::size_t>(num_states));
        std::size_t rem = c;
        for (int s = 0; s < num_states; ++s) {
            base.state_action[static_cast<std::size_t>(s)] = allowed_actions[rem % allowed_actions.size()];
            rem /= allowed_actions.size();
        }
        if (rate_thresholds.empty()) {
            out.push_back(base);
            continue;
        }
        for (int thr : rate_thresholds) {
            ThresholdPolicy p = base;
            p.rate_threshold = thr;
            p.rate_action = rate_action;
            p.rate_applicable.assign(static_cast<std::size_t>(num_states), 0);
            for (int s : rate_states) p.rate_applicable.at(static_cast<std::size_t>(s - 1)) = 1;
            out.push_back(p);
        }
    }
    return out;
}

std::vector<ThresholdPolicy> enumerate_loss_threshold_family(int inspection_period,
                                                             const std::vector<double>& major_grid,
                                                             const std::vector<double>& replace_grid,
                                                             const std::vector<int>& minor_rate_grid) {
    std::vector<ThresholdPolicy> out;
    for (double major : major_grid) {
        for (double replace : replace_grid) {
            if (replace < major) continue;
            for (int minor : minor_rate_grid) {
                ThresholdPolicy p;
                p.kind = ThresholdPolicy::Kind::LossThreshold;
                p.inspection_period = inspection_period;
                p.major_loss_threshold = major;
                p.replace_loss_threshold = replace;
                p.minor_rate_threshold = minor;
                out.push_back(p);
            }
        }
    }
    return out;
}

}  // namespace lcdrl
