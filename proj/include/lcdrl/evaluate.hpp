#pragma once

#include <cstdint>
#include <vector>

#include "lcdrl/system.hpp"

namespace lcdrl {

class Policy;

struct EvaluationReport {
    double mean_cost = 0.0;
    double ci_halfwidth = 0.0;  // 1.96 * s / sqrt(N)
    std::vector<double> per_episode;
    double normalization = 0.0;  // optional divisor; 0 = unset

    double normalized_mean() const { return normalization > 0.0 ? mean_cost / normalization : mean_cost; }
};

/// Simulates `n_episodes` full greedy episodes of the policy on per-episode
/// derived streams and reports the discounted-cost mean with a Gaussian 95%
/// confidence interval.
EvaluationReport evaluate_policy(const Policy& policy, const SystemModel& sys, int n_episodes,
                                 std::uint64_t master_seed);

/// Rolls out `policy_a` and counts, per control unit and step, how often
/// `policy_b` would have made the same decision.
double action_agreement(const Policy& policy_a, const Policy& policy_b, const SystemModel& sys,
                        int n_episodes, std::uint64_t master_seed);

}  // namespace lcdrl
