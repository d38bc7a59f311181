#include "lcdrl/evaluate.hpp"

#include <cmath>
#include <stdexcept>

#include "lcdrl/policies.hpp"

namespace lcdrl {

EvaluationReport evaluate_policy(const Policy& policy, const SystemModel& sys, int n_episodes,
                                 std::uint64_t master_seed) {
    if (n_episodes < 1) throw std::invalid_argument("evaluate_policy: needs at least one episode");
    EvaluationReport report;
    report.per_episode.reserve(static_cast<std::size_t>(n_episodes));
    EpisodeRunner runner(sys);
    for (int e = 0; e < n_episodes; ++e) {
        Rng rng(Rng::derive(master_seed, static_cast<std::uint64_t>(e)));
        runner.reset();
        while (!runner.done()) {
            DecisionContext ctx{runner.t(), &sys, &runner.belief(), &runner.observed()};
            runner.advance(policy.decide(ctx), rng);
        }
        report.per_episode.push_back(runner.discounted_cost());
    }
    double sum = 0.0;
    for (double c : report.per_episode) sum += c;
    report.mean_cost = sum / n_episodes;
    if (n_episodes > 1) {
        double ss = 0.0;
        for (double c : report.per_episode) {
            double d = c - report.mean_cost;
            ss += d * d;
        }
        double sd = std::sqrt(ss / (n_episodes - 1));
        report.ci_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(n_episodes));
    }
    return report;
}

double action_agreement(const Policy& policy_a, const Policy& policy_b, const SystemModel& sys,
                        int n_episodes, std::uint64_t master_seed) {
    if (n_episodes < 1) throw std::invalid_argument("action_agreement: needs at least one episode");
    long matched = 0;
    long total = 0;
    EpisodeRunner runner(sys);
    for (int e = 0; e < n_episodes; ++e) {
        Rng rng(Rng::derive(master_seed, static_cast<std::uint64_t>(e)));
        runner.reset();
        while (!runner.done()) {
            DecisionContext ctx{runner.t(), &sys, &runner.belief(), &runner.observed()};
            std::vector<int> a = policy_a.decide(ctx);
            std::vector<int> b = policy_b.decide(ctx);
            for (std::size_t u = 0; u < a.size(); ++u) {
                matched += a[u] == b[u];
                ++total;
            }
            runner.advance(a, rng);
        }
    }
    return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace lcdrl
