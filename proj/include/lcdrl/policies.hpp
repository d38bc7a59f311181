#pragma once

#include <memory>
#include <vector>

#include "lcdrl/baselines.hpp"
#include "lcdrl/flat_mdp.hpp"
#include "lcdrl/net.hpp"
#include "lcdrl/system.hpp"

namespace lcdrl {

/// Deterministic decision rule used for evaluation rollouts.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::vector<int> decide(const DecisionContext& ctx) const = 0;
};

/// Greedy factored actor: argmax of each softmax head (ties toward the lowest
/// action index).
class DcmacGreedyPolicy : public Policy {
  public:
    DcmacGreedyPolicy(const DenseNet& actor, const SystemModel& sys) : actor_(&actor), sys_(&sys) {}
    std::vector<int> decide(const DecisionContext& ctx) const override;

  private:
    const DenseNet* actor_;
    const SystemModel* sys_;
};

/// Greedy value network: argmax over joint actions, decoded per unit.
class DdqnGreedyPolicy : public Policy {
  public:
    DdqnGreedyPolicy(const DenseNet& q_net, const SystemModel& sys) : net_(&q_net), sys_(&sys) {}
    std::vector<int> decide(const DecisionContext& ctx) const override;

  private:
    const DenseNet* net_;
    const SystemModel* sys_;
};

/// Table lookup into an exact solution; valid under complete observability
/// where the observed states are the true states.
class ExactGreedyPolicy : public Policy {
  public:
    ExactGreedyPolicy(const FlatMDP& mdp, const ExactSolution& solution, const SystemModel& sys)
        : mdp_(&mdp), solution_(&solution), sys_(&sys) {}
    std::vector<int> decide(const DecisionContext& ctx) const override;

  private:
    const FlatMDP* mdp_;
    const ExactSolution* solution_;
    const SystemModel* sys_;
};

class BaselinePolicy : public Policy {
  public:
    explicit BaselinePolicy(ThresholdPolicy rule) : rule_(std::move(rule)) {}
    std::vector<int> decide(const DecisionContext& ctx) const override { return lcdrl::decide(rule_, ctx); }
    const ThresholdPolicy& rule() const { return rule_; }

  private:
    ThresholdPolicy rule_;
};

}  // namespace lcdrl
