#pragma once

#include <initializer_list>
#include <vector>

#include "lcdrl/system.hpp"

namespace lcdrl::testing {

inline Matrix make_matrix(std::initializer_list<std::initializer_list<double>> rows) {
    int n = static_cast<int>(rows.size());
    Matrix m(n, static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (double v : row) m.at(r, c++) = v;
        ++r;
    }
    return m;
}

/// 4-state deteriorating component in the generic triangular form, with a
/// do-nothing and a certain replace action.
inline ComponentModel four_state_component(double p11 = 0.90, double p22 = 0.87, double p33 = 0.86,
                                           double precision = 1.0, double replace_cost = 45.0,
                                           std::vector<double> losses = {0.0, 4.0, 30.0, 250.0}) {
    ComponentModel c;
    c.num_states = 4;
    c.max_rate = 0;
    c.base.push_back(make_matrix({{p11, (1 - p11) * 0.8, (1 - p11) * 0.2, 0.0},
                                  {0.0, p22, (1 - p22) * 0.85, (1 - p22) * 0.15},
                                  {0.0, 0.0, p33, 1 - p33},
                                  {0.0, 0.0, 0.0, 1.0}}));
    c.direct_loss = std::move(losses);
    c.actions.push_back({"do-nothing", 0.0, 0, 0, false, 1.0});
    c.actions.push_back({"replace", replace_cost, 0, 0, true, 1.0});
    c.observation = ObservationModel::banded(4, precision);
    return c;
}

/// Adds repair actions (state shift, optional rate shift) to a component.
inline void add_repair_actions(ComponentModel& c, double success = 0.95, double minor_cost = 8.0,
                               double major_cost = 20.0) {
    c.actions.insert(c.actions.begin() + 1, {"minor-repair", minor_cost, 1, 0, false, success});
    c.actions.insert(c.actions.begin() + 2, {"major-repair", major_cost, 1, -5, false, success});
}

inline SystemModel simple_system(std::vector<ComponentModel> components, int horizon = 50,
                                 double discount = 0.99) {
    SystemModel sys;
    sys.name = "test";
    sys.components = std::move(components);
    sys.horizon = horizon;
    sys.discount = discount;
    for (int l = 0; l < sys.num_components(); ++l)
        sys.units.push_back({l, static_cast<int>(sys.components[static_cast<std::size_t>(l)].actions.size()), false});
    return sys;
}

/// Brute-force joint belief filter over the product state space of a
/// two-component system; the independent oracle for the factored update.
class JointBeliefOracle {
  public:
    explicit JointBeliefOracle(const SystemModel& sys) : sys_(&sys) {
        n1_ = sys.components[0].num_states;
        n2_ = sys.components[1].num_states;
        joint_.assign(static_cast<std::size_t>(n1_) * n2_, 0.0);
        joint_[0] = 1.0;
        rate_ = {0, 0};
    }

    void update(const std::vector<int>& actions, const std::optional<std::vector<int>>& obs) {
        Matrix m1 = sys_->components[0].effective_transition_matrix(actions[0], rate_[0]);
        Matrix m2 = sys_->components[1].effective_transition_matrix(actions[1], rate_[1]);
        std::vector<double> next(joint_.size(), 0.0);
        for (int s1 = 0; s1 < n1_; ++s1)
            for (int s2 = 0; s2 < n2_; ++s2) {
                double p = joint_[static_cast<std::size_t>(s1) * n2_ + s2];
                if (p == 0.0) continue;
                for (int t1 = 0; t1 < n1_; ++t1)
                    for (int t2 = 0; t2 < n2_; ++t2)
                        next[static_cast<std::size_t>(t1) * n2_ + t2] += p * m1.at(s1, t1) * m2.at(s2, t2);
            }
        if (obs.has_value()) {
            double norm = 0.0;
            for (int t1 = 0; t1 < n1_; ++t1)
                for (int t2 = 0; t2 < n2_; ++t2) {
                    double w = sys_->components[0].observation.matrix.at(t1, (*obs)[0] - 1) *
                               sys_->components[1].observation.matrix.at(t2, (*obs)[1] - 1);
                    next[static_cast<std::size_t>(t1) * n2_ + t2] *= w;
                    norm += next[static_cast<std::size_t>(t1) * n2_ + t2];
                }
            for (double& v : next) v /= norm;
        }
        joint_ = std::move(next);
        rate_[0] = sys_->components[0].next_rate(rate_[0], actions[0]);
        rate_[1] = sys_->components[1].next_rate(rate_[1], actions[1]);
    }

    std::vector<double> marginal(int component) const {
        std::vector<double> m(static_cast<std::size_t>(component == 0 ? n1_ : n2_), 0.0);
        for (int s1 = 0; s1 < n1_; ++s1)
            for (int s2 = 0; s2 < n2_; ++s2)
                m[static_cast<std::size_t>(component == 0 ? s1 : s2)] +=
                    joint_[static_cast<std::size_t>(s1) * n2_ + s2];
        return m;
    }

  private:
    const SystemModel* sys_;
    int n1_, n2_;
    std::vector<double> joint_;
    std::vector<int> rate_;
};

}  // namespace lcdrl::testing
