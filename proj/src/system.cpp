#include "lcdrl/system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcdrl {

int SystemModel::num_joint_actions() const {
    int n = 1;
    for (const ControlUnit& u : units) {
        if (u.num_actions <= 0) throw std::logic_error("unit without actions");
        n *= u.num_actions;
    }
    return n;
}

bool SystemModel::nonstationary() const {
    for (const ComponentModel& c : components)
        if (!c.stationary()) return true;
    return false;
}

SystemState SystemModel::initial_state() const {
    SystemState s;
    s.damage.assign(components.size(), 1);
    s.rate.assign(components.size(), 0);
    s.t = 0;
    return s;
}

BeliefState SystemModel::initial_belief() const {
    BeliefState b;
    b.damage.resize(components.size());
    for (std::size_t l = 0; l < components.size(); ++l) {
        b.damage[l].assign(static_cast<std::size_t>(components[l].num_states), 0.0);
        b.damage[l][0] = 1.0;
    }
    b.rate.assign(components.size(), 0);
    b.t = 0;
    return b;
}

void SystemModel::validate() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (discount <= 0.0 || discount >= 1.0) throw std::invalid_argument("discount must be in (0,1)");
    if (components.empty()) throw std::invalid_argument("system needs components");
    for (const ComponentModel& c : components) c.validate();

    std::vector<int> seen(components.size(), 0);
    bool inspection_seen = false;
    for (const ControlUnit& u : units) {
        if (u.is_inspection) {
            if (inspection_seen) throw std::invalid_argument("more than one inspection unit");
            if (u.num_actions != 2) throw std::invalid_argument("inspection unit needs 2 actions");
            inspection_seen = true;
        } else {
            if (u.component < 0 || u.component >= num_components())
                throw std::invalid_argument("unit component out of range");
            if (u.num_actions != static_cast<int>(components[static_cast<std::size_t>(u.component)].actions.size()))
                throw std::invalid_argument("unit action count mismatch");
            seen[static_cast<std::size_t>(u.component)]++;
        }
    }
    for (int c : seen)
        if (c != 1) throw std::invalid_argument("every component must belong to exactly one maintenance unit");
    if (inspection_optional != inspection_seen)
        throw std::invalid_argument("inspection unit must exist iff inspections are optional");

    if (mode_kind == ModeKind::Displacement) {
        if (!truss) throw std::invalid_argument("displacement mode needs a truss");
        if (member_of_component.size() != components.size())
            throw std::invalid_argument("displacement mode needs a member per component");
        if (ratio_thresholds.size() != ratio_factors.size())
            throw std::invalid_argument("threshold/factor mismatch");
        for (const ComponentModel& c : components)
            if (c.loss_rep.empty()) throw std::invalid_argument("displacement mode needs loss_rep per component");
    }
    for (const KOutOfNRule& r : mode_rules)
        if (r.factor < 1.0) throw std::invalid_argument("penalty factor must be >= 1");
    if (mode_kind == ModeKind::Topology && failure_factor < 1.0)
        throw std::invalid_argument("penalty factor must be >= 1");
}

std::optional<double> displacement_ratio(const SystemModel& sys, const std::vector<int>& damage,
                                         double load_magnitude) {
    std::vector<double> loss(sys.truss->members.size(), 0.0);
    for (int l = 0; l < sys.num_components(); ++l) {
        const ComponentModel& c = sys.components[static_cast<std::size_t>(l)];
        int x = damage[static_cast<std::size_t>(l)];
        // Failed members carry no stiffness; otherwise the representative loss.
        double frac = (x == c.num_states) ? 1.0 : c.loss_rep[static_cast<std::size_t>(x - 1)] / 100.0;
        loss[static_cast<std::size_t>(sys.member_of_component[static_cast<std::size_t>(l)])] =
            std::min(1.0, std::max(0.0, frac));
    }
    TrussSolution sol = solve_displacement(*sys.truss, loss, load_magnitude);
    if (sol.singular) return std::nullopt;
    return sol.monitored_displacement / sys.yield_displacement;
}

double mode_penalty(const SystemModel& sys, const std::vector<int>& damage,
                    std::optional<double> ratio) {
    switch (sys.mode_kind) {
        case ModeKind::None:
            return 1.0;
        case ModeKind::Topology: {
            std::vector<bool> failed(damage.size());
            for (std::size_t l = 0; l < damage.size(); ++l)
                failed[l] = damage[l] == sys.components[l].num_states;
            return sys.failure_expr.evaluate(failed) ? sys.failure_factor : 1.0;
        }
        case ModeKind::KOutOfN: {
            double penalty = 1.0;
            int n = sys.num_components();
            for (const KOutOfNRule& r : sys.mode_rules) {
                int count = 0;
                for (int x : damage)
                    if (x >= r.min_state) ++count;
                if (count * 100 >= r.percent * n) penalty *= r.factor;
            }
            return penalty;
        }
        case ModeKind::Displacement: {
            if (!ratio.has_value())  // mechanism: worst mode
                return sys.ratio_factors.empty() ? 1.0 : sys.ratio_factors.back();
            double penalty = 1.0;
            for (std::size_t i = 0; i < sys.ratio_thresholds.size(); ++i)
                if (*ratio >= sys.ratio_thresholds[i]) penalty = sys.ratio_factors[i];
            return penalty;
        }
    }
    return 1.0;
}

StepOutcome step(const SystemModel& sys, const SystemState& state, const std::vector<int>& actions,
                 Rng& rng) {
    if (static_cast<int>(actions.size()) != sys.num_units())
        throw std::invalid_argument("step: one action per control unit expected");
    if (state.t >= sys.horizon) throw std::invalid_argument("step: episode already finished");

    int m = sys.num_components();
    StepOutcome out;
    out.post_action_state.resize(static_cast<std::size_t>(m));
    out.next.damage.resize(static_cast<std::size_t>(m));
    out.next.rate.resize(static_cast<std::size_t>(m));
    out.next.t = state.t + 1;

    // Success draws and post-action conditions, in component order.
    std::vector<int> comp_action(static_cast<std::size_t>(m), 0);
    std::vector<bool> succeeded(static_cast<std::size_t>(m), true);
    bool inspect = !sys.inspection_optional;
    for (int u = 0; u < sys.num_units(); ++u) {
        const ControlUnit& unit = sys.units[static_cast<std::size_t>(u)];
        int a = actions[static_cast<std::size_t>(u)];
        if (a < 0 || a >= unit.num_actions) throw std::invalid_argument("step: action out of range");
        if (unit.is_inspection) {
            inspect = a == 1;
        } else {
            comp_action[static_cast<std::size_t>(unit.component)] = a;
        }
    }
    for (int l = 0; l < m; ++l) {
        const ComponentModel& c = sys.components[static_cast<std::size_t>(l)];
        const ActionEffect& eff = c.actions[static_cast<std::size_t>(comp_action[static_cast<std::size_t>(l)])];
        bool ok = eff.success_prob >= 1.0 || rng.uniform() < eff.success_prob;
        succeeded[static_cast<std::size_t>(l)] = ok;
        out.post_action_state[static_cast<std::size_t>(l)] =
            ok ? c.shifted_state(state.damage[static_cast<std::size_t>(l)], comp_action[static_cast<std::size_t>(l)])
               : state.damage[static_cast<std::size_t>(l)];
        out.maintenance_cost += eff.cost;
    }

    // Penalty factor on the post-action condition.
    if (sys.mode_kind == ModeKind::Displacement) {
        double load = rng.normal(sys.load.mean, sys.load.mean * sys.load.cov);
        std::optional<double> ratio = displacement_ratio(sys, out.post_action_state, load);
        out.displacement_ratio = ratio.value_or(-1.0);
        out.penalty_factor = mode_penalty(sys, out.post_action_state, ratio);
    } else {
        out.penalty_factor = mode_penalty(sys, out.post_action_state);
    }

    for (int l = 0; l < m; ++l) {
        const ComponentModel& c = sys.components[static_cast<std::size_t>(l)];
        out.direct_losses += c.direct_loss[static_cast<std::size_t>(out.post_action_state[static_cast<std::size_t>(l)] - 1)];
    }
    if (inspect && sys.inspection_optional) out.inspection_cost = sys.inspection_cost;

    // Environment transition: the success branch moves from the post-action
    // state at the post-action rate, the failure branch from the original
    // state at the original rate.
    for (int l = 0; l < m; ++l) {
        const ComponentModel& c = sys.components[static_cast<std::size_t>(l)];
        int a = comp_action[static_cast<std::size_t>(l)];
        int tau = state.rate[static_cast<std::size_t>(l)];
        const Matrix& base = succeeded[static_cast<std::size_t>(l)] ? c.base_at(c.rate_after(tau, a)) : c.base_at(tau);
        int from = out.post_action_state[static_cast<std::size_t>(l)];
        out.next.damage[static_cast<std::size_t>(l)] = rng.categorical(base.row(from - 1)) + 1;
        out.next.rate[static_cast<std::size_t>(l)] = c.next_rate(tau, a);
    }

    out.total = out.penalty_factor * out.direct_losses + out.maintenance_cost + out.inspection_cost;
    return out;
}

std::optional<std::vector<int>> observe(const SystemModel& sys, const SystemState& next_state,
                                        const std::vector<int>& actions, Rng& rng) {
    if (sys.inspection_optional) {
        bool inspect = false;
        for (int u = 0; u < sys.num_units(); ++u)
            if (sys.units[static_cast<std::size_t>(u)].is_inspection && actions[static_cast<std::size_t>(u)] == 1)
                inspect = true;
        if (!inspect) return std::nullopt;
    }
    std::vector<int> obs(static_cast<std::size_t>(sys.num_components()));
    for (int l = 0; l < sys.num_components(); ++l) {
        const ComponentModel& c = sys.components[static_cast<std::size_t>(l)];
        obs[static_cast<std::size_t>(l)] =
            rng.categorical(c.observation.matrix.row(next_state.damage[static_cast<std::size_t>(l)] - 1)) + 1;
    }
    return obs;
}

BeliefState belief_update(const BeliefState& belief, const std::vector<int>& actions,
                          const std::optional<std::vector<int>>& observations, const SystemModel& sys) {
    BeliefState next;
    next.t = belief.t + 1;
    next.rate.resize(belief.rate.size());
    next.damage.resize(belief.damage.size());

    std::vector<int> comp_action(belief.damage.size(), 0);
    for (int u = 0; u < sys.num_units(); ++u) {
        const ControlUnit& unit = sys.units[static_cast<std::size_t>(u)];
        if (!unit.is_inspection)
            comp_action[static_cast<std::size_t>(unit.component)] = actions[static_cast<std::size_t>(u)];
    }

    for (std::size_t l = 0; l < belief.damage.size(); ++l) {
        const ComponentModel& c = sys.components[l];
        int a = comp_action[l];
        int tau = belief.rate[l];
        Matrix eff = c.effective_transition_matrix(a, tau);
        std::vector<double> predicted = left_multiply(belief.damage[l], eff);
        if (observations.has_value()) {
            int o = (*observations)[l];
            double norm = 0.0;
            for (int j = 0; j < c.num_states; ++j) {
                predicted[static_cast<std::size_t>(j)] *= c.observation.matrix.at(j, o - 1);
                norm += predicted[static_cast<std::size_t>(j)];
            }
            if (norm <= 0.0)
                throw std::runtime_error("belief_update: observation has zero likelihood under the prediction");
            for (double& v : predicted) v /= norm;
        } else {
            double norm = 0.0;
            for (double v : predicted) norm += v;
            for (double& v : predicted) v /= norm;  // guards accumulated rounding
        }
        next.damage[l] = std::move(predicted);
        next.rate[l] = c.next_rate(tau, a);
    }
    return next;
}

void set_observation_precision(SystemModel& sys, double precision) {
    for (ComponentModel& c : sys.components)
        c.observation = ObservationModel::banded(c.num_states, precision);
}

int encoded_input_size(const SystemModel& sys) {
    int n = 1;  // global time feature
    for (const ComponentModel& c : sys.components) {
        n += c.num_states;
        if (!c.stationary()) n += 1;
    }
    return n;
}

std::vector<double> encode_input(const BeliefState& belief, const SystemModel& sys) {
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(encoded_input_size(sys)));
    double T = static_cast<double>(sys.horizon);
    for (std::size_t l = 0; l < belief.damage.size(); ++l) {
        x.insert(x.end(), belief.damage[l].begin(), belief.damage[l].end());
        if (!sys.components[l].stationary()) x.push_back(belief.rate[l] / T);
    }
    x.push_back(belief.t / T);
    return x;
}

std::vector<double> encode_input(const SystemState& state, const SystemModel& sys) {
    BeliefState b;
    b.t = state.t;
    b.rate = state.rate;
    b.damage.resize(state.damage.size());
    for (std::size_t l = 0; l < state.damage.size(); ++l) {
        b.damage[l].assign(static_cast<std::size_t>(sys.components[l].num_states), 0.0);
        b.damage[l][static_cast<std::size_t>(state.damage[l] - 1)] = 1.0;
    }
    return encode_input(b, sys);
}

std::vector<int> decode_joint_action(const SystemModel& sys, int joint) {
    std::vector<int> actions(static_cast<std::size_t>(sys.num_units()));
    for (int u = 0; u < sys.num_units(); ++u) {
        int k = sys.units[static_cast<std::size_t>(u)].num_actions;
        actions[static_cast<std::size_t>(u)] = joint % k;
        joint /= k;
    }
    return actions;
}

int encode_joint_action(const SystemModel& sys, const std::vector<int>& actions) {
    int joint = 0;
    for (int u = sys.num_units() - 1; u >= 0; --u) {
        joint = joint * sys.units[static_cast<std::size_t>(u)].num_actions + actions[static_cast<std::size_t>(u)];
    }
    return joint;
}

void EpisodeRunner::reset() {
    state_ = sys_->initial_state();
    belief_ = sys_->initial_belief();
    observed_.assign(state_.damage.begin(), state_.damage.end());
    last_obs_.reset();
    discounted_cost_ = 0.0;
}

const StepOutcome& EpisodeRunner::advance(const std::vector<int>& actions, Rng& rng) {
    outcome_ = step(*sys_, state_, actions, rng);
    last_obs_ = observe(*sys_, outcome_.next, actions, rng);
    belief_ = belief_update(belief_, actions, last_obs_, *sys_);
    discounted_cost_ += std::pow(sys_->discount, state_.t) * outcome_.total;
    state_ = outcome_.next;
    if (last_obs_.has_value()) observed_ = *last_obs_;
    return outcome_;
}

}  // namespace lcdrl
