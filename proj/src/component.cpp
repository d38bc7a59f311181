#include "lcdrl/component.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcdrl {

ObservationModel ObservationModel::banded(int num_states, double precision) {
    if (precision < 0.0 || precision > 1.0) throw std::invalid_argument("observation precision must be in [0,1]");
    ObservationModel m;
    m.precision = precision;
    m.matrix = Matrix(num_states, num_states);
    for (int i = 0; i < num_states; ++i) {
        if (num_states == 1) {
            m.matrix.at(i, i) = 1.0;
            continue;
        }
        m.matrix.at(i, i) = precision;
        double rest = 1.0 - precision;
        if (i == 0) {
            m.matrix.at(i, 1) = rest;
        } else if (i == num_states - 1) {
            m.matrix.at(i, i - 1) = rest;
        } else {
            m.matrix.at(i, i - 1) = rest / 2.0;
            m.matrix.at(i, i + 1) = rest / 2.0;
        }
    }
    return m;
}

const Matrix& ComponentModel::base_at(int tau) const {
    if (tau < 0) throw std::invalid_argument("negative deterioration rate");
    int idx = std::min(tau, max_rate);  // clamp beyond the table
    return base[static_cast<std::size_t>(idx)];
}

int ComponentModel::shifted_state(int state, int action) const {
    const ActionEffect& eff = actions.at(static_cast<std::size_t>(action));
    if (eff.reset) return 1;
    return std::max(1, state - eff.state_shift);
}

int ComponentModel::rate_after(int tau, int action) const {
    const ActionEffect& eff = actions.at(static_cast<std::size_t>(action));
    if (eff.reset) return 0;
    return std::max(0, tau + eff.rate_shift);
}

int ComponentModel::next_rate(int tau, int action) const {
    return std::min(rate_after(tau, action) + 1, max_rate == 0 ? 0 : max_rate);
}

Matrix ComponentModel::effective_transition_matrix(int action, int tau) const {
    if (action < 0 || action >= static_cast<int>(actions.size()))
        throw std::invalid_argument("invalid action index");
    if (tau < 0) throw std::invalid_argument("negative deterioration rate");
    const ActionEffect& eff = actions[static_cast<std::size_t>(action)];
    const Matrix& effected_base = base_at(rate_after(tau, action));
    const Matrix& plain = base_at(tau);

    Matrix out(num_states, num_states);
    for (int i = 0; i < num_states; ++i) {
        int shifted = shifted_state(i + 1, action) - 1;
        for (int j = 0; j < num_states; ++j) {
            out.at(i, j) = eff.success_prob * effected_base.at(shifted, j)
                         + (1.0 - eff.success_prob) * plain.at(i, j);
        }
    }
    return out;
}

void ComponentModel::validate() const {
    if (num_states < 1) throw std::invalid_argument("component needs at least one state");
    if (static_cast<int>(base.size()) != max_rate + 1)
        throw std::invalid_argument("expected one base matrix per rate 0..max_rate");
    for (const Matrix& m : base) {
        if (m.rows != num_states || m.cols != num_states)
            throw std::invalid_argument("base matrix shape mismatch");
        if (!is_row_stochastic(m)) throw std::invalid_argument("base matrix is not row-stochastic");
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < i; ++j)
                if (m.at(i, j) != 0.0) throw std::invalid_argument("base matrix must be upper-triangular");
    }
    if (static_cast<int>(direct_loss.size()) != num_states)
        throw std::invalid_argument("direct_loss needs one entry per state");
    if (actions.empty()) throw std::invalid_argument("component needs at least one action");
    for (const ActionEffect& a : actions) {
        if (a.success_prob < 0.0 || a.success_prob > 1.0)
            throw std::invalid_argument("success_prob must be in [0,1]");
    }
    if (observation.matrix.rows != num_states || !is_row_stochastic(observation.matrix))
        throw std::invalid_argument("observation matrix invalid");
    if (!loss_rep.empty() && static_cast<int>(loss_rep.size()) != num_states)
        throw std::invalid_argument("loss_rep needs one entry per state");
}

}  // namespace lcdrl
