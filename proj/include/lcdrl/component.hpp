#pragma once

#include <string>
#include <vector>

#include "lcdrl/common.hpp"

namespace lcdrl {

/// Effect of one maintenance action on a component at the decision step,
/// applied before the next environment transition.
struct ActionEffect {
    std::string name;
    double cost = 0.0;
    int state_shift = 0;       // damage states recovered (x -> max(1, x - state_shift))
    int rate_shift = 0;        // years subtracted from the deterioration rate
    bool reset = false;        // back to state 1 and rate 0
    double success_prob = 1.0; // probability the effect takes hold; on failure the
                               // transition follows the unmodified base matrix
};

/// Observation model: correct state seen with probability `precision`, the
/// remaining mass split between adjacent states (single neighbour at the
/// boundary rows).
struct ObservationModel {
    double precision = 1.0;
    Matrix matrix;  // |X| x |X|, row = true state, column = observed state

    static ObservationModel banded(int num_states, double precision);
};

/// One deteriorating component: damage-state transition matrices per
/// deterioration rate, available maintenance actions and their costs, and the
/// per-state direct losses.
struct ComponentModel {
    int num_states = 0;
    int max_rate = 0;                 // rates 0..max_rate have their own matrix
    std::vector<Matrix> base;         // base[tau], clamped above max_rate
    std::vector<ActionEffect> actions;
    std::vector<double> direct_loss;  // per damage state (1-based state s -> direct_loss[s-1])
    ObservationModel observation;
    std::vector<double> loss_rep;     // optional: section-loss percentage represented by each state

    bool stationary() const { return max_rate == 0; }

    const Matrix& base_at(int tau) const;

    /// Post-action condition of the component (1-based), assuming the action succeeded.
    int shifted_state(int state, int action) const;

    /// Deterministic rate used for the success-branch transition.
    int rate_after(int tau, int action) const;

    /// Rate carried into the next step: post-action rate plus one year of exposure.
    int next_rate(int tau, int action) const;

    /// Row-stochastic one-step matrix combining the maintenance effect with the
    /// base transition at the post-action rate; probabilistic actions mix the
    /// effected matrix with the unmodified base at the current rate.
    Matrix effective_transition_matrix(int action, int tau) const;

    void validate() const;
};

}  // namespace lcdrl
