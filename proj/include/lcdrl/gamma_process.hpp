#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcdrl/common.hpp"
#include "lcdrl/rng.hpp"

namespace lcdrl {

/// Non-stationary gamma process for cumulative section loss: the loss at
/// exposure time tau follows Gamma(shape = f(tau), rate = lambda) with
/// f(tau) = coeff * tau^beta.
struct GammaProcessModel {
    double beta = 1.5;
    double lambda = 0.0;  // rate parameter (1/percent)
    double coeff = 0.0;   // f(tau) = coeff * tau^beta
    double shape_at(double tau) const;
};

/// Solves the shape/scale parameters so that the loss at time T has the given
/// mean and standard deviation: f(T) = (mean/sigma)^2, lambda = f(T)/mean.
GammaProcessModel calibrate(double mean_at_T, double sigma_at_T, double T, double beta);

/// Loss increment over (tau1, tau2]: Gamma(f(tau2) - f(tau1), 1/lambda).
double sample_increment(const GammaProcessModel& model, double tau1, double tau2, Rng& rng);

/// Damage-state discretization of the loss process: bins of `bin_width`
/// percent, an absorbing failure state beyond `failure_threshold`, and one
/// empirical transition matrix per exposure year.
struct DiscretizedDeterioration {
    double bin_width = 2.5;
    int num_states = 25;
    double failure_threshold = 60.0;
    std::vector<Matrix> matrices;        // per tau = 0..horizon-1
    std::vector<double> representative;  // section-loss percent represented by each state

    int bin_of(double loss) const;
};

/// Estimates the per-year transition matrices from `n_sims` simulated loss
/// paths. Rows never seen in simulation fall back to staying put; the failure
/// state is absorbing.
DiscretizedDeterioration estimate_transition_matrices(const GammaProcessModel& model,
                                                      double bin_width, int num_states,
                                                      double failure_threshold, int horizon,
                                                      long n_sims, std::uint64_t seed);

/// Binary cache so the Monte-Carlo estimation runs once per configuration.
/// Layout: magic "LCGP", u32 version, f64 beta/lambda/coeff/bin_width/
/// failure_threshold, i32 num_states/horizon, i64 n_sims, u64 seed, then
/// horizon*num_states*num_states doubles (row-major, per tau).
void save_deterioration_cache(const std::string& path, const GammaProcessModel& model,
                              const DiscretizedDeterioration& disc, long n_sims, std::uint64_t seed);

/// Returns true and fills `disc` when the cache exists and matches the
/// requested parameters exactly.
bool load_deterioration_cache(const std::string& path, const GammaProcessModel& model,
                              double bin_width, int num_states, double failure_threshold,
                              int horizon, long n_sims, std::uint64_t seed,
                              DiscretizedDeterioration& disc);

}  // namespace lcdrl
