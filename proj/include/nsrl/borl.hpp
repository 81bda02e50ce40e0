#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nsrl/env.hpp"
#include "nsrl/ns_nac.hpp"
#include "nsrl/rng.hpp"
#include "nsrl/trace.hpp"

namespace nsrl {

// Hypothesized variation budgets {T^{j / floor(ln T)} : j = 0 .. floor(ln T)}.
// The exponent denominator is at least one. Throws InvalidHorizon for T < 2.
std::vector<double> arm_grid(std::size_t horizon);

// p_j = (1 - zeta) softmax(xi u)_j + zeta / K
std::vector<double> exp3p_probs(std::span<const double> weights, double xi, double zeta);

// u_j += (sigma + [j == pulled] * R~) / p_j, where R~ = (R / W + U_R) / (2 U_R)
// maps the epoch's mean reward into [0, 1]. Throws InvalidProbability.
std::vector<double> posterior_update(std::span<const double> weights, std::span<const double> probs,
                                     std::size_t pulled, double epoch_reward, std::size_t epoch_length,
                                     double sigma, double reward_bound);

struct Exp3pRates {
    double xi = 0.0;
    double sigma = 0.0;
    double zeta = 0.0;
};

inline constexpr double kDefaultZetaCap = 0.5;

// xi = 0.95 sqrt(L / (L E)), sigma = sqrt(L / (L E)), zeta = min(1.05 sqrt(L L / E), cap)
// with L = ceil(ln T) and E = ceil(T / W).
Exp3pRates default_exp3p_rates(std::size_t horizon, std::size_t epoch_length, double zeta_cap = kDefaultZetaCap);

// floor(T^{2/3}), computed exactly.
std::size_t default_epoch_length(std::size_t horizon);

// EXP3.P master over K arms.
class Exp3pMaster {
public:
    Exp3pMaster(std::size_t n_arms, Exp3pRates rates);

    std::size_t n_arms() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& probs() const { return probs_; }
    const Exp3pRates& rates() const { return rates_; }
    std::size_t epoch() const { return epoch_; }

    std::size_t sample(Rng& rng) const;
    void update(std::size_t pulled, double epoch_reward, std::size_t epoch_length, double reward_bound);

private:
    Exp3pRates rates_;
    std::vector<double> weights_;
    std::vector<double> probs_;
    std::size_t epoch_ = 0;
};

// NS-NAC parameters for an epoch of `steps` steps under hypothesized budget
// `budget`; the restart count is rescaled from the full horizon to W.
NsNacParams epoch_parameters(std::size_t horizon, std::size_t epoch_length, std::size_t steps, double budget,
                             double reward_bound, double radius_scale = kDefaultRadiusScale);

struct BorlSettings {
    std::size_t horizon = 0;
    std::size_t epoch_length = 0;  // 0 selects floor(T^{2/3})
    std::optional<double> xi;
    std::optional<double> sigma;
    std::optional<double> zeta;
    double zeta_cap = kDefaultZetaCap;
    double radius_scale = kDefaultRadiusScale;
    ProjectionScope projection = ProjectionScope::full_vector;
    RestartStart restart_start = RestartStart::teleport;
};

struct EpochSummary {
    std::size_t epoch = 0;
    std::size_t arm = 0;
    double hypothesized_budget = 0.0;
    double epoch_reward = 0.0;
    std::size_t steps = 0;
    std::vector<double> probs;  // distribution the arm was drawn from
};

struct BorlResult {
    RunTrace trace;
    std::vector<EpochSummary> epochs;
    Exp3pRates rates;
};

BorlResult run_borl(const BorlSettings& settings, const EnvironmentSchedule& schedule, std::uint64_t seed);

}  // namespace nsrl
