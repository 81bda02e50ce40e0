#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nsrl/env.hpp"
#include "nsrl/mdp.hpp"
#include "nsrl/trace.hpp"

namespace nsrl {

struct OptimalSolution {
    double j_star = 0.0;
    std::vector<double> bias;             // h with h(0) = 0
    std::vector<std::size_t> greedy;      // argmax action per state, lowest index on ties
    std::size_t iterations = 0;
};

struct RviOptions {
    double span_tolerance = 1e-9;
    std::size_t max_iterations = 1'000'000;
    double feasibility_tolerance = 1e-7;
};

// Optimal gain by relative value iteration with reference state 0. The result
// is certified against the LP constraints J + h(s) >= r(s,a) + sum p h before
// returning. Throws NoConvergence.
OptimalSolution optimal_average_reward(const MdpSnapshot& snapshot, const RviOptions& options = {},
                                       std::span<const double> warm_start = {});

// Brute force over all deterministic policies; only for |S||A| <= 12.
OptimalSolution optimal_average_reward_enumeration(const MdpSnapshot& snapshot);

inline constexpr std::size_t kEnumerationLimit = 12;

// RVI, falling back to enumeration on small instances when RVI stalls.
OptimalSolution optimal_average_reward_robust(const MdpSnapshot& snapshot, const RviOptions& options = {},
                                              std::span<const double> warm_start = {});

// Largest violation max(0, r(s,a) + sum p h - J - h(s)) of the LP constraints.
double lp_violation(const MdpSnapshot& snapshot, double j_star, std::span<const double> bias);
// Largest |J + h(s) - r(s, pi(s)) - sum p h| over the states of a deterministic policy.
double lp_slack(const MdpSnapshot& snapshot, double j_star, std::span<const double> bias,
                std::span<const std::size_t> policy);

// J*_t for every t. Abrupt schedules solve once per distinct phase; gradual
// schedules solve every step, warm-started from the previous bias.
std::vector<double> benchmark_series(const EnvironmentSchedule& schedule, bool enumeration_fallback = false);

struct RegretResult {
    double total = 0.0;
    std::vector<double> steps;  // J*_t - r_t
    std::vector<double> cumulative;
};

// cumulative[t] = sum_{i <= t} (J*_i - r_i). Throws LengthMismatch.
RegretResult dynamic_regret(std::span<const double> rewards, std::span<const double> benchmark);
RegretResult dynamic_regret(const RunTrace& trace, std::span<const double> benchmark);

}  // namespace nsrl
