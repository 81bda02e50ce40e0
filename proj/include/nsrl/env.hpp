#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsrl/mdp.hpp"
#include "nsrl/rng.hpp"

namespace nsrl {

struct PhasePair {
    MdpSnapshot phase_a;
    MdpSnapshot phase_b;
};

// Two random phases: Dirichlet(0.5) transition rows, Beta(0.5, 0.5) rewards for
// the first phase and Beta(0.2, 0.9) rewards for the second.
PhasePair generate_phase_pair(std::size_t n_states, std::size_t n_actions, Rng& rng);

enum class ScheduleMode { periodic_abrupt, random_abrupt, gradual };

std::string to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(const std::string& name);

struct VariationBudget {
    double delta_r = 0.0;
    double delta_p = 0.0;
    double delta_total = 0.0;
};

// Time-indexed environment over [0, horizon). Abrupt modes flip between the
// two phases at stored switch times; the gradual mode interpolates linearly
// from phase_a at t = 0 to phase_b at t = horizon - 1.
class EnvironmentSchedule {
public:
    // Segments of length floor(T / (n_switches + 1)); the last one absorbs the remainder.
    static EnvironmentSchedule periodic(PhasePair phases, std::size_t horizon, std::size_t n_switches,
                                        bool vary_rewards);
    // Switch times drawn without replacement from [1, T - 1] and sorted.
    static EnvironmentSchedule random(PhasePair phases, std::size_t horizon, std::size_t n_switches,
                                      bool vary_rewards, Rng& rng);
    static EnvironmentSchedule with_switch_times(PhasePair phases, std::size_t horizon, ScheduleMode mode,
                                                 std::vector<std::size_t> switch_times, bool vary_rewards);
    static EnvironmentSchedule gradual(PhasePair phases, std::size_t horizon, bool vary_rewards);

    std::size_t horizon() const { return horizon_; }
    ScheduleMode mode() const { return mode_; }
    bool vary_rewards() const { return vary_rewards_; }
    std::size_t n_switches() const { return switch_times_.size(); }
    const std::vector<std::size_t>& switch_times() const { return switch_times_; }
    const PhasePair& phases() const { return phases_; }
    std::size_t n_states() const { return phases_.phase_a.n_states(); }
    std::size_t n_actions() const { return phases_.phase_a.n_actions(); }
    double reward_bound() const { return phases_.phase_a.reward_bound(); }

    bool piecewise_constant() const { return mode_ != ScheduleMode::gradual; }

    // Phase in force at t (0 or 1) for abrupt modes.
    int phase_index(std::size_t t) const;
    // Effective snapshot of a phase, with phase_a rewards when rewards are stationary.
    const MdpSnapshot& phase_snapshot(int index) const { return effective_[index]; }
    // Interpolation weight of phase_b at t in gradual mode.
    double mix(std::size_t t) const;

    MdpSnapshot env_at(std::size_t t) const;
    double reward(std::size_t t, std::size_t s, std::size_t a) const;
    double transition(std::size_t t, std::size_t s, std::size_t a, std::size_t next) const;

    // Provenance, persisted with the schedule.
    std::optional<std::uint64_t> seed;

private:
    EnvironmentSchedule(PhasePair phases, std::size_t horizon, ScheduleMode mode,
                        std::vector<std::size_t> switch_times, bool vary_rewards);
    void check_time(std::size_t t) const;

    PhasePair phases_;
    std::size_t horizon_ = 0;
    ScheduleMode mode_ = ScheduleMode::periodic_abrupt;
    std::vector<std::size_t> switch_times_;
    bool vary_rewards_ = false;
    MdpSnapshot effective_[2];
};

struct StepResult {
    double reward;
    std::size_t next_state;
};

// Reward at (t, s, a) and a successor drawn by inverse CDF from one uniform.
StepResult step(const EnvironmentSchedule& schedule, std::size_t t, std::size_t state, std::size_t action,
                Rng& rng);

// Index drawn from a probability vector by inverse CDF on one uniform draw.
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

// max_{s,a} sum_{s'} |P(s'|s,a) - P'(s'|s,a)|
double transition_distance(const MdpSnapshot& lhs, const MdpSnapshot& rhs);
// max_{s,a} |r(s,a) - r'(s,a)|
double reward_distance(const MdpSnapshot& lhs, const MdpSnapshot& rhs);

VariationBudget variation_budget(const EnvironmentSchedule& schedule);
// Budget accumulated by the per-step changes t -> t + 1 for begin <= t < end - 1.
VariationBudget variation_budget(const EnvironmentSchedule& schedule, std::size_t begin, std::size_t end);

nlohmann::json to_json(const EnvironmentSchedule& schedule);
EnvironmentSchedule schedule_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const VariationBudget& budget);

}  // namespace nsrl
