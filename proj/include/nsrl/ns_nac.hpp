#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nsrl/env.hpp"
#include "nsrl/mdp.hpp"
#include "nsrl/rng.hpp"
#include "nsrl/trace.hpp"

namespace nsrl {

// Where the critic's ball projection applies: the whole q-table (default) or
// only the freshly updated entry.
enum class ProjectionScope { full_vector, entry };

// How a restart picks its first state: a uniform draw (default) or the state
// the previous segment ended in.
enum class RestartStart { teleport, carry_over };

std::string to_string(ProjectionScope scope);
std::string to_string(RestartStart start);
ProjectionScope parse_projection_scope(const std::string& name);
RestartStart parse_restart_start(const std::string& name);

inline constexpr double kStepFloor = 1e-4;
inline constexpr double kStepCeiling = 0.499;
inline constexpr double kDefaultRadiusScale = 100.0;

struct NsNacParams {
    double actor_step = 0.0;   // alpha
    double critic_step = 0.0;  // beta
    double reward_step = 0.0;  // gamma
    std::size_t n_restarts = 1;
    double projection_radius = kDefaultRadiusScale;
    std::size_t horizon = 0;
    ProjectionScope projection = ProjectionScope::full_vector;
    RestartStart restart_start = RestartStart::teleport;

    // Segment length floor(T / N).
    std::size_t segment_length() const { return n_restarts == 0 ? 0 : horizon / n_restarts; }

    // Throws ConfigError unless 0 < alpha, beta, gamma < 1/2, 1 <= N <= T and R_Q > 0.
    void validate() const;
};

// Step sizes and restart count tuned to a variation budget:
// beta = gamma = (D/T)^{1/3}, alpha = (D/T)^{1/2}, N = D^{5/6} T^{1/6},
// with steps clamped to [1e-4, 0.499] and N to [1, T].
NsNacParams default_hyperparameters(std::size_t horizon, double delta_total, double reward_bound,
                                    double radius_scale = kDefaultRadiusScale);

double update_eta(double eta, double reward, double gamma);

struct LearnerState {
    TabularPolicy policy;
    std::vector<double> q_table;
    double eta = 0.0;
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t segment = 0;
    std::size_t step_in_segment = 0;

    // Uniform policy, zero critic, zero average-reward estimate.
    static LearnerState fresh(std::size_t n_states, std::size_t n_actions);
};

// TD(0) increment on entry (s, a) against the successor pair, using the
// estimate `state.eta`, then projection onto the radius-R ball.
std::vector<double> update_critic(const LearnerState& state, double reward, std::size_t next_state,
                                  std::size_t next_action, double beta, double radius,
                                  ProjectionScope scope = ProjectionScope::full_vector);

void update_critic_inplace(std::span<double> q_table, std::size_t n_actions, std::size_t state,
                           std::size_t action, double reward, double eta, std::size_t next_state,
                           std::size_t next_action, double beta, double radius, ProjectionScope scope);

// Called with the global time and the learner state at the start of every step.
using StepObserver = std::function<void(std::size_t, const LearnerState&)>;

// Runs NS-NAC for params.horizon steps starting at schedule time `start`,
// drawing from `rng`. Segment indices in the trace restart from 0.
RunTrace run_ns_nac_from(const NsNacParams& params, const EnvironmentSchedule& schedule, std::size_t start, Rng& rng,
                    const StepObserver& observer = {});

// Full run from t = 0 on the agent stream derived from `seed`.
RunTrace run_ns_nac(const NsNacParams& params, const EnvironmentSchedule& schedule, std::uint64_t seed,
                    const StepObserver& observer = {});

// Baseline that never learns: actions drawn from a fixed policy.
RunTrace run_fixed_policy(const TabularPolicy& policy, const EnvironmentSchedule& schedule, std::uint64_t seed);

}  // namespace nsrl
