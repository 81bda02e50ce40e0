#include "nsrl/ns_nac.hpp"

#include <algorithm>
#include <cmath>

#include "nsrl/errors.hpp"

namespace nsrl {

std::string to_string(ProjectionScope scope) {
    return scope == ProjectionScope::full_vector ? "full_vector" : "entry";
}

std::string to_string(RestartStart start) { return start == RestartStart::teleport ? "teleport" : "carry_over"; }

ProjectionScope parse_projection_scope(const std::string& name) {
    if (name == "full_vector") return ProjectionScope::full_vector;
    if (name == "entry") return ProjectionScope::entry;
    throw ConfigError("projection", "expected 'full_vector' or 'entry', got '" + name + "'");
}

RestartStart parse_restart_start(const std::string& name) {
    if (name == "teleport") return RestartStart::teleport;
    if (name == "carry_over") return RestartStart::carry_over;
    throw ConfigError("restart_start", "expected 'teleport' or 'carry_over', got '" + name + "'");
}

void NsNacParams::validate() const {
    auto check_step = [](double v, const char* name) {
        if (!(v > 0.0 && v < 0.5)) throw ConfigError(name, "step size must lie in (0, 1/2), got " + std::to_string(v));
    };
    check_step(actor_step, "alpha");
    check_step(critic_step, "beta");
    check_step(reward_step, "gamma");
    if (n_restarts < 1 || n_restarts > std::max<std::size_t>(horizon, 1))
        throw ConfigError("N", "restart count must lie in [1, T]");
    if (!(projection_radius > 0.0)) throw ConfigError("R_Q", "projection radius must be positive");
}

NsNacParams default_hyperparameters(std::size_t horizon, double delta_total, double reward_bound,
                                    double radius_scale) {
    if (horizon < 1) throw InvalidHorizon("default_hyperparameters: horizon must be at least 1");
    if (!(delta_total >= 0.0)) throw InvalidArgument("default_hyperparameters: negative variation budget");
    const double t = static_cast<double>(horizon);
    const double ratio = delta_total / t;
    NsNacParams p;
    p.horizon = horizon;
    p.critic_step = std::clamp(std::cbrt(ratio), kStepFloor, kStepCeiling);
    p.reward_step = p.critic_step;
    p.actor_step = std::clamp(std::sqrt(ratio), kStepFloor, kStepCeiling);
    const double restarts = std::round(std::pow(delta_total, 5.0 / 6.0) * std::pow(t, 1.0 / 6.0));
    p.n_restarts = static_cast<std::size_t>(std::clamp(restarts, 1.0, t));
    p.projection_radius = radius_scale * reward_bound;
    return p;
}

double update_eta(double eta, double reward, double gamma) { return eta + gamma * (reward - eta); }

LearnerState LearnerState::fresh(std::size_t n_states, std::size_t n_actions) {
    LearnerState s;
    s.policy = TabularPolicy::uniform(n_states, n_actions);
    s.q_table.assign(n_states * n_actions, 0.0);
    return s;
}

void update_critic_inplace(std::span<double> q_table, std::size_t n_actions, std::size_t state,
                           std::size_t action, double reward, double eta, std::size_t next_state,
                           std::size_t next_action, double beta, double radius, ProjectionScope scope) {
    const std::size_t here = state * n_actions + action;
    const std::size_t there = next_state * n_actions + next_action;
    q_table[here] += beta * (reward - eta + q_table[there] - q_table[here]);
    if (scope == ProjectionScope::full_vector)
        project_ball_inplace(q_table, radius);
    else
        q_table[here] = std::clamp(q_table[here], -radius, radius);
}

std::vector<double> update_critic(const LearnerState& state, double reward, std::size_t next_state,
                                  std::size_t next_action, double beta, double radius, ProjectionScope scope) {
    std::vector<double> q = state.q_table;
    update_critic_inplace(q, state.policy.n_actions(), state.state, state.action, reward, state.eta, next_state,
                          next_action, beta, radius, scope);
    return q;
}

RunTrace run_ns_nac_from(const NsNacParams& params, const EnvironmentSchedule& schedule, std::size_t start, Rng& rng,
                    const StepObserver& observer) {
    const std::size_t horizon = params.horizon;
    if (start + horizon > schedule.horizon())
        throw IndexOutOfHorizon("run_ns_nac_from: run extends past the schedule horizon");
    RunTrace trace;
    if (horizon == 0) return trace;
    if (params.n_restarts < 1 || params.n_restarts > horizon)
        throw InvalidArgument("run_ns_nac: restart count must lie in [1, T]");
    if (!(params.projection_radius > 0.0)) throw InvalidArgument("run_ns_nac: projection radius must be positive");

    const std::size_t ns = schedule.n_states();
    const std::size_t na = schedule.n_actions();
    const std::size_t seg_len = params.segment_length();
    const std::size_t full_segments = params.n_restarts;
    const std::size_t remainder = horizon - full_segments * seg_len;
    const std::size_t n_segments = full_segments + (remainder > 0 ? 1 : 0);

    trace.records.reserve(horizon);
    LearnerState learner = LearnerState::fresh(ns, na);
    std::size_t t = 0;
    for (std::size_t n = 0; n < n_segments; ++n) {
        const std::size_t length = n < full_segments ? seg_len : remainder;
        const std::size_t carried = learner.state;
        learner = LearnerState::fresh(ns, na);
        learner.segment = n;
        learner.state = (params.restart_start == RestartStart::teleport || n == 0) ? rng.uniform_index(ns) : carried;
        learner.action = sample_categorical(learner.policy.row(learner.state), rng);

        for (std::size_t h = 0; h < length; ++h, ++t) {
            learner.step_in_segment = h;
            if (observer) observer(start + t, learner);

            const auto [reward, next_state] = step(schedule, start + t, learner.state, learner.action, rng);
            const std::size_t next_action = sample_categorical(learner.policy.row(next_state), rng);

            TraceRecord rec;
            rec.t = start + t;
            rec.state = learner.state;
            rec.action = learner.action;
            rec.reward = reward;
            rec.eta = learner.eta;
            rec.segment = n;
            trace.records.push_back(rec);

            // The actor reads q_t and the critic reads eta_t, both pre-update.
            const double eta_next = update_eta(learner.eta, reward, params.reward_step);
            auto policy_next = softmax_npg_update(learner.policy, learner.q_table, params.actor_step);
            update_critic_inplace(learner.q_table, na, learner.state, learner.action, reward, learner.eta, next_state,
                                  next_action, params.critic_step, params.projection_radius, params.projection);
            learner.eta = eta_next;
            learner.policy = std::move(policy_next);
            learner.state = next_state;
            learner.action = next_action;
        }
    }
    return trace;
}

RunTrace run_ns_nac(const NsNacParams& params, const EnvironmentSchedule& schedule, std::uint64_t seed,
                    const StepObserver& observer) {
    Rng rng(derive_seed(seed, streams::agent));
    auto trace = run_ns_nac_from(params, schedule, 0, rng, observer);
    trace.seed = seed;
    return trace;
}

RunTrace run_fixed_policy(const TabularPolicy& policy, const EnvironmentSchedule& schedule, std::uint64_t seed) {
    Rng rng(derive_seed(seed, streams::agent));
    RunTrace trace;
    trace.seed = seed;
    trace.records.reserve(schedule.horizon());
    if (schedule.horizon() == 0) return trace;
    std::size_t state = rng.uniform_index(schedule.n_states());
    for (std::size_t t = 0; t < schedule.horizon(); ++t) {
        TraceRecord rec;
        rec.t = t;
        rec.state = state;
        rec.action = sample_categorical(policy.row(state), rng);
        const auto [reward, next_state] = step(schedule, t, state, rec.action, rng);
        rec.reward = reward;
        trace.records.push_back(rec);
        state = next_state;
    }
    return trace;
}

}  // namespace nsrl
