#include "nsrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nsrl/errors.hpp"

namespace nsrl {

namespace {

MdpSnapshot random_phase(std::size_t ns, std::size_t na, double reward_a, double reward_b, Rng& rng) {
    std::vector<double> transitions(ns * na * ns);
    for (std::size_t row = 0; row < ns * na; ++row) {
        double* p = transitions.data() + row * ns;
        double total = 0.0;
        while (total == 0.0) {
            total = 0.0;
            for (std::size_t j = 0; j < ns; ++j) total += (p[j] = rng.gamma(0.5));
        }
        for (std::size_t j = 0; j < ns; ++j) p[j] /= total;
    }
    std::vector<double> rewards(ns * na);
    for (auto& r : rewards) r = rng.beta(reward_a, reward_b);
    return MdpSnapshot(ns, na, std::move(transitions), std::move(rewards), 1.0);
}

}  // namespace

PhasePair generate_phase_pair(std::size_t n_states, std::size_t n_actions, Rng& rng) {
    if (n_states == 0 || n_actions == 0) throw InvalidArgument("generate_phase_pair: empty state or action set");
    MdpSnapshot first = random_phase(n_states, n_actions, 0.5, 0.5, rng);
    MdpSnapshot second = random_phase(n_states, n_actions, 0.2, 0.9, rng);
    return {std::move(first), std::move(second)};
}

std::string to_string(ScheduleMode mode) {
    switch (mode) {
        case ScheduleMode::periodic_abrupt: return "periodic_abrupt";
        case ScheduleMode::random_abrupt: return "random_abrupt";
        case ScheduleMode::gradual: return "gradual";
    }
    return "unknown";
}

ScheduleMode parse_schedule_mode(const std::string& name) {
    if (name == "periodic_abrupt") return ScheduleMode::periodic_abrupt;
    if (name == "random_abrupt") return ScheduleMode::random_abrupt;
    if (name == "gradual") return ScheduleMode::gradual;
    throw InvalidArgument("unknown schedule mode '" + name + "'");
}

EnvironmentSchedule::EnvironmentSchedule(PhasePair phases, std::size_t horizon, ScheduleMode mode,
                                         std::vector<std::size_t> switch_times, bool vary_rewards)
    : phases_(std::move(phases)),
      horizon_(horizon),
      mode_(mode),
      switch_times_(std::move(switch_times)),
      vary_rewards_(vary_rewards) {
    const auto& a = phases_.phase_a;
    const auto& b = phases_.phase_b;
    if (a.n_states() != b.n_states() || a.n_actions() != b.n_actions() || a.reward_bound() != b.reward_bound())
        throw InvalidArgument("PhasePair: phase shapes differ");
    if (mode_ == ScheduleMode::gradual && !switch_times_.empty())
        throw InvalidArgument("gradual schedule cannot carry switch times");
    for (std::size_t i = 0; i < switch_times_.size(); ++i) {
        if (switch_times_[i] < 1 || switch_times_[i] + 1 > horizon_)
            throw InvalidArgument("switch time outside [1, T - 1]");
        if (i > 0 && switch_times_[i] <= switch_times_[i - 1])
            throw InvalidArgument("switch times must be strictly increasing");
    }
    effective_[0] = a;
    effective_[1] = vary_rewards_ ? b : MdpSnapshot(b.n_states(), b.n_actions(), b.transitions(), a.rewards(), a.reward_bound());
}

EnvironmentSchedule EnvironmentSchedule::periodic(PhasePair phases, std::size_t horizon, std::size_t n_switches,
                                                  bool vary_rewards) {
    if (n_switches > 0 && n_switches + 1 > horizon)
        throw InvalidArgument("periodic schedule: more switches than the horizon allows");
    std::vector<std::size_t> times;
    if (n_switches > 0) {
        const std::size_t segment = horizon / (n_switches + 1);
        for (std::size_t k = 1; k <= n_switches; ++k) times.push_back(k * segment);
    }
    return EnvironmentSchedule(std::move(phases), horizon, ScheduleMode::periodic_abrupt, std::move(times),
                               vary_rewards);
}

EnvironmentSchedule EnvironmentSchedule::random(PhasePair phases, std::size_t horizon, std::size_t n_switches,
                                                bool vary_rewards, Rng& rng) {
    if (n_switches > 0 && n_switches + 1 > horizon)
        throw InvalidArgument("random schedule: more switches than the horizon allows");
    // Partial Fisher-Yates over the candidate times 1 .. T-1.
    std::vector<std::size_t> candidates(horizon > 0 ? horizon - 1 : 0);
    std::iota(candidates.begin(), candidates.end(), std::size_t{1});
    for (std::size_t i = 0; i < n_switches; ++i) {
        const std::size_t j = i + rng.uniform_index(candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
    }
    std::vector<std::size_t> times(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n_switches));
    std::sort(times.begin(), times.end());
    return EnvironmentSchedule(std::move(phases), horizon, ScheduleMode::random_abrupt, std::move(times),
                               vary_rewards);
}

EnvironmentSchedule EnvironmentSchedule::with_switch_times(PhasePair phases, std::size_t horizon,
                                                           ScheduleMode mode,
                                                           std::vector<std::size_t> switch_times,
                                                           bool vary_rewards) {
    return EnvironmentSchedule(std::move(phases), horizon, mode, std::move(switch_times), vary_rewards);
}

EnvironmentSchedule EnvironmentSchedule::gradual(PhasePair phases, std::size_t horizon, bool vary_rewards) {
    return EnvironmentSchedule(std::move(phases), horizon, ScheduleMode::gradual, {}, vary_rewards);
}

void EnvironmentSchedule::check_time(std::size_t t) const {
    if (t >= horizon_)
        throw IndexOutOfHorizon("time " + std::to_string(t) + " outside horizon " + std::to_string(horizon_));
}

int EnvironmentSchedule::phase_index(std::size_t t) const {
    check_time(t);
    if (mode_ == ScheduleMode::gradual) throw InvalidArgument("phase_index: gradual schedules have no phases");
    const auto flips = std::upper_bound(switch_times_.begin(), switch_times_.end(), t) - switch_times_.begin();
    return static_cast<int>(flips % 2);
}

double EnvironmentSchedule::mix(std::size_t t) const {
    check_time(t);
    if (horizon_ <= 1) return 0.0;
    return static_cast<double>(t) / static_cast<double>(horizon_ - 1);
}

MdpSnapshot EnvironmentSchedule::env_at(std::size_t t) const {
    if (mode_ != ScheduleMode::gradual) return effective_[phase_index(t)];
    const double w = mix(t);
    const auto& a = phases_.phase_a;
    const auto& b = phases_.phase_b;
    std::vector<double> transitions(a.transitions().size());
    for (std::size_t i = 0; i < transitions.size(); ++i)
        transitions[i] = (1.0 - w) * a.transitions()[i] + w * b.transitions()[i];
    const std::size_t ns = a.n_states();
    std::vector<double> rewards = a.rewards();
    if (vary_rewards_)
        for (std::size_t i = 0; i < rewards.size(); ++i) rewards[i] = (1.0 - w) * a.rewards()[i] + w * b.rewards()[i];
    return MdpSnapshot(ns, a.n_actions(), std::move(transitions), std::move(rewards), a.reward_bound());
}

double EnvironmentSchedule::reward(std::size_t t, std::size_t s, std::size_t a) const {
    if (mode_ != ScheduleMode::gradual) return effective_[phase_index(t)].r(s, a);
    const double w = mix(t);
    if (!vary_rewards_) return phases_.phase_a.r(s, a);
    return (1.0 - w) * phases_.phase_a.r(s, a) + w * phases_.phase_b.r(s, a);
}

double EnvironmentSchedule::transition(std::size_t t, std::size_t s, std::size_t a, std::size_t next) const {
    if (mode_ != ScheduleMode::gradual) return effective_[phase_index(t)].p(s, a, next);
    const double w = mix(t);
    return (1.0 - w) * phases_.phase_a.p(s, a, next) + w * phases_.phase_b.p(s, a, next);
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
    if (probs.empty()) throw InvalidArgument("sample_categorical: empty distribution");
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_positive = i;
        cumulative += probs[i];
        if (u < cumulative) return i;
    }
    return last_positive;
}

StepResult step(const EnvironmentSchedule& schedule, std::size_t t, std::size_t state, std::size_t action,
                Rng& rng) {
    if (state >= schedule.n_states() || action >= schedule.n_actions())
        throw InvalidArgument("step: state or action out of range");
    if (schedule.piecewise_constant()) {
        const auto& snap = schedule.phase_snapshot(schedule.phase_index(t));
        return {snap.r(state, action), sample_categorical(snap.row(state, action), rng)};
    }
    const double w = schedule.mix(t);
    const auto row_a = schedule.phases().phase_a.row(state, action);
    const auto row_b = schedule.phases().phase_b.row(state, action);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t next = schedule.n_states() - 1;
    for (std::size_t j = 0; j < row_a.size(); ++j) {
        cumulative += (1.0 - w) * row_a[j] + w * row_b[j];
        if (u < cumulative) {
            next = j;
            break;
        }
    }
    return {schedule.reward(t, state, action), next};
}

double transition_distance(const MdpSnapshot& lhs, const MdpSnapshot& rhs) {
    double worst = 0.0;
    for (std::size_t s = 0; s < lhs.n_states(); ++s)
        for (std::size_t a = 0; a < lhs.n_actions(); ++a) {
            const auto x = lhs.row(s, a);
            const auto y = rhs.row(s, a);
            double total = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) total += std::abs(x[j] - y[j]);
            worst = std::max(worst, total);
        }
    return worst;
}

double reward_distance(const MdpSnapshot& lhs, const MdpSnapshot& rhs) {
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.rewards().size(); ++i)
        worst = std::max(worst, std::abs(lhs.rewards()[i] - rhs.rewards()[i]));
    return worst;
}

VariationBudget variation_budget(const EnvironmentSchedule& schedule) {
    return variation_budget(schedule, 0, schedule.horizon());
}

VariationBudget variation_budget(const EnvironmentSchedule& schedule, std::size_t begin, std::size_t end) {
    VariationBudget budget;
    end = std::min(end, schedule.horizon());
    if (end <= begin + 1) return budget;

    if (schedule.piecewise_constant()) {
        // Only switch times contribute, each by the full phase distance.
        const auto& times = schedule.switch_times();
        const auto first = std::upper_bound(times.begin(), times.end(), begin);
        const auto last = std::lower_bound(times.begin(), times.end(), end);
        const auto flips = static_cast<double>(last - first);
        const auto& a = schedule.phase_snapshot(0);
        const auto& b = schedule.phase_snapshot(1);
        budget.delta_p = flips * transition_distance(a, b);
        budget.delta_r = flips * reward_distance(a, b);
    } else {
        const auto& a = schedule.phases().phase_a;
        const auto& b = schedule.phases().phase_b;
        const std::size_t ns = a.n_states();
        const bool rewards_move = schedule.vary_rewards();
        for (std::size_t t = begin; t + 1 < end; ++t) {
            const double w0 = schedule.mix(t);
            const double w1 = schedule.mix(t + 1);
            double step_p = 0.0;
            double step_r = 0.0;
            for (std::size_t row = 0; row < a.n_pairs(); ++row) {
                double total = 0.0;
                for (std::size_t j = 0; j < ns; ++j) {
                    const double pa = a.transitions()[row * ns + j];
                    const double pb = b.transitions()[row * ns + j];
                    total += std::abs(((1.0 - w1) * pa + w1 * pb) - ((1.0 - w0) * pa + w0 * pb));
                }
                step_p = std::max(step_p, total);
                if (rewards_move) {
                    const double ra = a.rewards()[row];
                    const double rb = b.rewards()[row];
                    step_r = std::max(step_r, std::abs(((1.0 - w1) * ra + w1 * rb) - ((1.0 - w0) * ra + w0 * rb)));
                }
            }
            budget.delta_p += step_p;
            budget.delta_r += step_r;
        }
    }
    budget.delta_total = budget.delta_r + budget.delta_p;
    return budget;
}

namespace {

nlohmann::json snapshot_to_json(const MdpSnapshot& snap) {
    const std::size_t ns = snap.n_states();
    const std::size_t na = snap.n_actions();
    nlohmann::json transitions = nlohmann::json::array();
    nlohmann::json rewards = nlohmann::json::array();
    for (std::size_t s = 0; s < ns; ++s) {
        nlohmann::json per_action = nlohmann::json::array();
        nlohmann::json reward_row = nlohmann::json::array();
        for (std::size_t a = 0; a < na; ++a) {
            const auto row = snap.row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
            reward_row.push_back(snap.r(s, a));
        }
        transitions.push_back(std::move(per_action));
        rewards.push_back(std::move(reward_row));
    }
    return {{"transitions", std::move(transitions)}, {"rewards", std::move(rewards)}};
}

MdpSnapshot snapshot_from_json(const nlohmann::json& doc, double reward_bound) {
    const auto& transitions = doc.at("transitions");
    const auto& rewards = doc.at("rewards");
    const std::size_t ns = transitions.size();
    if (ns == 0) throw InvalidArgument("schedule: empty transition table");
    const std::size_t na = transitions.at(0).size();
    std::vector<double> flat_p;
    std::vector<double> flat_r;
    flat_p.reserve(ns * na * ns);
    for (std::size_t s = 0; s < ns; ++s) {
        if (transitions.at(s).size() != na || rewards.at(s).size() != na)
            throw InvalidArgument("schedule: ragged action dimension");
        for (std::size_t a = 0; a < na; ++a) {
            const auto& row = transitions.at(s).at(a);
            if (row.size() != ns) throw InvalidArgument("schedule: ragged successor dimension");
            for (const auto& v : row) flat_p.push_back(v.get<double>());
            flat_r.push_back(rewards.at(s).at(a).get<double>());
        }
    }
    return MdpSnapshot(ns, na, std::move(flat_p), std::move(flat_r), reward_bound);
}

}  // namespace

nlohmann::json to_json(const EnvironmentSchedule& schedule) {
    nlohmann::json doc;
    doc["format"] = "nsrl-schedule/1";
    doc["n_states"] = schedule.n_states();
    doc["n_actions"] = schedule.n_actions();
    doc["reward_bound"] = schedule.reward_bound();
    doc["horizon"] = schedule.horizon();
    doc["mode"] = to_string(schedule.mode());
    doc["n_switches"] = schedule.n_switches();
    doc["switch_times"] = schedule.switch_times();
    doc["vary_rewards"] = schedule.vary_rewards();
    doc["seed"] = schedule.seed ? nlohmann::json(*schedule.seed) : nlohmann::json(nullptr);
    doc["phase_a"] = snapshot_to_json(schedule.phases().phase_a);
    doc["phase_b"] = snapshot_to_json(schedule.phases().phase_b);
    return doc;
}

EnvironmentSchedule schedule_from_json(const nlohmann::json& doc) {
    try {
        const double bound = doc.value("reward_bound", 1.0);
        PhasePair phases{snapshot_from_json(doc.at("phase_a"), bound), snapshot_from_json(doc.at("phase_b"), bound)};
        const auto horizon = doc.at("horizon").get<std::size_t>();
        const auto mode = parse_schedule_mode(doc.at("mode").get<std::string>());
        const bool vary = doc.at("vary_rewards").get<bool>();
        auto times = doc.value("switch_times", std::vector<std::size_t>{});
        if (doc.contains("n_switches") && doc.at("n_switches").get<std::size_t>() != times.size())
            throw InvalidArgument("schedule: n_switches does not match switch_times");
        auto schedule = mode == ScheduleMode::gradual
                            ? EnvironmentSchedule::gradual(std::move(phases), horizon, vary)
                            : EnvironmentSchedule::with_switch_times(std::move(phases), horizon, mode,
                                                                     std::move(times), vary);
        if (doc.contains("seed") && !doc.at("seed").is_null()) schedule.seed = doc.at("seed").get<std::uint64_t>();
        return schedule;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("schedule: malformed document: ") + e.what());
    }
}

nlohmann::json to_json(const VariationBudget& budget) {
    return {{"delta_r", budget.delta_r}, {"delta_p", budget.delta_p}, {"delta_total", budget.delta_total}};
}

}  // namespace nsrl
