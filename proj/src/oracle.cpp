#include "nsrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsrl/errors.hpp"

namespace nsrl {

namespace {

double backup(const MdpSnapshot& snap, std::size_t s, std::size_t a, std::span<const double> h) {
    const auto row = snap.row(s, a);
    double value = snap.r(s, a);
    for (std::size_t j = 0; j < row.size(); ++j) value += row[j] * h[j];
    return value;
}

std::vector<std::size_t> greedy_actions(const MdpSnapshot& snap, std::span<const double> h) {
    std::vector<std::size_t> greedy(snap.n_states(), 0);
    for (std::size_t s = 0; s < snap.n_states(); ++s) {
        double best = backup(snap, s, 0, h);
        for (std::size_t a = 1; a < snap.n_actions(); ++a) {
            const double value = backup(snap, s, a, h);
            if (value > best) {
                best = value;
                greedy[s] = a;
            }
        }
    }
    return greedy;
}

}  // namespace

OptimalSolution optimal_average_reward(const MdpSnapshot& snapshot, const RviOptions& options,
                                       std::span<const double> warm_start) {
    const std::size_t ns = snapshot.n_states();
    const std::size_t na = snapshot.n_actions();
    std::vector<double> h(ns, 0.0);
    if (warm_start.size() == ns) {
        std::copy(warm_start.begin(), warm_start.end(), h.begin());
        const double ref = h[0];
        for (auto& v : h) v -= ref;
    }
    std::vector<double> next(ns);

    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t s = 0; s < ns; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < na; ++a) best = std::max(best, backup(snapshot, s, a, h));
            next[s] = best;
        }
        const double offset = next[0];
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < ns; ++s) {
            const double diff = next[s] - h[s];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
            next[s] -= offset;
        }
        h.swap(next);
        if (hi - lo <= options.span_tolerance) {
            OptimalSolution sol;
            sol.j_star = offset;
            sol.bias = h;
            sol.greedy = greedy_actions(snapshot, h);
            sol.iterations = it;
            const double violation = lp_violation(snapshot, sol.j_star, sol.bias);
            const double slack = lp_slack(snapshot, sol.j_star, sol.bias, sol.greedy);
            if (violation > options.feasibility_tolerance || slack > options.feasibility_tolerance)
                throw NoConvergence("relative value iteration: LP certificate failed (violation " +
                                    std::to_string(violation) + ", slack " + std::to_string(slack) + ")");
            return sol;
        }
    }
    throw NoConvergence("relative value iteration: span did not contract within " +
                        std::to_string(options.max_iterations) + " iterations");
}

OptimalSolution optimal_average_reward_enumeration(const MdpSnapshot& snapshot) {
    const std::size_t ns = snapshot.n_states();
    const std::size_t na = snapshot.n_actions();
    if (ns * na > kEnumerationLimit)
        throw InvalidArgument("policy enumeration limited to |S||A| <= " + std::to_string(kEnumerationLimit));

    std::vector<std::size_t> actions(ns, 0);
    OptimalSolution best;
    best.j_star = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (;;) {
        try {
            const auto policy = TabularPolicy::deterministic(na, actions);
            const auto value = evaluate_policy(snapshot, policy);
            if (!found || value.avg_reward > best.j_star) {
                found = true;
                best.j_star = value.avg_reward;
                best.greedy = actions;
                best.bias = value.state_values;
            }
        } catch (const NonErgodic&) {
        } catch (const SingularSystem&) {
        }
        ++best.iterations;
        // Odometer increment over |A|^|S| policies.
        std::size_t pos = 0;
        while (pos < ns && ++actions[pos] == na) actions[pos++] = 0;
        if (pos == ns) break;
    }
    if (!found) throw NoConvergence("policy enumeration: no deterministic policy has a unique gain");
    if (!best.bias.empty()) {
        const double ref = best.bias[0];
        for (auto& v : best.bias) v -= ref;
    }
    return best;
}

OptimalSolution optimal_average_reward_robust(const MdpSnapshot& snapshot, const RviOptions& options,
                                              std::span<const double> warm_start) {
    try {
        return optimal_average_reward(snapshot, options, warm_start);
    } catch (const NoConvergence&) {
        if (snapshot.n_pairs() > kEnumerationLimit) throw;
        return optimal_average_reward_enumeration(snapshot);
    }
}

double lp_violation(const MdpSnapshot& snapshot, double j_star, std::span<const double> bias) {
    double worst = 0.0;
    for (std::size_t s = 0; s < snapshot.n_states(); ++s)
        for (std::size_t a = 0; a < snapshot.n_actions(); ++a)
            worst = std::max(worst, backup(snapshot, s, a, bias) - j_star - bias[s]);
    return worst;
}

double lp_slack(const MdpSnapshot& snapshot, double j_star, std::span<const double> bias,
                std::span<const std::size_t> policy) {
    double worst = 0.0;
    for (std::size_t s = 0; s < snapshot.n_states(); ++s)
        worst = std::max(worst, std::abs(j_star + bias[s] - backup(snapshot, s, policy[s], bias)));
    return worst;
}

std::vector<double> benchmark_series(const EnvironmentSchedule& schedule, bool enumeration_fallback) {
    const std::size_t horizon = schedule.horizon();
    std::vector<double> series(horizon);
    auto solve = [&](const MdpSnapshot& snap, std::span<const double> warm, std::size_t t) {
        try {
            return enumeration_fallback ? optimal_average_reward_robust(snap, {}, warm)
                                        : optimal_average_reward(snap, {}, warm);
        } catch (const NoConvergence& e) {
            throw NoConvergence(std::string(e.what()) + " at t = " + std::to_string(t), t);
        }
    };

    if (schedule.piecewise_constant()) {
        double gains[2] = {0.0, 0.0};
        bool solved[2] = {false, false};
        for (std::size_t t = 0; t < horizon; ++t) {
            const int phase = schedule.phase_index(t);
            if (!solved[phase]) {
                gains[phase] = solve(schedule.phase_snapshot(phase), {}, t).j_star;
                solved[phase] = true;
            }
            series[t] = gains[phase];
        }
        return series;
    }

    std::vector<double> warm;
    for (std::size_t t = 0; t < horizon; ++t) {
        auto sol = solve(schedule.env_at(t), warm, t);
        series[t] = sol.j_star;
        warm = std::move(sol.bias);
    }
    return series;
}

RegretResult dynamic_regret(std::span<const double> rewards, std::span<const double> benchmark) {
    if (rewards.size() != benchmark.size())
        throw LengthMismatch("dynamic_regret: " + std::to_string(rewards.size()) + " rewards vs " +
                             std::to_string(benchmark.size()) + " benchmark values");
    RegretResult out;
    out.steps.resize(rewards.size());
    out.cumulative.resize(rewards.size());
    double running = 0.0;
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        out.steps[t] = benchmark[t] - rewards[t];
        running += out.steps[t];
        out.cumulative[t] = running;
    }
    out.total = running;
    return out;
}

RegretResult dynamic_regret(const RunTrace& trace, std::span<const double> benchmark) {
    const auto rewards = trace.rewards();
    return dynamic_regret(rewards, benchmark);
}

}  // namespace nsrl
