#include "nsrl/borl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsrl/errors.hpp"

namespace nsrl {

namespace {

std::size_t log_floor(std::size_t horizon) {
    return static_cast<std::size_t>(std::floor(std::log(static_cast<double>(horizon))));
}

std::size_t log_ceil(std::size_t horizon) {
    return static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(horizon))));
}

}  // namespace

std::vector<double> arm_grid(std::size_t horizon) {
    if (horizon < 2) throw InvalidHorizon("arm_grid: horizon must be at least 2");
    // floor(ln T) is zero for T = 2; a single level keeps the grid {1, T}.
    const std::size_t levels = std::max<std::size_t>(log_floor(horizon), 1);
    const double t = static_cast<double>(horizon);
    std::vector<double> grid(levels + 1);
    for (std::size_t j = 0; j <= levels; ++j)
        grid[j] = std::pow(t, static_cast<double>(j) / static_cast<double>(levels));
    grid.front() = 1.0;
    grid.back() = t;
    return grid;
}

std::vector<double> exp3p_probs(std::span<const double> weights, double xi, double zeta) {
    const std::size_t k = weights.size();
    if (k == 0) throw InvalidArgument("exp3p_probs: no arms");
    const double top = xi * *std::max_element(weights.begin(), weights.end());
    std::vector<double> p(k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (p[j] = std::exp(xi * weights[j] - top));
    const double floor = zeta / static_cast<double>(k);
    for (auto& v : p) v = (1.0 - zeta) * (v / total) + floor;
    return p;
}

std::vector<double> posterior_update(std::span<const double> weights, std::span<const double> probs,
                                     std::size_t pulled, double epoch_reward, std::size_t epoch_length,
                                     double sigma, double reward_bound) {
    if (weights.size() != probs.size()) throw InvalidArgument("posterior_update: size mismatch");
    if (pulled >= weights.size()) throw InvalidArgument("posterior_update: pulled arm out of range");
    if (epoch_length == 0) throw InvalidArgument("posterior_update: empty epoch");
    for (double p : probs)
        if (!(p > 0.0)) throw InvalidProbability("posterior_update: arm probability must be positive");
    const double scaled = (epoch_reward / static_cast<double>(epoch_length) + reward_bound) / (2.0 * reward_bound);
    std::vector<double> out(weights.begin(), weights.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += (sigma + (j == pulled ? scaled : 0.0)) / probs[j];
    return out;
}

Exp3pRates default_exp3p_rates(std::size_t horizon, std::size_t epoch_length, double zeta_cap) {
    if (horizon < 2) throw InvalidHorizon("default_exp3p_rates: horizon must be at least 2");
    if (epoch_length == 0) throw InvalidArgument("default_exp3p_rates: epoch length must be positive");
    const double levels = static_cast<double>(log_ceil(horizon));
    const double epochs = static_cast<double>((horizon + epoch_length - 1) / epoch_length);
    const double base = std::sqrt(levels / (levels * epochs));
    Exp3pRates r;
    r.xi = 0.95 * base;
    r.sigma = base;
    r.zeta = std::min(1.05 * std::sqrt(levels * levels / epochs), zeta_cap);
    return r;
}

std::size_t default_epoch_length(std::size_t horizon) {
    using wide = unsigned __int128;
    const wide target = static_cast<wide>(horizon) * horizon;
    auto w = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(horizon), 2.0 / 3.0)));
    while (static_cast<wide>(w + 1) * (w + 1) * (w + 1) <= target) ++w;
    while (w > 0 && static_cast<wide>(w) * w * w > target) --w;
    return w;
}

Exp3pMaster::Exp3pMaster(std::size_t n_arms, Exp3pRates rates)
    : rates_(rates), weights_(n_arms, 0.0) {
    if (n_arms == 0) throw InvalidArgument("Exp3pMaster: no arms");
    if (!(rates_.xi > 0.0) || !(rates_.sigma >= 0.0) || !(rates_.zeta > 0.0 && rates_.zeta < 1.0))
        throw InvalidArgument("Exp3pMaster: need xi > 0, sigma >= 0 and 0 < zeta < 1");
    probs_ = exp3p_probs(weights_, rates_.xi, rates_.zeta);
}

std::size_t Exp3pMaster::sample(Rng& rng) const { return sample_categorical(probs_, rng); }

void Exp3pMaster::update(std::size_t pulled, double epoch_reward, std::size_t epoch_length, double reward_bound) {
    weights_ = posterior_update(weights_, probs_, pulled, epoch_reward, epoch_length, rates_.sigma, reward_bound);
    probs_ = exp3p_probs(weights_, rates_.xi, rates_.zeta);
    ++epoch_;
}

NsNacParams epoch_parameters(std::size_t horizon, std::size_t epoch_length, std::size_t steps, double budget,
                             double reward_bound, double radius_scale) {
    NsNacParams p = default_hyperparameters(horizon, budget, reward_bound, radius_scale);
    const double t = static_cast<double>(horizon);
    const double restarts = std::pow(budget, 5.0 / 6.0) * std::pow(t, 1.0 / 6.0);
    const double scaled = std::round(restarts * static_cast<double>(epoch_length) / t);
    p.horizon = steps;
    p.n_restarts = static_cast<std::size_t>(std::clamp(scaled, 1.0, static_cast<double>(std::max<std::size_t>(steps, 1))));
    return p;
}

BorlResult run_borl(const BorlSettings& settings, const EnvironmentSchedule& schedule, std::uint64_t seed) {
    const std::size_t horizon = settings.horizon;
    if (horizon > schedule.horizon()) throw IndexOutOfHorizon("run_borl: horizon exceeds the schedule");
    const std::size_t epoch_length = settings.epoch_length == 0 ? default_epoch_length(horizon) : settings.epoch_length;
    if (epoch_length < 1 || epoch_length > horizon) throw InvalidArgument("run_borl: epoch length must lie in [1, T]");

    const auto grid = arm_grid(horizon);
    Exp3pRates rates = default_exp3p_rates(horizon, epoch_length, settings.zeta_cap);
    if (settings.xi) rates.xi = *settings.xi;
    if (settings.sigma) rates.sigma = *settings.sigma;
    if (settings.zeta) rates.zeta = *settings.zeta;
    Exp3pMaster master(grid.size(), rates);

    Rng rng(derive_seed(seed, streams::agent));
    BorlResult result;
    result.rates = rates;
    result.trace.seed = seed;
    result.trace.records.reserve(horizon);

    for (std::size_t i = 0; i * epoch_length < horizon; ++i) {
        const std::size_t start = i * epoch_length;
        const std::size_t steps = std::min(epoch_length, horizon - start);
        const std::size_t arm = master.sample(rng);

        NsNacParams params = epoch_parameters(horizon, epoch_length, steps, grid[arm], schedule.reward_bound(),
                                              settings.radius_scale);
        params.projection = settings.projection;
        params.restart_start = settings.restart_start;
        auto epoch_trace = run_ns_nac_from(params, schedule, start, rng);

        double total = 0.0;
        for (auto& rec : epoch_trace.records) {
            total += rec.reward;
            rec.arm = arm;
            result.trace.records.push_back(rec);
        }
        result.epochs.push_back({i, arm, grid[arm], total, steps, master.probs()});
        master.update(arm, total, steps, schedule.reward_bound());
    }
    return result;
}

}  // namespace nsrl
