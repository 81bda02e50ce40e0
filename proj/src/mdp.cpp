#include "nsrl/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nsrl/errors.hpp"

namespace nsrl {

namespace {

void check_rows(std::span<const double> values, std::size_t rows, std::size_t width,
                const char* what) {
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double v = values[i * width + j];
            if (!(v >= 0.0)) throw InvalidArgument(std::string(what) + ": negative or NaN entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kStochasticTol)
            throw InvalidArgument(std::string(what) + ": row " + std::to_string(i) +
                                  " does not sum to one");
    }
}

constexpr double kLogFloor = 1e-300;
constexpr std::size_t kPowerIterations = 1'000'000;

}  // namespace

MdpSnapshot::MdpSnapshot(std::size_t n_states, std::size_t n_actions, std::vector<double> transitions,
                         std::vector<double> rewards, double reward_bound)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      reward_bound_(reward_bound) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidArgument("MdpSnapshot: empty state or action set");
    if (!(reward_bound_ > 0.0)) throw InvalidArgument("MdpSnapshot: reward bound must be positive");
    if (transitions_.size() != n_states_ * n_actions_ * n_states_)
        throw InvalidArgument("MdpSnapshot: transition table has wrong size");
    if (rewards_.size() != n_states_ * n_actions_)
        throw InvalidArgument("MdpSnapshot: reward table has wrong size");
    check_rows(transitions_, n_states_ * n_actions_, n_states_, "MdpSnapshot transitions");
    for (double r : rewards_)
        if (!(std::abs(r) <= reward_bound_)) throw InvalidArgument("MdpSnapshot: reward exceeds bound");
}

TabularPolicy::TabularPolicy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidArgument("TabularPolicy: empty table");
    if (probs_.size() != n_states_ * n_actions_) throw InvalidArgument("TabularPolicy: wrong size");
    check_rows(probs_, n_states_, n_actions_, "TabularPolicy");
}

TabularPolicy TabularPolicy::uniform(std::size_t n_states, std::size_t n_actions) {
    return TabularPolicy(n_states, n_actions,
                         std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
}

TabularPolicy TabularPolicy::deterministic(std::size_t n_actions, std::span<const std::size_t> actions) {
    std::vector<double> probs(actions.size() * n_actions, 0.0);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions) throw InvalidArgument("deterministic policy: action out of range");
        probs[s * n_actions + actions[s]] = 1.0;
    }
    return TabularPolicy(actions.size(), n_actions, std::move(probs));
}

std::vector<double> induced_chain(const MdpSnapshot& snapshot, const TabularPolicy& policy) {
    const std::size_t ns = snapshot.n_states();
    const std::size_t na = snapshot.n_actions();
    if (policy.n_states() != ns || policy.n_actions() != na)
        throw InvalidArgument("policy shape does not match snapshot");
    std::vector<double> chain(ns * ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            const double w = policy(s, a);
            if (w == 0.0) continue;
            const auto row = snapshot.row(s, a);
            for (std::size_t next = 0; next < ns; ++next) chain[s * ns + next] += w * row[next];
        }
    return chain;
}

namespace {

double stationarity_gap(std::span<const double> chain, std::size_t n, const std::vector<double>& d) {
    double gap = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double flow = 0.0;
        for (std::size_t i = 0; i < n; ++i) flow += d[i] * chain[i * n + j];
        gap += std::abs(flow - d[j]);
    }
    return gap;
}

}  // namespace

std::vector<double> stationary_distribution(std::span<const double> chain, std::size_t n) {
    if (n == 0 || chain.size() != n * n) throw InvalidArgument("stationary_distribution: bad chain shape");
    if (n == 1) return {1.0};

    // (I - P^T) d = 0 with the last equation replaced by sum(d) = 1.
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            system(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) -= chain[i * n + j];
    system.row(static_cast<Eigen::Index>(n - 1)).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    rhs(static_cast<Eigen::Index>(n - 1)) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (lu.isInvertible()) {
        const Eigen::VectorXd sol = lu.solve(rhs);
        std::vector<double> d(n);
        bool valid = true;
        for (std::size_t i = 0; i < n; ++i) {
            double v = sol(static_cast<Eigen::Index>(i));
            if (v < -1e-12) valid = false;
            d[i] = std::max(v, 0.0);
        }
        if (valid) {
            const double total = std::accumulate(d.begin(), d.end(), 0.0);
            for (auto& v : d) v /= total;
            if (stationarity_gap(chain, n, d) <= 1e-10) return d;
        }
    }

    std::vector<double> d(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t it = 0; it < kPowerIterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) next[j] += d[i] * chain[i * n + j];
        double change = 0.0;
        for (std::size_t j = 0; j < n; ++j) change += std::abs(next[j] - d[j]);
        d.swap(next);
        if (change <= 1e-14 && stationarity_gap(chain, n, d) <= 1e-10) return d;
    }
    throw NonErgodic("stationary distribution: power iteration did not contract");
}

std::vector<double> stationary_distribution(const MdpSnapshot& snapshot, const TabularPolicy& policy) {
    return stationary_distribution(induced_chain(snapshot, policy), snapshot.n_states());
}

ValueSolution evaluate_policy(const MdpSnapshot& snapshot, const TabularPolicy& policy) {
    const std::size_t ns = snapshot.n_states();
    const std::size_t na = snapshot.n_actions();
    const auto chain = induced_chain(snapshot, policy);
    const auto d = stationary_distribution(chain, ns);

    std::vector<double> policy_reward(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) policy_reward[s] += policy(s, a) * snapshot.r(s, a);
    double gain = 0.0;
    for (std::size_t s = 0; s < ns; ++s) gain += d[s] * policy_reward[s];

    // (I - P^pi) v = r^pi - J with the reference equation v(0) = 0.
    const auto n = static_cast<Eigen::Index>(ns);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t next = 0; next < ns; ++next)
            system(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(next)) -= chain[s * ns + next];
        rhs(static_cast<Eigen::Index>(s)) = policy_reward[s] - gain;
    }
    system.row(0).setZero();
    system(0, 0) = 1.0;
    rhs(0) = 0.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw SingularSystem("evaluate_policy: Bellman system is singular");
    const Eigen::VectorXd v = lu.solve(rhs);

    ValueSolution out;
    out.avg_reward = gain;
    out.q_values.resize(ns * na);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            const auto row = snapshot.row(s, a);
            double expected = 0.0;
            for (std::size_t next = 0; next < ns; ++next)
                expected += row[next] * v(static_cast<Eigen::Index>(next));
            out.q_values[s * na + a] = snapshot.r(s, a) - gain + expected;
        }
    out.q_values = project_e(out.q_values);
    out.state_values.assign(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) out.state_values[s] += policy(s, a) * out.q_values[s * na + a];

    if (bellman_residual(snapshot, out) > 1e-8)
        throw SingularSystem("evaluate_policy: Bellman residual above tolerance");
    return out;
}

double bellman_residual(const MdpSnapshot& snapshot, const ValueSolution& solution) {
    const std::size_t ns = snapshot.n_states();
    const std::size_t na = snapshot.n_actions();
    double worst = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            const auto row = snapshot.row(s, a);
            double expected = 0.0;
            for (std::size_t next = 0; next < ns; ++next) expected += row[next] * solution.state_values[next];
            const double res =
                snapshot.r(s, a) - solution.avg_reward + expected - solution.q_values[s * na + a];
            worst = std::max(worst, std::abs(res));
        }
    return worst;
}

TabularPolicy softmax_npg_update(const TabularPolicy& policy, std::span<const double> q_table, double alpha) {
    const std::size_t ns = policy.n_states();
    const std::size_t na = policy.n_actions();
    if (q_table.size() != ns * na) throw InvalidArgument("softmax_npg_update: q-table size mismatch");
    std::vector<double> out(ns * na);
    std::vector<double> logits(na);
    for (std::size_t s = 0; s < ns; ++s) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a) {
            logits[a] = std::log(std::max(policy(s, a), kLogFloor)) + alpha * q_table[s * na + a];
            top = std::max(top, logits[a]);
        }
        double total = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
            logits[a] = std::exp(logits[a] - top);
            total += logits[a];
        }
        for (std::size_t a = 0; a < na; ++a) out[s * na + a] = logits[a] / total;
    }
    return TabularPolicy(ns, na, std::move(out));
}

double l2_norm(std::span<const double> x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    return std::sqrt(sq);
}

void project_ball_inplace(std::span<double> x, double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("project_ball: radius must be positive");
    const double norm = l2_norm(x);
    if (norm <= radius) return;
    const double scale = radius / norm;
    for (auto& v : x) v *= scale;
}

std::vector<double> project_ball(std::span<const double> x, double radius) {
    std::vector<double> out(x.begin(), x.end());
    project_ball_inplace(out, radius);
    return out;
}

std::vector<double> project_e(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    if (out.empty()) return out;
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    for (auto& v : out) v -= mean;
    return out;
}

}  // namespace nsrl
