#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nsrl {

inline constexpr double kStochasticTol = 1e-12;

// A stationary (P, r) pair. Transitions are stored flat with index
// ((s * n_actions) + a) * n_states + s', rewards with index s * n_actions + a.
class MdpSnapshot {
public:
    MdpSnapshot() = default;
    MdpSnapshot(std::size_t n_states, std::size_t n_actions, std::vector<double> transitions,
                std::vector<double> rewards, double reward_bound = 1.0);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    std::size_t n_pairs() const { return n_states_ * n_actions_; }
    double reward_bound() const { return reward_bound_; }

    double p(std::size_t s, std::size_t a, std::size_t next) const {
        return transitions_[(s * n_actions_ + a) * n_states_ + next];
    }
    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {transitions_.data() + (s * n_actions_ + a) * n_states_, n_states_};
    }
    double r(std::size_t s, std::size_t a) const { return rewards_[s * n_actions_ + a]; }

    const std::vector<double>& transitions() const { return transitions_; }
    const std::vector<double>& rewards() const { return rewards_; }

    friend bool operator==(const MdpSnapshot&, const MdpSnapshot&) = default;

private:
    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
    double reward_bound_ = 1.0;
};

// Row-stochastic |S| x |A| matrix of action probabilities. Softmax-produced
// policies are strictly positive; the constructor only requires nonnegativity.
class TabularPolicy {
public:
    TabularPolicy() = default;
    TabularPolicy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

    static TabularPolicy uniform(std::size_t n_states, std::size_t n_actions);
    // Deterministic policy as a (non-strict) table; used by the enumeration oracle.
    static TabularPolicy deterministic(std::size_t n_actions, std::span<const std::size_t> actions);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    double operator()(std::size_t s, std::size_t a) const { return probs_[s * n_actions_ + a]; }
    std::span<const double> row(std::size_t s) const {
        return {probs_.data() + s * n_actions_, n_actions_};
    }
    const std::vector<double>& probs() const { return probs_; }

    friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

private:
    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> probs_;
};

struct ValueSolution {
    double avg_reward = 0.0;
    std::vector<double> q_values;      // representative orthogonal to the ones vector
    std::vector<double> state_values;  // v(s) = sum_a pi(a|s) q(s, a)
};

// P^pi(s, s') = sum_a pi(a|s) P(s'|s, a), row-major |S| x |S|.
std::vector<double> induced_chain(const MdpSnapshot& snapshot, const TabularPolicy& policy);

// Throws NonErgodic when neither the direct solve nor power iteration settles.
std::vector<double> stationary_distribution(const MdpSnapshot& snapshot, const TabularPolicy& policy);
std::vector<double> stationary_distribution(std::span<const double> chain, std::size_t n_states);

// Average reward and differential values of a policy. Throws NonErgodic or
// SingularSystem on chains without a unique recurrent class.
ValueSolution evaluate_policy(const MdpSnapshot& snapshot, const TabularPolicy& policy);

// Largest Bellman residual |r - J + P v - q| over all (s, a).
double bellman_residual(const MdpSnapshot& snapshot, const ValueSolution& solution);

// pi'(a|s) proportional to pi(a|s) exp(alpha q(s, a)), evaluated in log-space.
TabularPolicy softmax_npg_update(const TabularPolicy& policy, std::span<const double> q_table,
                                 double alpha);

// Euclidean projection onto the ball of the given radius.
std::vector<double> project_ball(std::span<const double> x, double radius);
void project_ball_inplace(std::span<double> x, double radius);

// Orthogonal projection onto the zero-sum subspace.
std::vector<double> project_e(std::span<const double> x);

double l2_norm(std::span<const double> x);

}  // namespace nsrl
