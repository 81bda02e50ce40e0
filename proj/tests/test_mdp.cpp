#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "nsrl/env.hpp"
#include "nsrl/errors.hpp"
#include "nsrl/mdp.hpp"
#include "test_support.hpp"

using namespace nsrl;
using nsrl::testing::random_policy;
using nsrl::testing::random_snapshot;

namespace {

MdpSnapshot two_state_chain(std::vector<double> rewards) {
    return MdpSnapshot(2, 1, {0.9, 0.1, 0.2, 0.8}, std::move(rewards));
}

double row_sum(const TabularPolicy& pi, std::size_t s) {
    auto row = pi.row(s);
    return std::accumulate(row.begin(), row.end(), 0.0);
}

}  // namespace

TEST_CASE("stationary distribution of small chains") {
    auto d = stationary_distribution(std::vector<double>{0.5, 0.5, 0.5, 0.5}, 2);
    CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(0.5).epsilon(1e-12));

    auto one = stationary_distribution(std::vector<double>{1.0}, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 1.0);

    std::vector<double> chain{0.9, 0.1, 0.2, 0.8};
    auto d2 = stationary_distribution(chain, 2);
    auto oracle = testing::power_iteration(chain, 2);
    CHECK(std::abs(d2[0] - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(d2[1] - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(d2[0] - oracle[0]) < 1e-10);
}

TEST_CASE("stationary distribution satisfies d = dP on random chains") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t ns = 1 + rng.uniform_index(6), na = 1 + rng.uniform_index(3);
        auto m = random_snapshot(ns, na, rng);
        auto pi = random_policy(ns, na, rng);
        auto chain = induced_chain(m, pi);
        auto d = stationary_distribution(m, pi);
        double total = 0.0, gap = 0.0;
        for (std::size_t j = 0; j < ns; ++j) {
            CHECK(d[j] >= 0.0);
            total += d[j];
            double flow = 0.0;
            for (std::size_t i = 0; i < ns; ++i) flow += d[i] * chain[i * ns + j];
            gap += std::abs(flow - d[j]);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(gap <= 1e-10);
    }
}

TEST_CASE("non-ergodic chains are rejected") {
    // 0 <-> 1 is periodic, 2 absorbs, 3 feeds 0. The direct solve is
    // singular and power iteration oscillates forever.
    std::vector<double> chain{0, 1, 0, 0,
                              1, 0, 0, 0,
                              0, 0, 1, 0,
                              1, 0, 0, 0};
    CHECK_THROWS_AS(stationary_distribution(chain, 4), NonErgodic);

    MdpSnapshot m(4, 1, chain, {0.1, 0.2, 0.3, 0.4});
    CHECK_THROWS_AS(evaluate_policy(m, TabularPolicy::uniform(4, 1)), NonErgodic);
}

TEST_CASE("two absorbing states give a singular Bellman system") {
    MdpSnapshot m(2, 1, {1, 0, 0, 1}, {0.0, 1.0});
    CHECK_THROWS_AS(evaluate_policy(m, TabularPolicy::uniform(2, 1)), SingularSystem);
}

TEST_CASE("evaluate_policy examples") {
    SUBCASE("single state") {
        MdpSnapshot m(1, 1, {1.0}, {0.3});
        auto sol = evaluate_policy(m, TabularPolicy::uniform(1, 1));
        CHECK(sol.avg_reward == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(std::abs(sol.q_values[0]) < 1e-12);
    }
    SUBCASE("constant reward") {
        Rng rng(3);
        auto base = random_snapshot(4, 3, rng);
        MdpSnapshot m(4, 3, base.transitions(), std::vector<double>(12, 0.37));
        auto sol = evaluate_policy(m, random_policy(4, 3, rng));
        CHECK(sol.avg_reward == doctest::Approx(0.37).epsilon(1e-12));
        for (double q : sol.q_values) CHECK(std::abs(q) < 1e-10);
    }
    SUBCASE("two-state chain") {
        auto sol = evaluate_policy(two_state_chain({1.0, 0.0}), TabularPolicy::uniform(2, 1));
        CHECK(std::abs(sol.avg_reward - 2.0 / 3.0) < 1e-12);
    }
}

TEST_CASE("value solutions live in E and satisfy Bellman") {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t ns = 1 + rng.uniform_index(4), na = 1 + rng.uniform_index(3);
        auto m = random_snapshot(ns, na, rng);
        auto pi = random_policy(ns, na, rng);
        auto sol = evaluate_policy(m, pi);
        double sum = std::accumulate(sol.q_values.begin(), sol.q_values.end(), 0.0);
        CHECK(std::abs(sum) <= 1e-9);
        CHECK(bellman_residual(m, sol) <= 1e-8);
        CHECK(std::abs(sol.avg_reward - testing::gain_by_power(m, pi)) < 1e-9);
    }
}

TEST_CASE("avg_reward matches a long rollout") {
    Rng gen(17);
    for (int rep = 0; rep < 4; ++rep) {
        const std::size_t ns = 2 + gen.uniform_index(3), na = 1 + gen.uniform_index(3);
        auto m = random_snapshot(ns, na, gen);
        auto pi = random_policy(ns, na, gen);
        auto sol = evaluate_policy(m, pi);

        auto sched = EnvironmentSchedule::periodic({m, m}, 1'000'000, 0, false);
        Rng rng(100 + rep);
        // batch means for the standard error of a correlated sequence
        const std::size_t batches = 100, batch = 10'000;
        std::vector<double> means;
        std::size_t s = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < batch; ++i) {
                const std::size_t a = sample_categorical(pi.row(s), rng);
                auto res = step(sched, b * batch + i, s, a, rng);
                acc += res.reward;
                s = res.next_state;
            }
            means.push_back(acc / batch);
        }
        const double mu = testing::mean(means);
        double var = 0.0;
        for (double x : means) var += (x - mu) * (x - mu);
        var /= (batches - 1);
        const double se = std::sqrt(var / batches);
        CHECK(std::abs(mu - sol.avg_reward) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("softmax NPG examples") {
    auto pi = TabularPolicy::uniform(1, 2);
    std::vector<double> q{1.0, 0.0};
    auto next = softmax_npg_update(pi, q, std::log(2.0));
    CHECK(std::abs(next(0, 0) - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(next(0, 1) - 1.0 / 3.0) < 1e-12);

    Rng rng(8);
    auto rp = random_policy(3, 4, rng);
    std::vector<double> qq(12);
    for (auto& x : qq) x = rng.normal();
    auto same = softmax_npg_update(rp, qq, 0.0);
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(same.probs()[i] - rp.probs()[i]) < 1e-12);

    std::vector<double> flat_in_state1 = qq;
    for (std::size_t a = 0; a < 4; ++a) flat_in_state1[4 + a] = 2.5;
    auto moved = softmax_npg_update(rp, flat_in_state1, 0.7);
    for (std::size_t a = 0; a < 4; ++a) CHECK(std::abs(moved(1, a) - rp(1, a)) < 1e-12);
}

TEST_CASE("softmax NPG keeps rows stochastic and is shift invariant") {
    Rng rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t ns = 1 + rng.uniform_index(5), na = 1 + rng.uniform_index(5);
        auto pi = random_policy(ns, na, rng);
        std::vector<double> q(ns * na);
        for (auto& x : q) x = 20.0 * rng.normal();
        const double alpha = 2.0 * rng.uniform();
        auto next = softmax_npg_update(pi, q, alpha);
        for (std::size_t s = 0; s < ns; ++s) {
            CHECK(std::abs(row_sum(next, s) - 1.0) <= 1e-12);
            for (std::size_t a = 0; a < na; ++a) CHECK(next(s, a) >= 0.0);
        }
        const double c = 50.0 * rng.normal();
        std::vector<double> shifted = q;
        for (auto& x : shifted) x += c;
        auto next2 = softmax_npg_update(pi, shifted, alpha);
        for (std::size_t i = 0; i < ns * na; ++i) CHECK(std::abs(next.probs()[i] - next2.probs()[i]) <= 1e-12);
    }
}

TEST_CASE("softmax NPG survives huge logits") {
    auto pi = TabularPolicy::uniform(1, 3);
    std::vector<double> q{1e6, 0.0, -1e6};
    auto next = softmax_npg_update(pi, q, 10.0);
    CHECK(next(0, 0) == doctest::Approx(1.0));
    CHECK(std::isfinite(next(0, 2)));
    auto again = softmax_npg_update(next, std::vector<double>{0.0, 0.0, 0.0}, 1.0);
    CHECK(std::abs(row_sum(again, 0) - 1.0) < 1e-12);
}

TEST_CASE("project_ball examples") {
    auto in = project_ball(std::vector<double>{0.3, 0.4}, 1.0);
    CHECK(in[0] == 0.3);
    CHECK(in[1] == 0.4);
    auto out = project_ball(std::vector<double>{3.0, 4.0}, 1.0);
    CHECK(std::abs(out[0] - 0.6) < 1e-12);
    CHECK(std::abs(out[1] - 0.8) < 1e-12);
    auto zero = project_ball(std::vector<double>{0.0, 0.0, 0.0}, 2.0);
    for (double z : zero) CHECK(z == 0.0);
}

TEST_CASE("project_ball is idempotent and non-expansive") {
    Rng rng(31);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(20);
        const double radius = 0.1 + 5.0 * rng.uniform();
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = 3.0 * rng.normal();
            y[i] = 3.0 * rng.normal();
        }
        auto px = project_ball(x, radius), py = project_ball(y, radius);
        CHECK(l2_norm(px) <= radius + 1e-12);
        auto ppx = project_ball(px, radius);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ppx[i] - px[i]) <= 1e-12);
        std::vector<double> dp(n), dx(n);
        for (std::size_t i = 0; i < n; ++i) {
            dp[i] = px[i] - py[i];
            dx[i] = x[i] - y[i];
        }
        CHECK(l2_norm(dp) <= l2_norm(dx) + 1e-12);
    }
}

TEST_CASE("project_E examples") {
    auto a = project_e(std::vector<double>{1, 1, 1});
    for (double v : a) CHECK(std::abs(v) < 1e-12);
    auto b = project_e(std::vector<double>{2, 0});
    CHECK(b[0] == 1.0);
    CHECK(b[1] == -1.0);
    std::vector<double> zs{0.5, -0.25, -0.25};
    auto c = project_e(zs);
    for (std::size_t i = 0; i < 3; ++i) CHECK(c[i] == zs[i]);
}

TEST_CASE("project_E is an orthogonal projection") {
    Rng rng(41);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(30);
        std::vector<double> x(n);
        for (auto& v : x) v = 10.0 * rng.normal() + 3.0;
        auto px = project_e(x);
        CHECK(std::abs(std::accumulate(px.begin(), px.end(), 0.0)) <= 1e-12 * (1 + l2_norm(x)));
        auto ppx = project_e(px);
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(ppx[i] - px[i]) <= 1e-12);
            dot += (x[i] - px[i]) * px[i];
        }
        CHECK(std::abs(dot) <= 1e-10 * (1 + l2_norm(x) * l2_norm(x)));
    }
}

TEST_CASE("snapshot and policy validation") {
    CHECK_THROWS(MdpSnapshot(1, 1, {0.5}, {0.0}));
    CHECK_THROWS(MdpSnapshot(1, 1, {1.0}, {1.5}));
    CHECK_THROWS(MdpSnapshot(2, 1, {1.0, 0.0}, {0.0, 0.0}));
    CHECK_NOTHROW(MdpSnapshot(1, 1, {1.0}, {-2.0}, 2.0));
    CHECK_THROWS(TabularPolicy(1, 2, {0.7, 0.7}));
    CHECK_THROWS(TabularPolicy(1, 2, {1.5, -0.5}));
}
