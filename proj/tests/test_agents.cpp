#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "gridweave/agents.hpp"
#include "test_support.hpp"

using namespace gridweave;
using namespace gridweave::agents;

using test::actor_objective;
using test::critic_objective;
using test::grad_values;
using test::max_relative_error;
using test::random_batch;

// --- forward pass ------------------------------------------------------------

TEST_CASE("zero-weight policy is uniform over 40 actions", "[agents]") {
    MlpParams actor;
    actor.in = kObservationDim;
    actor.hidden = 8;
    actor.out = 40;
    actor.w1.assign(static_cast<size_t>(actor.hidden) * actor.in, 0.0);
    actor.b1.assign(static_cast<size_t>(actor.hidden), 0.0);
    actor.w2.assign(static_cast<size_t>(actor.out) * actor.hidden, 0.0);
    actor.b2.assign(static_cast<size_t>(actor.out), 0.0);
    Observation o(kObservationDim, 0.3);
    auto probs = policy_forward(actor, o);
    for (double p : probs) CHECK(p == Catch::Approx(1.0 / 40.0).margin(1e-12));
}

TEST_CASE("policy output is a distribution for random parameters", "[agents]") {
    rng::SplitMix64 g(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto actor = MlpParams::init(kObservationDim, 16, 40, g);
        Observation o(kObservationDim);
        for (auto& v : o) v = g.uniform(-2.0, 2.0);
        auto probs = policy_forward(actor, o);
        double sum = 0.0;
        for (double p : probs) {
            REQUIRE(p >= 0.0);
            sum += p;
        }
        REQUIRE(sum == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("policy forward is reproducible for a fixed seed", "[agents]") {
    rng::SplitMix64 g1(99), g2(99);
    auto a1 = MlpParams::init(kObservationDim, 32, 40, g1);
    auto a2 = MlpParams::init(kObservationDim, 32, 40, g2);
    Observation o(kObservationDim, 0.1);
    REQUIRE(policy_forward(a1, o) == policy_forward(a2, o));
}

TEST_CASE("forward rejects mismatched observation width", "[agents]") {
    rng::SplitMix64 g(1);
    auto actor = MlpParams::init(kObservationDim, 8, 40, g);
    Observation small(kObservationDim - 1, 0.0);
    CHECK_THROWS_AS(policy_forward(actor, small), RunError);
}

// --- action lattice ----------------------------------------------------------

TEST_CASE("action lattice endpoints and interior", "[agents]") {
    BatteryParams b;
    b.capacity = 1.0;
    b.p_charge_max = 0.8;
    b.p_discharge_max = 0.8;
    b.soc_min = 0.1;
    b.soc_max = 0.9;
    CHECK(action_to_power(0, 40, b) == Catch::Approx(-0.8));
    CHECK(action_to_power(39, 40, b) == Catch::Approx(0.8));
    CHECK(action_to_power(19, 40, b) == Catch::Approx(-0.8 + 19.0 * 1.6 / 39.0));
    CHECK(action_to_power(19, 40, b) == Catch::Approx(-0.0205128205).margin(1e-9));
    CHECK_THROWS_AS(action_to_power(40, 40, b), std::out_of_range);
    CHECK_THROWS_AS(action_to_power(-1, 40, b), std::out_of_range);
}

// --- returns -----------------------------------------------------------------

TEST_CASE("returns are discounted suffix sums", "[agents]") {
    std::vector<double> r{1.0, 1.0, 1.0};
    CHECK(compute_returns(r, 1.0) == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(compute_returns(r, 0.0) == r);
    std::vector<double> r2{1.0, 2.0};
    auto g05 = compute_returns(r2, 0.5);
    CHECK(g05[0] == Catch::Approx(2.0));
    CHECK(g05[1] == Catch::Approx(2.0));
}

TEST_CASE("undiscounted returns equal plain suffix sums", "[agents]") {
    rng::SplitMix64 g(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> rewards(24);
        for (auto& v : rewards) v = g.uniform(-1.0, 1.0);
        auto returns = compute_returns(rewards, 1.0);
        for (size_t t = 0; t < rewards.size(); ++t) {
            double suffix = 0.0;
            for (size_t k = t; k < rewards.size(); ++k) suffix += rewards[k];
            REQUIRE(returns[t] == Catch::Approx(suffix).margin(1e-12));
        }
    }
}

// --- gradient checks (finite-difference oracle) -------------------------------

TEST_CASE("policy gradient matches finite differences", "[agents]") {
    rng::SplitMix64 g(23);
    for (int trial = 0; trial < 5; ++trial) {
        auto actor = MlpParams::init(4, 6, 3, g);
        auto batch = random_batch(2, 3, 4, 3, g);
        std::vector<std::vector<double>> returns;
        for (const auto& traj : batch) returns.push_back(compute_returns(traj.rewards, 1.0));

        MlpGrads grads(actor);
        detail::accumulate_actor_gradient(
            actor, batch, [&](size_t i, size_t t) { return returns[i][t]; }, 0.0, grads);
        auto analytic = grad_values(grads);
        double err = max_relative_error(actor, analytic, [&] {
            return actor_objective(actor, batch, returns, 0.0);
        });
        REQUIRE(err < 1e-4);
    }
}

TEST_CASE("entropy-regularized gradient matches finite differences", "[agents]") {
    rng::SplitMix64 g(29);
    auto actor = MlpParams::init(4, 5, 3, g);
    auto batch = random_batch(2, 2, 4, 3, g);
    std::vector<std::vector<double>> returns;
    for (const auto& traj : batch) returns.push_back(compute_returns(traj.rewards, 1.0));

    MlpGrads grads(actor);
    detail::accumulate_actor_gradient(
        actor, batch, [&](size_t i, size_t t) { return returns[i][t]; }, 0.1, grads);
    auto analytic = grad_values(grads);
    double err = max_relative_error(actor, analytic, [&] {
        return actor_objective(actor, batch, returns, 0.1);
    });
    REQUIRE(err < 1e-4);
}

TEST_CASE("critic gradient matches finite differences", "[agents]") {
    rng::SplitMix64 g(31);
    for (int trial = 0; trial < 5; ++trial) {
        auto critic = MlpParams::init(4, 6, 1, g);
        auto batch = random_batch(2, 3, 4, 3, g);
        std::vector<std::vector<double>> returns;
        for (const auto& traj : batch) returns.push_back(compute_returns(traj.rewards, 1.0));

        MlpGrads grads(critic);
        std::vector<double> hidden, out, dout(1);
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        for (size_t i = 0; i < batch.size(); ++i)
            for (size_t t = 0; t < batch[i].actions.size(); ++t) {
                forward(critic, batch[i].observations[t], hidden, out);
                dout[0] = 2.0 * (out[0] - returns[i][t]) * inv_n;
                backward(critic, batch[i].observations[t], hidden, dout, grads);
            }
        auto analytic = grad_values(grads);
        double err = max_relative_error(critic, analytic, [&] {
            return critic_objective(critic, batch, returns);
        });
        REQUIRE(err < 1e-4);
    }
}

// --- update semantics ----------------------------------------------------------

TEST_CASE("zero-return batches leave the policy untouched", "[agents]") {
    rng::SplitMix64 g(37);
    auto actor = MlpParams::init(4, 6, 3, g);
    auto batch = random_batch(3, 4, 4, 3, g);
    for (auto& traj : batch)
        for (auto& r : traj.rewards) r = 0.0;
    MlpParams before = actor;
    pg_update(actor, batch, 0.01);
    CHECK(actor.w1 == before.w1);
    CHECK(actor.w2 == before.w2);
    CHECK(actor.b1 == before.b1);
    CHECK(actor.b2 == before.b2);
}

TEST_CASE("an exact critic freezes the actor", "[agents]") {
    rng::SplitMix64 g(41);
    auto actor = MlpParams::init(4, 6, 3, g);
    // one-step trajectories with constant reward; a bias-only critic is exact
    auto batch = random_batch(3, 1, 4, 3, g);
    for (auto& traj : batch) traj.rewards[0] = 0.7;
    MlpParams critic;
    critic.in = 4;
    critic.hidden = 2;
    critic.out = 1;
    critic.w1.assign(8, 0.0);
    critic.b1.assign(2, 0.0);
    critic.w2.assign(2, 0.0);
    critic.b2.assign(1, 0.7);

    MlpParams before = actor;
    a2c_update(actor, critic, batch, 0.01, 0.001);
    CHECK(actor.w1 == before.w1);
    CHECK(actor.w2 == before.w2);
}

TEST_CASE("non-finite rewards abort the update", "[agents]") {
    rng::SplitMix64 g(43);
    auto actor = MlpParams::init(4, 6, 3, g);
    auto batch = random_batch(1, 2, 4, 3, g);
    batch[0].rewards[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(pg_update(actor, batch, 0.01), RunError);
}

TEST_CASE("policy gradient learns a dominant-action bandit", "[agents]") {
    // Two-step bandit: action 2 pays 1 per step, everything else pays 0.
    // Enumerating constant policies gives expected returns {0, 0, 2}, so
    // action 2 is dominant.
    const int n_actions = 3;
    const int dominant = 2;
    rng::SplitMix64 g(47);
    auto actor = MlpParams::init(4, 8, n_actions, g);
    Observation obs(4, 0.5);

    auto sample_rng = rng::substream(1234, "bandit");
    for (int step = 0; step < 2000; ++step) {
        std::vector<Trajectory> batch(4);
        for (auto& traj : batch) {
            for (int t = 0; t < 2; ++t) {
                auto probs = policy_forward(actor, obs);
                int a = sample_index(probs, sample_rng);
                traj.observations.push_back(obs);
                traj.actions.push_back(a);
                traj.rewards.push_back(a == dominant ? 1.0 : 0.0);
            }
        }
        pg_update(actor, batch, 0.05);
        if (policy_forward(actor, obs)[dominant] > 0.9) break;
    }
    CHECK(policy_forward(actor, obs)[dominant] > 0.9);
}

// --- training loop ---------------------------------------------------------------

namespace {

EnvConfig tiny_env_config() {
    EnvConfig cfg;
    HouseholdConfig a;
    a.id = "a";
    a.profile_type = ProfileType::family;
    a.profile_peak_load = 0.8;
    a.pv_peak_pv_gen = 0.5;
    a.battery.capacity = 1.0;
    a.battery.soc_min = 0.1;
    a.battery.soc_max = 0.9;
    a.battery.p_charge_max = 0.8;
    a.battery.p_discharge_max = 0.8;
    HouseholdConfig b = a;
    b.id = "b";
    b.pv_peak_pv_gen = 0.0;
    cfg.microgrids.push_back({a, b});
    cfg.noise_enabled = false;
    cfg.grid.nuclear_capacity = 1.0;
    return cfg;
}

TrainConfig tiny_train_config() {
    TrainConfig tc;
    tc.hidden = 8;
    tc.batch_size = 2;
    tc.training_steps = 3;
    return tc;
}

} // namespace

TEST_CASE("zero training steps returns initialized params and empty curve", "[agents]") {
    auto tc = tiny_train_config();
    tc.training_steps = 0;
    auto result = train(tiny_env_config(), Algo::a2c, tc, 7);
    CHECK(result.curve.empty());
    CHECK(result.actor.in == kObservationDim);
    CHECK(result.actor.out == tc.n_actions);
    CHECK(result.critic.out == 1);
}

TEST_CASE("training is bit-deterministic in the seed", "[agents]") {
    auto r1 = train(tiny_env_config(), Algo::a2c, tiny_train_config(), 11, 1);
    auto r2 = train(tiny_env_config(), Algo::a2c, tiny_train_config(), 11, 2);
    REQUIRE(r1.actor.w1 == r2.actor.w1);
    REQUIRE(r1.actor.w2 == r2.actor.w2);
    REQUIRE(r1.critic.w1 == r2.critic.w1);
    REQUIRE(r1.curve.size() == r2.curve.size());
    for (size_t i = 0; i < r1.curve.size(); ++i) {
        REQUIRE(r1.curve[i].mean_reward == r2.curve[i].mean_reward);
        REQUIRE(r1.curve[i].mean_cost_price == r2.curve[i].mean_cost_price);
    }
    auto r3 = train(tiny_env_config(), Algo::pg, tiny_train_config(), 11, 2);
    REQUIRE(r3.curve.size() == r1.curve.size());
}

TEST_CASE("identical households produce identical greedy trajectories", "[agents]") {
    EnvConfig cfg = tiny_env_config();
    cfg.microgrids[0][1] = cfg.microgrids[0][0];
    cfg.microgrids[0][1].id = "twin";
    Environment env(cfg);
    rng::SplitMix64 g(3);
    auto actor = MlpParams::init(kObservationDim, 8, 40, g);
    std::vector<Trajectory> trajectories;
    detail::collect_episode(env, actor, 99, /*greedy=*/true, trajectories);
    REQUIRE(trajectories.size() == 2);
    REQUIRE(trajectories[0].observations == trajectories[1].observations);
    REQUIRE(trajectories[0].actions == trajectories[1].actions);
    REQUIRE(trajectories[0].rewards == trajectories[1].rewards);
}

TEST_CASE("rollout_steps must match the horizon", "[agents]") {
    auto tc = tiny_train_config();
    tc.rollout_steps = 12;
    CHECK_THROWS_AS(train(tiny_env_config(), Algo::a2c, tc, 1), ConfigError);
}
