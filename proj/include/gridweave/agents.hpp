#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/env.hpp"
#include "gridweave/mlp.hpp"
#include "gridweave/rng.hpp"

namespace gridweave::agents {

enum class Algo { pg, a2c };

inline const char* to_string(Algo a) { return a == Algo::pg ? "pg" : "a2c"; }

inline Algo algo_from_string(const std::string& s) {
    if (s == "pg") return Algo::pg;
    if (s == "a2c") return Algo::a2c;
    throw ConfigError("unknown algorithm: " + s);
}

struct TrainConfig {
    int n_actions = 40;
    double lr_actor = 0.0; // 0 selects the per-algorithm default below
    double lr_critic = 0.001;
    int hidden = 128;
    double gamma = 1.0;
    int batch_size = 32;
    int rollout_steps = 24;
    int training_steps = 2000;
    double entropy_coef = 0.0;
    /// Use the whole-trajectory return as the score multiplier instead of
    /// the reward-to-go.
    bool full_return_pg = false;

    double resolved_lr_actor(Algo algo) const {
        if (lr_actor > 0.0) return lr_actor;
        return algo == Algo::pg ? 0.00381 : 0.00245;
    }

    void validate() const {
        if (n_actions < 2) throw ConfigError("n_actions must be >= 2");
        if (lr_actor < 0.0 || lr_critic <= 0.0)
            throw ConfigError("learning rates must be positive");
        if (hidden < 1) throw ConfigError("hidden width must be >= 1");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (rollout_steps < 1) throw ConfigError("rollout_steps must be >= 1");
        if (training_steps < 0) throw ConfigError("training_steps must be >= 0");
        if (entropy_coef < 0.0) throw ConfigError("entropy_coef must be >= 0");
    }
};

/// One household's episode as seen by the learner.
struct Trajectory {
    std::vector<Observation> observations;
    std::vector<int> actions;
    std::vector<double> rewards;
};

/// Action distribution for one observation.
inline std::vector<double> policy_forward(const MlpParams& actor,
                                          std::span<const double> observation) {
    std::vector<double> hidden, logits;
    forward(actor, observation, hidden, logits);
    return softmax(logits);
}

/// Discounted reward-to-go: returns[t] = sum_{k>=t} gamma^(k-t) rewards[k].
inline std::vector<double> compute_returns(std::span<const double> rewards,
                                           double gamma) {
    std::vector<double> returns(rewards.size(), 0.0);
    double acc = 0.0;
    for (size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma * acc;
        returns[i] = acc;
    }
    return returns;
}

namespace detail {

/// Shared actor-gradient accumulation: ascent direction of
/// (1/N) sum_i sum_t log pi(a|s) * coef(i,t), plus optional entropy bonus.
/// `coef` is the return (PG) or the advantage (A2C); N is `n_groups`.
template <typename CoefFn>
void accumulate_actor_gradient(const MlpParams& actor,
                               std::span<const Trajectory> batch, size_t n_groups,
                               CoefFn coef, double entropy_coef, MlpGrads& grads) {
    const double inv_n = 1.0 / static_cast<double>(n_groups);
    std::vector<double> hidden, logits, dlogits;
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto& traj = batch[i];
        for (size_t t = 0; t < traj.actions.size(); ++t) {
            forward(actor, traj.observations[t], hidden, logits);
            auto probs = softmax(logits);
            double c = coef(i, t) * inv_n;
            dlogits.assign(probs.size(), 0.0);
            for (size_t a = 0; a < probs.size(); ++a) dlogits[a] = -c * probs[a];
            dlogits[static_cast<size_t>(traj.actions[t])] += c;
            if (entropy_coef > 0.0) {
                double entropy = 0.0;
                for (double p : probs)
                    if (p > 0.0) entropy -= p * std::log(p);
                for (size_t a = 0; a < probs.size(); ++a) {
                    double p = probs[a];
                    if (p > 0.0)
                        dlogits[a] -= entropy_coef * inv_n * p * (std::log(p) + entropy);
                }
            }
            backward(actor, traj.observations[t], hidden, dlogits, grads);
        }
    }
}

inline std::vector<std::vector<double>> batch_returns(std::span<const Trajectory> batch,
                                                      double gamma) {
    std::vector<std::vector<double>> returns;
    returns.reserve(batch.size());
    for (const auto& traj : batch) returns.push_back(compute_returns(traj.rewards, gamma));
    return returns;
}

} // namespace detail

/// One policy-gradient ascent step over a batch of trajectories.
/// `n_groups` is the N of the batch estimator: the number of sampled
/// episodes. Trajectories of households that share parameters within one
/// episode belong to the same group and their terms add up. Zero means
/// one trajectory per group.
inline void pg_update(MlpParams& actor, std::span<const Trajectory> batch, double lr,
                      double gamma = 1.0, bool full_return = false,
                      double entropy_coef = 0.0, size_t n_groups = 0) {
    if (batch.empty()) throw RunError("pg_update: empty batch");
    if (n_groups == 0) n_groups = batch.size();
    auto returns = detail::batch_returns(batch, gamma);
    MlpGrads grads(actor);
    detail::accumulate_actor_gradient(
        actor, batch, n_groups,
        [&](size_t i, size_t t) { return full_return ? returns[i][0] : returns[i][t]; },
        entropy_coef, grads);
    if (!grads.finite())
        throw RunError("pg_update: non-finite gradient, update aborted");
    apply(actor, grads, lr);
}

/// One advantage-actor-critic step: the actor ascends on advantages
/// (empirical return minus critic value), the critic descends on squared
/// prediction error against the same returns. `n_groups` as in pg_update.
inline void a2c_update(MlpParams& actor, MlpParams& critic,
                       std::span<const Trajectory> batch, double lr_actor,
                       double lr_critic, double gamma = 1.0,
                       double entropy_coef = 0.0, size_t n_groups = 0) {
    if (batch.empty()) throw RunError("a2c_update: empty batch");
    if (n_groups == 0) n_groups = batch.size();
    auto returns = detail::batch_returns(batch, gamma);

    // Critic values under the pre-update parameters define the advantages.
    std::vector<std::vector<double>> values(batch.size());
    std::vector<double> hidden, out;
    for (size_t i = 0; i < batch.size(); ++i) {
        values[i].resize(batch[i].actions.size());
        for (size_t t = 0; t < batch[i].actions.size(); ++t) {
            forward(critic, batch[i].observations[t], hidden, out);
            values[i][t] = out[0];
        }
    }

    MlpGrads actor_grads(actor);
    detail::accumulate_actor_gradient(
        actor, batch,
        [&](size_t i, size_t t) { return returns[i][t] - values[i][t]; },
        entropy_coef, actor_grads);
    if (!actor_grads.finite())
        throw RunError("a2c_update: non-finite actor gradient, update aborted");

    MlpGrads critic_grads(critic);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dout(1, 0.0);
    for (size_t i = 0; i < batch.size(); ++i) {
        for (size_t t = 0; t < batch[i].actions.size(); ++t) {
            forward(critic, batch[i].observations[t], hidden, out);
            dout[0] = 2.0 * (out[0] - returns[i][t]) * inv_n;
            backward(critic, batch[i].observations[t], hidden, dout, critic_grads);
        }
    }
    if (!critic_grads.finite())
        throw RunError("a2c_update: non-finite critic gradient, update aborted");

    apply(actor, actor_grads, lr_actor);
    apply(critic, critic_grads, -lr_critic);
}

inline int sample_index(std::span<const double> probs, rng::SplitMix64& g) {
    double u = g.uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

inline int argmax_index(std::span<const double> probs) {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                            probs.begin());
}

struct CurvePoint {
    int iteration = 0;
    double mean_reward = 0.0;
    double mean_cost_price = 0.0;
    double mean_cost_emission = 0.0;
};

struct TrainResult {
    Algo algo = Algo::a2c;
    MlpParams actor;
    MlpParams critic; // unused for pg
    std::vector<CurvePoint> curve;
};

namespace detail {

struct EpisodeStats {
    double reward = 0.0;
    double cost_price = 0.0;
    double cost_emission = 0.0;
};

/// Roll one episode, appending one trajectory per actionable household.
/// Stats are averaged over actionable households.
inline EpisodeStats collect_episode(Environment& env, const MlpParams& actor,
                                    std::uint64_t episode_seed, bool greedy,
                                    std::vector<Trajectory>& out) {
    auto obs = env.reset(episode_seed);
    auto action_rng = rng::substream(episode_seed, "actions");
    const auto& actionable = env.actionable();
    const size_t base = out.size();
    out.resize(base + actionable.size());
    for (size_t k = 0; k < actionable.size(); ++k) {
        out[base + k].observations.reserve(static_cast<size_t>(env.config().horizon));
        out[base + k].actions.reserve(static_cast<size_t>(env.config().horizon));
        out[base + k].rewards.reserve(static_cast<size_t>(env.config().horizon));
    }
    EpisodeStats stats;
    while (!env.done()) {
        std::vector<int> actions(actionable.size());
        for (size_t k = 0; k < actionable.size(); ++k) {
            auto probs = policy_forward(actor, obs[actionable[k]]);
            actions[k] = greedy ? argmax_index(probs) : sample_index(probs, action_rng);
            out[base + k].observations.push_back(obs[actionable[k]]);
            out[base + k].actions.push_back(actions[k]);
        }
        StepResult res = env.step(actions);
        for (size_t k = 0; k < actionable.size(); ++k) {
            size_t i = actionable[k];
            out[base + k].rewards.push_back(res.rewards[i]);
            stats.reward += res.rewards[i];
        }
        for (size_t i = 0; i < env.n_households(); ++i) {
            CostSplit cost = household_cost(res.balances[i],
                                            res.prices[env.microgrid_of(i)],
                                            env.config().mode);
            stats.cost_price += cost.price;
            stats.cost_emission += cost.emission;
        }
        obs = std::move(res.observations);
    }
    double n_act = static_cast<double>(std::max<size_t>(actionable.size(), 1));
    double n_all = static_cast<double>(std::max<size_t>(env.n_households(), 1));
    stats.reward /= n_act;
    stats.cost_price /= n_all;
    stats.cost_emission /= n_all;
    return stats;
}

} // namespace detail

/// Shared-parameter multi-agent training: a single actor (and critic) is
/// updated from every actionable household's trajectories. Episode
/// collection is parallel over the batch; each episode draws from its own
/// seeded stream, so the result does not depend on the thread count.
inline TrainResult train(const EnvConfig& env_cfg, Algo algo, const TrainConfig& tc,
                         std::uint64_t seed, int threads = 1) {
    tc.validate();
    if (tc.rollout_steps != env_cfg.horizon)
        throw ConfigError("rollout_steps must equal the environment horizon");

    Environment probe(env_cfg);
    if (probe.actionable().empty())
        throw ConfigError("training requires at least one actionable household");

    TrainResult result;
    result.algo = algo;
    auto init_rng = rng::substream(seed, "init");
    result.actor = MlpParams::init(kObservationDim, tc.hidden, tc.n_actions, init_rng);
    if (algo == Algo::a2c)
        result.critic = MlpParams::init(kObservationDim, tc.hidden, 1, init_rng);
    if (tc.training_steps == 0) return result;

    threads = std::max(1, threads);
    const size_t n_workers =
        std::min<size_t>(static_cast<size_t>(threads), static_cast<size_t>(tc.batch_size));
    std::vector<std::unique_ptr<Environment>> envs;
    for (size_t w = 0; w < n_workers; ++w)
        envs.push_back(std::make_unique<Environment>(env_cfg));

    const double lr_actor = tc.resolved_lr_actor(algo);
    const size_t per_episode = probe.actionable().size();

    for (int iter = 0; iter < tc.training_steps; ++iter) {
        std::vector<std::vector<Trajectory>> slots(static_cast<size_t>(tc.batch_size));
        std::vector<detail::EpisodeStats> stats(static_cast<size_t>(tc.batch_size));

        auto worker = [&](size_t w) {
            for (size_t b = w; b < static_cast<size_t>(tc.batch_size); b += n_workers) {
                std::uint64_t ep_seed = rng::mix(
                    rng::mix(seed, 0x657069736F646573ULL),
                    static_cast<std::uint64_t>(iter) * static_cast<std::uint64_t>(tc.batch_size) + b);
                stats[b] = detail::collect_episode(*envs[w], result.actor, ep_seed,
                                                   /*greedy=*/false, slots[b]);
            }
        };
        if (n_workers == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker, w);
            for (auto& th : pool) th.join();
        }

        // Flatten in episode order so the update is independent of thread
        // scheduling.
        std::vector<Trajectory> batch;
        batch.reserve(static_cast<size_t>(tc.batch_size) * per_episode);
        for (auto& slot : slots)
            for (auto& traj : slot) batch.push_back(std::move(traj));

        if (algo == Algo::pg) {
            pg_update(result.actor, batch, lr_actor, tc.gamma, tc.full_return_pg,
                      tc.entropy_coef);
        } else {
            a2c_update(result.actor, result.critic, batch, lr_actor, tc.lr_critic,
                       tc.gamma, tc.entropy_coef);
        }

        CurvePoint point;
        point.iteration = iter;
        for (const auto& s : stats) {
            point.mean_reward += s.reward;
            point.mean_cost_price += s.cost_price;
            point.mean_cost_emission += s.cost_emission;
        }
        point.mean_reward /= tc.batch_size;
        point.mean_cost_price /= tc.batch_size;
        point.mean_cost_emission /= tc.batch_size;
        result.curve.push_back(point);
    }
    return result;
}

/// Greedy (argmax) rollout of a trained policy over one episode. Returns
/// per-household episode cost splits and rewards, in flat household order.
struct EvalRollout {
    std::vector<CostSplit> costs;
    std::vector<double> rewards;
};

inline EvalRollout rollout_greedy(Environment& env, const MlpParams& actor,
                                  std::uint64_t episode_seed) {
    auto obs = env.reset(episode_seed);
    EvalRollout out;
    out.costs.assign(env.n_households(), {});
    out.rewards.assign(env.n_households(), 0.0);
    const auto& actionable = env.actionable();
    while (!env.done()) {
        std::vector<int> actions(actionable.size());
        for (size_t k = 0; k < actionable.size(); ++k)
            actions[k] = argmax_index(policy_forward(actor, obs[actionable[k]]));
        StepResult res = env.step(actions);
        for (size_t i = 0; i < env.n_households(); ++i) {
            out.costs[i] += household_cost(res.balances[i],
                                           res.prices[env.microgrid_of(i)],
                                           env.config().mode);
            out.rewards[i] += res.rewards[i];
        }
        obs = std::move(res.observations);
    }
    return out;
}

} // namespace gridweave::agents
