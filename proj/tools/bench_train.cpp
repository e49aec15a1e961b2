// Phase-level timing of one training step, on synthetic buffer data.
#include <chrono>
#include <cstdio>

#include "nmdr/discriminator.hpp"
#include "nmdr/optimizer.hpp"
#include "nmdr/trainer.hpp"

using namespace nmdr;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int main() {
    TrainConfig cfg;
    cfg.output_dir = "/tmp/nmdr_bench_train";
    cfg.finalize();
    Trainer tr(cfg);

    // Synthetic prefill: random episodes straight into the buffer.
    Rng rng(1);
    CircleEnv env(cfg.env);
    for (int ep = 0; ep < 4; ++ep) {
        Episode e;
        auto [state, obs] = env.reset(static_cast<uint64_t>(ep));
        for (int t = 0; t < cfg.env.episode_length; ++t) {
            std::array<float, 2> a = {static_cast<float>(rng.uniform(-1, 1)),
                                      static_cast<float>(rng.uniform(-1, 1))};
            auto [ns, res] = env.step(state, a);
            const float* op = obs.data.data();
            e.obs.insert(e.obs.end(), op, op + obs.data.size());
            e.actions.push_back(a[0]);
            e.actions.push_back(a[1]);
            e.rewards.push_back(res.reward);
            e.costs.push_back(res.cost);
            e.terminals.push_back(res.terminal ? 1.f : 0.f);
            state = ns;
            obs = res.observation;
        }
        tr.buffer_mut().add_episode(std::move(e));
    }

    const int iters = 30;
    Rng rng2(2);

    // Full train step.
    {
        auto t0 = Clock::now();
        for (int i = 0; i < iters; ++i) tr.train_step();
        std::printf("train_step total:      %7.2f ms\n", ms_since(t0) / iters);
    }

    // World-model phase pieces.
    {
        auto t0 = Clock::now();
        for (int i = 0; i < iters; ++i) {
            SequenceBatch b = tr.sample_sequences(cfg.batch, cfg.seq_len);
            (void)b;
        }
        std::printf("  sample_sequences:    %7.2f ms\n", ms_since(t0) / iters);

        SequenceBatch b = tr.sample_sequences(cfg.batch, cfg.seq_len);
        t0 = Clock::now();
        std::vector<Tape> tapes(iters);
        for (int i = 0; i < iters; ++i) {
            auto wl = tr.world_model().world_loss(tapes[static_cast<size_t>(i)], b, rng2);
            (void)wl;
        }
        std::printf("  world_loss forward:  %7.2f ms\n", ms_since(t0) / iters);

        t0 = Clock::now();
        for (int i = 0; i < iters; ++i) {
            Tape tape;
            auto wl = tr.world_model().world_loss(tape, b, rng2);
            tape.backward(wl.total);
            GradMap g = tape.param_grads();
            clip_global_norm(g, cfg.grad_clip);
        }
        std::printf("  world fwd+bwd+clip:  %7.2f ms\n", ms_since(t0) / iters);
    }

    // Rollout phase.
    {
        SequenceBatch b = tr.sample_sequences(cfg.batch, cfg.seq_len);
        Tape wtape;
        auto wl = tr.world_model().world_loss(wtape, b, rng2);
        LatentState starts;
        {
            const int S = cfg.policy.imag_starts;
            starts.h = Tensor::zeros({S, cfg.wm.deter});
            starts.z = Tensor::zeros({S, cfg.wm.stoch});
            for (int i = 0; i < S; ++i) {
                const LatentState& src = wl.posteriors[static_cast<size_t>(i % 50)];
                for (int d = 0; d < cfg.wm.deter; ++d)
                    starts.h.data()[i * cfg.wm.deter + d] = src.h.data()[d];
                for (int d = 0; d < cfg.wm.stoch; ++d)
                    starts.z.data()[i * cfg.wm.stoch + d] = src.z.data()[d];
            }
        }
        ParamSet critic_r_t = tr.critic_reward().clone();
        ParamSet critic_c_t = tr.critic_cost().clone();

        auto t0 = Clock::now();
        for (int i = 0; i < iters; ++i) {
            Tape tape;
            auto traj = rollout(tape, tr.world_model(), tr.actor_control(), false, critic_r_t,
                                critic_c_t, starts, cfg.policy.horizon, cfg.policy, rng2);
            (void)traj;
        }
        std::printf("  rollout forward:     %7.2f ms\n", ms_since(t0) / iters);

        t0 = Clock::now();
        for (int i = 0; i < iters; ++i) {
            Tape tape;
            auto traj = rollout(tape, tr.world_model(), tr.actor_control(), false, critic_r_t,
                                critic_c_t, starts, cfg.policy.horizon, cfg.policy, rng2);
            auto targets =
                lambda_targets(traj.rewards, traj.discounts, traj.reward_values, 0.95f);
            Var loss = control_actor_loss(traj, targets, cfg.policy.entropy_eta);
            tape.backward(loss);
            GradMap g = tape.param_grads();
            clip_global_norm(g, cfg.grad_clip);
        }
        std::printf("  rollout fwd+bwd:     %7.2f ms\n", ms_since(t0) / iters);
    }

    // Planner step (environment-side cost).
    {
        LatentState post = tr.world_model().initial_state(1);
        auto t0 = Clock::now();
        const int n = 500;
        for (int i = 0; i < n; ++i) {
            LatentPlanner pm(tr.world_model(), tr.actor_control(), tr.actor_safe(),
                             cfg.policy, post, ActMode::kSample);
            auto [a, d] = plan_action(pm, cfg.planner_horizon,
                                      tr.planner_budget_value(), rng2);
            (void)a;
        }
        std::printf("plan_action:           %7.2f ms\n", ms_since(t0) / n);

        Tensor obs = Tensor::zeros({1, 8});
        Tensor act = Tensor::zeros({1, 2});
        auto t1 = Clock::now();
        for (int i = 0; i < n; ++i)
            post = tr.world_model().observe_step(post, act, obs, rng2).first;
        std::printf("observe_step:          %7.2f ms\n", ms_since(t1) / n);
    }
    return 0;
}
