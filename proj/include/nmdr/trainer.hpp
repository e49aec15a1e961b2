#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "nmdr/config.hpp"
#include "nmdr/metrics.hpp"
#include "nmdr/planner.hpp"
#include "nmdr/replay_buffer.hpp"

namespace nmdr {

// Owns the whole training system: environment stream, world model, both
// actor/critic pairs, discriminator, dual multiplier, replay buffer, metrics,
// and checkpointing. Single-threaded; a (config, seed) pair fully determines
// the run.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);

    void run();  // until cfg.total_steps
    void run_until(int64_t target_env_steps);

    void save_checkpoint(const std::string& path);
    static std::unique_ptr<Trainer> load_checkpoint(const std::string& path,
                                                    const std::string& output_dir);

    struct EvalSummary {
        double mean_return = 0.0;
        double mean_cost = 0.0;
        double chose_safe_rate = 0.0;
        bool violation = false;
        int episodes = 0;
    };
    // Planner-in-the-loop episodes with mean actions; no buffer writes, no
    // parameter updates, and the training rng stream is untouched.
    EvalSummary evaluate(int episodes, uint64_t seed_base, bool ablate_planner,
                         const std::string& traj_csv = "");

    std::vector<PlanDiagnostics> plan_debug(int steps, uint64_t seed);

    // One full gradient phase (world model, control, safe, discriminator,
    // multiplier). Normally driven by run_until; public for tests.
    void train_step();

    SequenceBatch sample_sequences(int batch, int seq_len);

    int64_t env_steps() const { return env_step_; }
    int64_t grad_steps() const { return grad_step_; }
    int64_t episodes_completed() const { return episode_idx_; }
    const TrainConfig& config() const { return cfg_; }
    const LagrangeState& lagrange() const { return lagrange_; }
    LagrangeState& lagrange_mut() { return lagrange_; }
    WorldModel& world_model() { return wm_; }
    ParamSet& actor_control() { return actor_c_; }
    ParamSet& actor_safe() { return actor_s_; }
    ParamSet& critic_reward() { return critic_r_; }
    ParamSet& critic_cost() { return critic_c_; }
    ParamSet& discriminator() { return disc_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    ReplayBuffer& buffer_mut() { return buffer_; }
    float planner_budget_value() const { return planner_budget_; }
    std::string metrics_path() const { return cfg_.output_dir + "/metrics.csv"; }

    struct LastLosses {
        double recon = 0, reward = 0, cost = 0, kl = 0;
        double actor_c = 0, actor_s = 0, critic_r = 0, critic_c = 0, disc = 0;
    };
    const LastLosses& last_losses() const { return last_losses_; }

private:
    void init_modules();
    void start_episode();
    void collect_step();
    void flush_episode();
    void periodic_train_row();
    MetricsRow base_row() const;
    double wallclock() const;
    LatentState gather_starts(const std::vector<LatentState>& posts);
    void update_actor_and_critic(bool safe_actor, const LatentState& starts);
    void update_discriminator(const LatentState& starts);

    TrainConfig cfg_;
    CircleEnv env_;
    WorldModel wm_;
    ParamSet actor_c_, actor_s_;
    ParamSet critic_r_, critic_c_;
    ParamSet critic_r_target_, critic_c_target_;
    ParamSet disc_;
    LagrangeState lagrange_;
    ReplayBuffer buffer_;
    Rng rng_;
    float planner_budget_ = 0.f;

    // Interaction stream.
    bool episode_live_ = false;
    EnvState env_state_;
    Tensor cur_obs_;       // [obs_dim]
    Tensor prev_action_;   // [1, A]
    LatentState stream_;   // batch 1
    Episode partial_;
    double ep_return_ = 0.0, ep_cost_ = 0.0;
    int64_t ep_len_ = 0, ep_safe_ = 0;

    int64_t env_step_ = 0, grad_step_ = 0, episode_idx_ = 0;

    // Loss accumulation for metrics rows.
    LastLosses loss_acc_;
    int64_t loss_count_ = 0;
    LastLosses last_losses_;
    double last_ep_return_ = 0.0, last_ep_cost_ = 0.0, last_ep_safe_rate_ = 0.0;

    MetricsWriter metrics_;
    std::chrono::steady_clock::time_point start_time_;
    double wallclock_offset_ = 0.0;
};

}  // namespace nmdr
