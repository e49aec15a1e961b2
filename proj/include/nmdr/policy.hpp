#pragma once

#include <vector>

#include "nmdr/distributions.hpp"
#include "nmdr/world_model.hpp"

namespace nmdr {

struct PolicyConfig {
    int action_dim = 2;
    int hidden = 128;
    int horizon = 15;  // H, imagination length
    float lambda = 0.95f;
    float entropy_eta = 3e-4f;
    float gamma = 0.99f;
    float actor_lr = 4e-5f;
    float critic_lr = 1e-4f;
    int target_interval = 100;  // hard target-critic copy period (train steps)
    float std_floor = 0.1f;
    int imag_starts = 48;  // posterior states used as imagination starts
};

enum class ActMode { kSample, kMean };

// Actors: feat -> hidden -> hidden -> 2A (truncated-normal head).
void init_actor_params(ParamSet& ps, int feat_dim, const PolicyConfig& cfg, Rng& rng);
// Critics: feat -> hidden -> 1 (unit-variance Gaussian head).
void init_critic_params(ParamSet& ps, int feat_dim, const PolicyConfig& cfg, Rng& rng);

TruncNormal actor_dist(Tape& tape, ParamSet& actor, Var feat, const PolicyConfig& cfg,
                       bool freeze = false);
Var critic_value(Tape& tape, ParamSet& critic, Var feat, const PolicyConfig& cfg,
                 bool freeze = false);  // [rows]

// Everything produced by imagining H steps from a batch of start states.
// All vars live on one tape; the world model and both target critics are
// recorded frozen, so actor gradients flow through the dynamics but never
// into them.
struct ImaginedTrajectory {
    std::vector<LatentVars> states;  // H+1
    std::vector<Var> feats;          // H+1, [S, F]
    std::vector<Var> actions;        // H, [S, A]
    std::vector<Var> log_probs;      // H, [S]
    std::vector<Var> entropies;      // H, [S]
    std::vector<Var> rewards;        // H, [S], predicted at the arrival state
    std::vector<Var> costs;          // H, [S]
    std::vector<Var> discounts;      // H, [S], gamma * p(continue)
    std::vector<Var> reward_values;  // H+1, [S], target reward critic
    std::vector<Var> cost_values;    // H+1, [S], target cost critic

    int horizon() const { return static_cast<int>(actions.size()); }
};

// Pre-drawn noise so the finite-difference oracle can replay a rollout.
struct RolloutNoise {
    std::vector<Tensor> action_eps;  // H x [S, A]
    std::vector<Tensor> prior_eps;   // H x [S, stoch]
};

ImaginedTrajectory rollout(Tape& tape, WorldModel& wm, ParamSet& actor, bool actor_frozen,
                           ParamSet& critic_r_target, ParamSet& critic_c_target,
                           const LatentState& starts, int horizon, const PolicyConfig& cfg,
                           Rng& rng, const RolloutNoise* noise = nullptr);

// Backward lambda-return recursion; values has one more element than rewards.
// The same recursion serves cost targets by passing costs as rewards.
std::vector<Var> lambda_targets(const std::vector<Var>& rewards,
                                const std::vector<Var>& discounts,
                                const std::vector<Var>& values, float lambda);

// Mean over time and batch of (-V_t - eta * H[pi]).
Var control_actor_loss(const ImaginedTrajectory& traj, const std::vector<Var>& targets,
                       float eta);

// Mean over time and batch of (lambda_p * C_t - clone_t - eta * H[pi]).
Var safe_actor_loss(const ImaginedTrajectory& traj, const std::vector<Var>& cost_targets,
                    float lambda_p, const std::vector<Var>& clone_scores, float eta);

// Negative unit-variance Gaussian log-likelihood of detached targets under
// the critic; feats and targets enter as plain values.
Var critic_loss(Tape& tape, ParamSet& critic, const Tensor& feats, const Tensor& targets,
                const PolicyConfig& cfg);

// Single-state action selection.
Tensor act(ParamSet& actor, const LatentState& state, ActMode mode, const PolicyConfig& cfg,
           Rng& rng);

}  // namespace nmdr
