#pragma once

#include <vector>

#include "nmdr/distributions.hpp"
#include "nmdr/nets.hpp"
#include "nmdr/param_set.hpp"
#include "nmdr/replay_buffer.hpp"
#include "nmdr/rng.hpp"
#include "nmdr/tape.hpp"

namespace nmdr {

struct WorldModelConfig {
    int obs_dim = 8;
    int deter = 64;
    int stoch = 16;
    int hidden = 128;
    int embed = 64;
    float std_floor = 0.1f;
    float alpha_r = 1.0f;    // reward log-loss weight
    float alpha_c = 10.0f;   // cost log-loss weight (sparse signal, upweighted)
    float beta_kl = 1.0f;
    float free_nats = 1.0f;
    float kl_balance = 0.8f;  // weight on the prior-training KL term
    float gamma = 0.99f;      // scales the discount head at use

    int feat_dim() const { return deter + stoch; }
};

// Off-tape latent: deterministic h, stochastic z, and the posterior/prior
// parameters that produced z.
struct LatentState {
    Tensor h;       // [B, deter]
    Tensor z;       // [B, stoch]
    Tensor z_mean;  // [B, stoch]
    Tensor z_std;   // [B, stoch]

    int batch() const { return h.rows(); }
};

struct LatentVars {
    Var h;
    Var z;
};

struct DiagGaussianValue {
    Tensor mean;
    Tensor std;
};

struct LossBreakdown {
    float recon = 0.f;
    float reward = 0.f;
    float cost = 0.f;
    float discount = 0.f;
    float kl = 0.f;
    float total = 0.f;
};

struct WorldLossResult {
    Var total;
    LossBreakdown breakdown;
    std::vector<LatentState> posteriors;  // per timestep, detached values
};

class WorldModel {
public:
    WorldModel(const WorldModelConfig& cfg, uint64_t init_seed);
    WorldModel(const WorldModelConfig& cfg, ParamSet params);

    const WorldModelConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    LatentState initial_state(int batch) const;

    // Value-level single steps (interaction, evaluation, tests).
    std::pair<LatentState, DiagGaussianValue> observe_step(const LatentState& prev,
                                                           const Tensor& action,
                                                           const Tensor& obs, Rng& rng);
    LatentState imagine_step(const LatentState& prev, const Tensor& action, Rng& rng);

    struct Heads {
        Tensor obs;            // [B, obs_dim]
        Tensor reward;         // [B]
        Tensor cost;           // [B]
        Tensor discount_prob;  // [B], in (0,1)
    };
    Heads predict_heads(const LatentState& state);

    // On-tape components (shared by training, imagination, planning).
    Var embed_obs(Tape& tape, Var obs, bool freeze = false);
    Var gru_step(Tape& tape, Var z_prev, Var action, Var h_prev, bool freeze = false);
    DiagGaussian prior_head(Tape& tape, Var h, bool freeze = false);
    DiagGaussian posterior_head(Tape& tape, Var h, Var embed, bool freeze = false);
    Var decode(Tape& tape, Var feat, bool freeze = false);
    Var reward_head(Tape& tape, Var feat, bool freeze = false);     // [rows]
    Var cost_head(Tape& tape, Var feat, bool freeze = false);       // [rows]
    Var discount_logit(Tape& tape, Var feat, bool freeze = false);  // [rows]

    // Unrolled sequence loss with KL balancing and free bits. Optional
    // injected posterior noise (one [B, stoch] tensor per timestep) replaces
    // the rng draws; the finite-difference oracle relies on this.
    WorldLossResult world_loss(Tape& tape, const SequenceBatch& batch, Rng& rng,
                               const std::vector<Tensor>* noise = nullptr);

private:
    static void init_params(ParamSet& ps, const WorldModelConfig& cfg, Rng& rng);

    WorldModelConfig cfg_;
    ParamSet params_;
};

}  // namespace nmdr
