#pragma once

#include <utility>
#include <vector>

#include "nmdr/param_set.hpp"
#include "nmdr/rng.hpp"
#include "nmdr/tape.hpp"

namespace nmdr {

struct DiscConfig {
    int hidden = 128;
    float logit_clamp = 10.f;  // bounds the imitation signal
    float lr = 1e-4f;
};

// Binary classifier over concat(latent features, action): outputs 1 for
// control-policy actions, 0 for safe-policy actions.
void init_disc_params(ParamSet& ps, int feat_dim, int action_dim, const DiscConfig& cfg,
                      Rng& rng);

Var disc_logit(Tape& tape, ParamSet& disc, Var feat_action, const DiscConfig& cfg,
               bool freeze = false);  // [rows]

// Probability and stable log-probability for a batch of (state, action)
// pairs; value level, used by diagnostics and tests.
std::pair<Tensor, Tensor> disc_score(ParamSet& disc, const Tensor& feats,
                                     const Tensor& actions, const DiscConfig& cfg);

// Two-class cross-entropy: -mean log D(s, a_control) - mean log(1 - D(s, a_safe)).
// States and actions enter as plain values; nothing backpropagates into the
// policies that produced them.
Var disc_train_loss(Tape& tape, ParamSet& disc, const Tensor& feats, const Tensor& a_control,
                    const Tensor& a_safe, const DiscConfig& cfg);

// log D(s_t, a_t) per imagined step, with the discriminator frozen, features
// detached, and logits clamped: gradients reach only the actions.
std::vector<Var> clone_signal(Tape& tape, ParamSet& disc, const std::vector<Var>& feats,
                              const std::vector<Var>& actions, const DiscConfig& cfg);

}  // namespace nmdr
