#pragma once

#include "nmdr/rng.hpp"
#include "nmdr/tape.hpp"

namespace nmdr {

inline constexpr float kLogTwoPi = 1.8378770664093453f;
// Samples are clipped a hair inside the bounds so log_prob never sees the
// exact boundary.
inline constexpr float kActionLimit = 1.0f - 1e-6f;

// Action head over [-1, 1]^A. mean is tanh-squashed, std is softplus + floor.
struct TruncNormal {
    Var mean;
    Var std;
};

// Splits a raw network output [B, 2A] into a truncated-normal head.
TruncNormal make_trunc_normal(Var raw, float std_floor);

// Reparameterized draw: rejection sampling from the underlying Gaussian with
// a clip fallback after 100 tries; the accepted noise is replayed on-tape so
// gradients reach mean and std (straight-through at the clip).
Var trunc_normal_sample(const TruncNormal& p, Rng& rng);
// Same path with caller-provided standard normal noise (no rejection).
Var trunc_normal_sample_with_noise(const TruncNormal& p, const Tensor& noise);

// Log density summed over action dims -> [B]. Throws if any component of the
// action lies outside [-1, 1].
Var trunc_normal_log_prob(const TruncNormal& p, Var action);

// Differential entropy summed over action dims -> [B].
Var trunc_normal_entropy(const TruncNormal& p);

struct DiagGaussian {
    Var mean;
    Var std;
};

DiagGaussian make_diag_gaussian(Var raw, float std_floor);
DiagGaussian detach(const DiagGaussian& p);

Var diag_gaussian_sample(const DiagGaussian& p, Rng& rng);
Var diag_gaussian_sample_with_noise(const DiagGaussian& p, const Tensor& noise);

// KL[q || p], summed over dims, averaged over the batch -> scalar.
Var diag_gaussian_kl(const DiagGaussian& q, const DiagGaussian& p);
// KL[q || p] summed over dims, one value per row -> [B].
Var diag_gaussian_kl_each(const DiagGaussian& q, const DiagGaussian& p);

// Stable log-sigmoid cross-entropy, elementwise. Targets must be 0 or 1.
Var bernoulli_log_prob_each(Var logit, Var target);
// Mean over all elements -> scalar.
Var bernoulli_log_prob(Var logit, Var target);

// Unit-variance Gaussian negative log-likelihood, elementwise:
// 0.5*(pred-target)^2 + 0.5*ln(2*pi). Used by the scalar regression heads.
Var gaussian_nll_unit(Var pred, Var target);

}  // namespace nmdr
