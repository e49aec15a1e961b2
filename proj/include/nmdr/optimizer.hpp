#pragma once

#include "nmdr/param_set.hpp"
#include "nmdr/tape.hpp"

namespace nmdr {

struct Betas {
    float b1 = 0.9f;
    float b2 = 0.999f;
};

// L2 norm over all gradients in the map (64-bit accumulation, fixed order).
double global_grad_norm(const GradMap& grads);

// Scales gradients in place so the global norm does not exceed max_norm.
// Throws on non-finite gradients.
void clip_global_norm(GradMap& grads, float max_norm);

// Adaptive-moment update with bias correction. Increments the set's step
// counter once. Parameters absent from grads are untouched. Rejects
// non-finite gradients and never writes a non-finite value into the set.
void opt_step(ParamSet& params, const GradMap& grads, float lr, Betas betas, float eps);

}  // namespace nmdr
