#include "nmdr/distributions.hpp"

#include <cmath>

namespace nmdr {

namespace {

constexpr float kInvSqrt2 = 0.7071067811865476f;
constexpr float kInvSqrt2Pi = 0.3989422804014327f;

// Standard-normal pdf of a tape var.
Var phi(Var x) { return exp(square(x) * -0.5f) * kInvSqrt2Pi; }

// Phi(b) - Phi(a) = 0.5 * (erf(b/sqrt2) - erf(a/sqrt2))
Var normal_mass(Var a, Var b) { return (erf(b * kInvSqrt2) - erf(a * kInvSqrt2)) * 0.5f; }

}  // namespace

TruncNormal make_trunc_normal(Var raw, float std_floor) {
    const int two_a = raw.val().cols();
    check(two_a % 2 == 0, "make_trunc_normal: raw output must hold mean and std per dim");
    const int a = two_a / 2;
    Var mean = tanh(slice_cols(raw, 0, a));
    Var std = softplus(slice_cols(raw, a, two_a)) + std_floor;
    return TruncNormal{mean, std};
}

Var trunc_normal_sample(const TruncNormal& p, Rng& rng) {
    const Tensor& mu = p.mean.val();
    const Tensor& sd = p.std.val();
    Tensor noise = Tensor::zeros(mu.shape());
    const float* pm = mu.data();
    const float* ps = sd.data();
    float* pn = noise.data();
    for (int64_t i = 0; i < mu.size(); ++i) {
        float eps = 0.f;
        for (int tries = 0; tries < 100; ++tries) {
            eps = rng.normal_f();
            const float x = pm[i] + ps[i] * eps;
            if (x >= -1.f && x <= 1.f) break;
        }
        pn[i] = eps;  // clip fallback handled by clip_st below
    }
    return trunc_normal_sample_with_noise(p, noise);
}

Var trunc_normal_sample_with_noise(const TruncNormal& p, const Tensor& noise) {
    Tape& tape = *p.mean.tape;
    Var eps = tape.constant(noise);
    return clip_st(p.mean + p.std * eps, -kActionLimit, kActionLimit);
}

Var trunc_normal_log_prob(const TruncNormal& p, Var action) {
    const Tensor& av = action.val();
    check(av.same_shape(p.mean.val()), "trunc_normal_log_prob: action shape mismatch");
    const float* pa = av.data();
    for (int64_t i = 0; i < av.size(); ++i)
        check(pa[i] >= -1.f && pa[i] <= 1.f, "trunc_normal_log_prob: action outside [-1, 1]");

    Var xi = (action - p.mean) / p.std;
    Var alpha = (-p.mean - 1.f) / p.std;
    Var beta = (-p.mean + 1.f) / p.std;
    Var z = normal_mass(alpha, beta);
    Var per_dim = square(xi) * -0.5f - log(p.std) - 0.5f * kLogTwoPi - log(z);
    return row_sum(per_dim);
}

Var trunc_normal_entropy(const TruncNormal& p) {
    Var alpha = (-p.mean - 1.f) / p.std;
    Var beta = (-p.mean + 1.f) / p.std;
    Var z = normal_mass(alpha, beta);
    // H = ln(sigma * Z * sqrt(2*pi)) + 0.5 + (alpha*phi(alpha) - beta*phi(beta)) / (2Z)
    Var tail = (alpha * phi(alpha) - beta * phi(beta)) / (z * 2.f);
    Var per_dim = log(p.std) + log(z) + (0.5f * kLogTwoPi + 0.5f) + tail;
    return row_sum(per_dim);
}

DiagGaussian make_diag_gaussian(Var raw, float std_floor) {
    const int two_d = raw.val().cols();
    check(two_d % 2 == 0, "make_diag_gaussian: raw output must hold mean and std per dim");
    const int d = two_d / 2;
    Var mean = slice_cols(raw, 0, d);
    Var std = softplus(slice_cols(raw, d, two_d)) + std_floor;
    return DiagGaussian{mean, std};
}

DiagGaussian detach(const DiagGaussian& p) {
    return DiagGaussian{stop_grad(p.mean), stop_grad(p.std)};
}

Var diag_gaussian_sample(const DiagGaussian& p, Rng& rng) {
    Tensor noise = Tensor::zeros(p.mean.val().shape());
    float* pn = noise.data();
    for (int64_t i = 0; i < noise.size(); ++i) pn[i] = rng.normal_f();
    return diag_gaussian_sample_with_noise(p, noise);
}

Var diag_gaussian_sample_with_noise(const DiagGaussian& p, const Tensor& noise) {
    Tape& tape = *p.mean.tape;
    return p.mean + p.std * tape.constant(noise);
}

Var diag_gaussian_kl_each(const DiagGaussian& q, const DiagGaussian& p) {
    Var var_p = square(p.std);
    Var diff = q.mean - p.mean;
    Var per_dim =
        log(p.std) - log(q.std) + (square(q.std) + square(diff)) / (var_p * 2.f) - 0.5f;
    return row_sum(per_dim);
}

Var diag_gaussian_kl(const DiagGaussian& q, const DiagGaussian& p) {
    return mean_all(diag_gaussian_kl_each(q, p));
}

Var bernoulli_log_prob_each(Var logit, Var target) {
    const Tensor& tv = target.val();
    const float* pt = tv.data();
    for (int64_t i = 0; i < tv.size(); ++i)
        check(pt[i] == 0.f || pt[i] == 1.f, "bernoulli_log_prob: targets must be 0 or 1");
    // log p = t*log(sigmoid(x)) + (1-t)*log(sigmoid(-x))
    //       = -(t*softplus(-x) + (1-t)*softplus(x))
    Var one_minus_t = affine(target, -1.f, 1.f);
    return -(target * softplus(-logit) + one_minus_t * softplus(logit));
}

Var bernoulli_log_prob(Var logit, Var target) {
    return mean_all(bernoulli_log_prob_each(logit, target));
}

Var gaussian_nll_unit(Var pred, Var target) {
    return square(pred - target) * 0.5f + 0.5f * kLogTwoPi;
}

}  // namespace nmdr
