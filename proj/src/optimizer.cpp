#include "nmdr/optimizer.hpp"

#include <cmath>

namespace nmdr {

double global_grad_norm(const GradMap& grads) {
    double s = 0.0;
    for (const auto& [name, g] : grads) {
        const float* p = g.data();
        for (int64_t i = 0; i < g.size(); ++i) s += static_cast<double>(p[i]) * p[i];
    }
    return std::sqrt(s);
}

void clip_global_norm(GradMap& grads, float max_norm) {
    double norm = global_grad_norm(grads);
    if (!std::isfinite(norm)) {
        for (const auto& [name, g] : grads)
            if (!g.all_finite()) throw Error("clip_global_norm: non-finite gradient for " + name);
        throw Error("clip_global_norm: non-finite gradient norm");
    }
    if (norm <= static_cast<double>(max_norm)) return;
    float scale = static_cast<float>(static_cast<double>(max_norm) / norm);
    for (auto& [name, g] : grads) {
        float* p = g.data();
        for (int64_t i = 0; i < g.size(); ++i) p[i] *= scale;
    }
}

void opt_step(ParamSet& params, const GradMap& grads, float lr, Betas betas, float eps) {
    params.bump_step();
    const double t = static_cast<double>(params.step());
    const double bc1 = 1.0 - std::pow(static_cast<double>(betas.b1), t);
    const double bc2 = 1.0 - std::pow(static_cast<double>(betas.b2), t);

    for (const auto& [name, g] : grads) {
        ParamSet::Entry& e = params.entry(name);
        check(g.same_shape(e.value), "opt_step: gradient shape " + g.shape_str() +
                                         " does not match parameter " + name + " " +
                                         e.value.shape_str());
        if (!e.m1.defined()) {
            e.m1 = Tensor::zeros(e.value.shape());
            e.m2 = Tensor::zeros(e.value.shape());
        }
        const float* pg = g.data();
        float* pm1 = e.m1.data();
        float* pm2 = e.m2.data();
        float* pv = e.value.data();
        const int64_t n = e.value.size();
        for (int64_t i = 0; i < n; ++i) {
            const float gi = pg[i];
            if (!std::isfinite(gi))
                throw Error("opt_step: non-finite gradient for " + name);
            pm1[i] = betas.b1 * pm1[i] + (1.f - betas.b1) * gi;
            pm2[i] = betas.b2 * pm2[i] + (1.f - betas.b2) * gi * gi;
            const double m_hat = static_cast<double>(pm1[i]) / bc1;
            const double v_hat = static_cast<double>(pm2[i]) / bc2;
            const float next =
                pv[i] - static_cast<float>(static_cast<double>(lr) * m_hat /
                                           (std::sqrt(v_hat) + static_cast<double>(eps)));
            if (!std::isfinite(next))
                throw Error("opt_step: update produced non-finite value for " + name);
            pv[i] = next;
        }
    }
}

}  // namespace nmdr
