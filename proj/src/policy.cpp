#include "nmdr/policy.hpp"

namespace nmdr {

void init_actor_params(ParamSet& ps, int feat_dim, const PolicyConfig& cfg, Rng& rng) {
    init_mlp(ps, "mlp", {feat_dim, cfg.hidden, cfg.hidden, 2 * cfg.action_dim}, rng);
}

void init_critic_params(ParamSet& ps, int feat_dim, const PolicyConfig& cfg, Rng& rng) {
    init_mlp(ps, "mlp", {feat_dim, cfg.hidden, 1}, rng);
}

TruncNormal actor_dist(Tape& tape, ParamSet& actor, Var feat, const PolicyConfig& cfg,
                       bool freeze) {
    Var raw = mlp_forward(tape, actor, "mlp", feat,
                          {cfg.hidden, cfg.hidden, 2 * cfg.action_dim}, freeze);
    return make_trunc_normal(raw, cfg.std_floor);
}

Var critic_value(Tape& tape, ParamSet& critic, Var feat, const PolicyConfig& cfg,
                 bool freeze) {
    Var out = mlp_forward(tape, critic, "mlp", feat, {cfg.hidden, 1}, freeze);
    return reshape(out, {out.val().rows()});
}

ImaginedTrajectory rollout(Tape& tape, WorldModel& wm, ParamSet& actor, bool actor_frozen,
                           ParamSet& critic_r_target, ParamSet& critic_c_target,
                           const LatentState& starts, int horizon, const PolicyConfig& cfg,
                           Rng& rng, const RolloutNoise* noise) {
    check(horizon >= 1, "rollout: horizon must be >= 1");
    const int S = starts.batch();
    const int stoch = wm.config().stoch;

    ImaginedTrajectory traj;
    LatentVars state{tape.constant(starts.h), tape.constant(starts.z)};
    traj.states.push_back(state);
    traj.feats.push_back(concat_cols(state.h, state.z));
    std::vector<Var> pi_means, pi_stds;

    for (int t = 0; t < horizon; ++t) {
        TruncNormal pi = actor_dist(tape, actor, traj.feats.back(), cfg, actor_frozen);
        pi_means.push_back(pi.mean);
        pi_stds.push_back(pi.std);
        Var action;
        if (noise) {
            action = trunc_normal_sample_with_noise(pi, noise->action_eps[static_cast<size_t>(t)]);
        } else {
            action = trunc_normal_sample(pi, rng);
        }
        traj.actions.push_back(action);

        Var h = wm.gru_step(tape, state.z, action, state.h, /*freeze=*/true);
        DiagGaussian prior = wm.prior_head(tape, h, /*freeze=*/true);
        Tensor eps;
        if (noise) {
            eps = noise->prior_eps[static_cast<size_t>(t)];
        } else {
            eps = Tensor::zeros({S, stoch});
            for (int64_t i = 0; i < eps.size(); ++i) eps.data()[i] = rng.normal_f();
        }
        Var z = diag_gaussian_sample_with_noise(prior, eps);
        state = LatentVars{h, z};
        traj.states.push_back(state);
        traj.feats.push_back(concat_cols(h, z));
    }

    // Distribution statistics, heads, and critics run once over the stacked
    // per-step tensors, then are sliced back into per-step views.
    {
        TruncNormal pi_all{stack_rows(pi_means), stack_rows(pi_stds)};
        Var a_all = stack_rows(traj.actions);
        Var lp_all = reshape(trunc_normal_log_prob(pi_all, stop_grad(a_all)),
                             {horizon * S, 1});
        Var ent_all = reshape(trunc_normal_entropy(pi_all), {horizon * S, 1});
        for (int t = 0; t < horizon; ++t) {
            traj.log_probs.push_back(reshape(slice_rows(lp_all, t * S, (t + 1) * S), {S}));
            traj.entropies.push_back(reshape(slice_rows(ent_all, t * S, (t + 1) * S), {S}));
        }
    }
    Var feat_tail = stack_rows(std::vector<Var>(traj.feats.begin() + 1, traj.feats.end()));
    Var rew_all = wm.reward_head(tape, feat_tail, /*freeze=*/true);
    Var cost_all = wm.cost_head(tape, feat_tail, /*freeze=*/true);
    Var disc_all = sigmoid(wm.discount_logit(tape, feat_tail, /*freeze=*/true)) * cfg.gamma;
    Var rew2 = reshape(rew_all, {horizon * S, 1});
    Var cost2 = reshape(cost_all, {horizon * S, 1});
    Var disc2 = reshape(disc_all, {horizon * S, 1});
    for (int t = 0; t < horizon; ++t) {
        traj.rewards.push_back(reshape(slice_rows(rew2, t * S, (t + 1) * S), {S}));
        traj.costs.push_back(reshape(slice_rows(cost2, t * S, (t + 1) * S), {S}));
        traj.discounts.push_back(reshape(slice_rows(disc2, t * S, (t + 1) * S), {S}));
    }

    Var feat_full = stack_rows(traj.feats);
    Var vr = reshape(critic_value(tape, critic_r_target, feat_full, cfg, /*freeze=*/true),
                     {(horizon + 1) * S, 1});
    Var vc = reshape(critic_value(tape, critic_c_target, feat_full, cfg, /*freeze=*/true),
                     {(horizon + 1) * S, 1});
    for (int t = 0; t <= horizon; ++t) {
        traj.reward_values.push_back(reshape(slice_rows(vr, t * S, (t + 1) * S), {S}));
        traj.cost_values.push_back(reshape(slice_rows(vc, t * S, (t + 1) * S), {S}));
    }
    return traj;
}

std::vector<Var> lambda_targets(const std::vector<Var>& rewards,
                                const std::vector<Var>& discounts,
                                const std::vector<Var>& values, float lambda) {
    check(values.size() == rewards.size() + 1,
          "lambda_targets: values must have one more element than rewards");
    check(discounts.size() == rewards.size(), "lambda_targets: discount length mismatch");
    check(lambda >= 0.f && lambda <= 1.f, "lambda_targets: lambda outside [0, 1]");
    const int H = static_cast<int>(rewards.size());
    std::vector<Var> out(static_cast<size_t>(H));
    Var next = values[static_cast<size_t>(H)];  // terminal bootstrap
    for (int t = H - 1; t >= 0; --t) {
        Var mix = values[static_cast<size_t>(t + 1)] * (1.f - lambda) + next * lambda;
        Var target = rewards[static_cast<size_t>(t)] + discounts[static_cast<size_t>(t)] * mix;
        out[static_cast<size_t>(t)] = target;
        next = target;
    }
    return out;
}

namespace {

Var time_batch_mean(const std::vector<Var>& per_step) {
    Var acc = mean_all(per_step[0]);
    for (size_t t = 1; t < per_step.size(); ++t) acc = acc + mean_all(per_step[t]);
    return acc * (1.f / static_cast<float>(per_step.size()));
}

}  // namespace

Var control_actor_loss(const ImaginedTrajectory& traj, const std::vector<Var>& targets,
                       float eta) {
    check(targets.size() == traj.actions.size(), "control_actor_loss: target length mismatch");
    Var value_term = time_batch_mean(targets);
    Var entropy_term = time_batch_mean(traj.entropies);
    return -value_term - entropy_term * eta;
}

Var safe_actor_loss(const ImaginedTrajectory& traj, const std::vector<Var>& cost_targets,
                    float lambda_p, const std::vector<Var>& clone_scores, float eta) {
    check(cost_targets.size() == traj.actions.size(),
          "safe_actor_loss: cost target length mismatch");
    check(clone_scores.size() == traj.actions.size(),
          "safe_actor_loss: clone signal length mismatch");
    Var cost_term = time_batch_mean(cost_targets);
    Var clone_term = time_batch_mean(clone_scores);
    Var entropy_term = time_batch_mean(traj.entropies);
    return cost_term * lambda_p - clone_term - entropy_term * eta;
}

Var critic_loss(Tape& tape, ParamSet& critic, const Tensor& feats, const Tensor& targets,
                const PolicyConfig& cfg) {
    check(feats.rows() == targets.cols() || feats.rows() == targets.rows(),
          "critic_loss: feats/targets row mismatch");
    Var pred = critic_value(tape, critic, tape.constant(feats), cfg);
    return mean_all(gaussian_nll_unit(pred, tape.constant(targets)));
}

Tensor act(ParamSet& actor, const LatentState& state, ActMode mode, const PolicyConfig& cfg,
           Rng& rng) {
    Tape tape;
    Var feat = concat_cols(tape.constant(state.h), tape.constant(state.z));
    TruncNormal pi = actor_dist(tape, actor, feat, cfg, /*freeze=*/true);
    if (mode == ActMode::kMean) return pi.mean.val();
    return trunc_normal_sample(pi, rng).val();
}

}  // namespace nmdr
