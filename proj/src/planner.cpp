#include "nmdr/planner.hpp"

namespace nmdr {

std::pair<Tensor, PlanDiagnostics> plan_action(PlannerModel& model, int horizon, float budget,
                                               Rng& rng) {
    check(horizon >= 0, "plan_action: negative horizon");
    PlanDiagnostics diag;
    diag.c_obs = model.posterior_cost();
    double c_sum = static_cast<double>(diag.c_obs);
    model.begin_rollout();
    diag.c_imagined.reserve(static_cast<size_t>(horizon));
    for (int i = 0; i < horizon; ++i) {
        const float c = model.rollout_step();
        diag.c_imagined.push_back(c);
        c_sum += static_cast<double>(c);
    }
    diag.c_sum = static_cast<float>(c_sum);
    diag.chose_safe = diag.c_sum > budget;
    Tensor action = diag.chose_safe ? model.safe_action(rng) : model.control_action(rng);
    return {std::move(action), std::move(diag)};
}

float planner_budget(float episode_budget, int horizon, int episode_length, float scale) {
    check(episode_budget > 0.f && episode_length > 0 && horizon >= 0,
          "planner_budget: inputs must be positive");
    return scale * episode_budget * static_cast<float>(horizon + 1) /
           static_cast<float>(episode_length);
}

LatentPlanner::LatentPlanner(WorldModel& wm, ParamSet& actor_control, ParamSet& actor_safe,
                             const PolicyConfig& cfg, const LatentState& posterior,
                             ActMode mode)
    : wm_(wm),
      actor_control_(actor_control),
      actor_safe_(actor_safe),
      cfg_(cfg),
      posterior_(posterior),
      mode_(mode) {}

float LatentPlanner::posterior_cost() {
    Tape tape;
    Var feat = concat_cols(tape.constant(posterior_.h), tape.constant(posterior_.z));
    return wm_.cost_head(tape, feat, /*freeze=*/true).val().item();
}

void LatentPlanner::begin_rollout() { rollout_state_ = posterior_; }

float LatentPlanner::rollout_step() {
    Tape tape;
    Var feat = concat_cols(tape.constant(rollout_state_.h), tape.constant(rollout_state_.z));
    TruncNormal pi = actor_dist(tape, actor_control_, feat, cfg_, /*freeze=*/true);
    Var h = wm_.gru_step(tape, tape.constant(rollout_state_.z), pi.mean,
                         tape.constant(rollout_state_.h), /*freeze=*/true);
    DiagGaussian prior = wm_.prior_head(tape, h, /*freeze=*/true);
    Var next_feat = concat_cols(h, prior.mean);  // prior mean, not a sample
    const float c = wm_.cost_head(tape, next_feat, /*freeze=*/true).val().item();
    rollout_state_.h = h.val();
    rollout_state_.z = prior.mean.val();
    rollout_state_.z_mean = prior.mean.val();
    rollout_state_.z_std = prior.std.val();
    return c;
}

Tensor LatentPlanner::control_action(Rng& rng) {
    return act(actor_control_, posterior_, mode_, cfg_, rng);
}

Tensor LatentPlanner::safe_action(Rng& rng) {
    return act(actor_safe_, posterior_, mode_, cfg_, rng);
}

}  // namespace nmdr
