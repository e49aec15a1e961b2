#pragma once

#include <memory>
#include <vector>

#include "nmdr/policy.hpp"
#include "nmdr/world_model.hpp"

namespace nmdr {

struct PlanDiagnostics {
    float c_obs = 0.f;
    std::vector<float> c_imagined;
    float c_sum = 0.f;
    bool chose_safe = false;
};

// What the switching rule needs from a model: the posterior cost, a resettable
// control-policy rollout that yields one predicted cost per step, and the two
// action sources. Scripted stand-ins drive the planner in tests.
class PlannerModel {
public:
    virtual ~PlannerModel() = default;
    virtual float posterior_cost() = 0;
    virtual void begin_rollout() = 0;
    virtual float rollout_step() = 0;
    virtual Tensor control_action(Rng& rng) = 0;
    virtual Tensor safe_action(Rng& rng) = 0;
};

// Sum the posterior cost with horizon steps of predicted cost under the
// control policy; fall back to the safe policy when the sum exceeds budget.
std::pair<Tensor, PlanDiagnostics> plan_action(PlannerModel& model, int horizon, float budget,
                                               Rng& rng);

// b_s = scale * b * (horizon + 1) / episode_length
float planner_budget(float episode_budget, int horizon, int episode_length, float scale);

// Planner model backed by the learned latent dynamics. Rollouts use prior
// means and mean actions so the switch decision is deterministic given the
// posterior; the returned action is sampled (or the mean in eval mode).
class LatentPlanner : public PlannerModel {
public:
    LatentPlanner(WorldModel& wm, ParamSet& actor_control, ParamSet& actor_safe,
                  const PolicyConfig& cfg, const LatentState& posterior, ActMode mode);

    float posterior_cost() override;
    void begin_rollout() override;
    float rollout_step() override;
    Tensor control_action(Rng& rng) override;
    Tensor safe_action(Rng& rng) override;

private:
    WorldModel& wm_;
    ParamSet& actor_control_;
    ParamSet& actor_safe_;
    const PolicyConfig& cfg_;
    LatentState posterior_;
    LatentState rollout_state_;
    ActMode mode_;
};

}  // namespace nmdr
