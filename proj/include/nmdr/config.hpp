#pragma once

#include <string>

#include "nmdr/checkpoint.hpp"
#include "nmdr/discriminator.hpp"
#include "nmdr/env_circle.hpp"
#include "nmdr/lagrangian.hpp"
#include "nmdr/policy.hpp"
#include "nmdr/world_model.hpp"

namespace nmdr {

// Every hyperparameter of a run. A (config, seed) pair fully determines the
// training trajectory.
struct TrainConfig {
    uint64_t seed = 0;
    std::string obs_mode = "vector";  // vector | image
    std::string output_dir = "runs/default";
    int64_t total_steps = 300000;

    EnvConfig env;
    WorldModelConfig wm;
    PolicyConfig policy;
    DiscConfig disc;
    LagrangeConfig lagrange;

    float wm_lr = 3e-4f;

    int planner_horizon = 15;
    float planner_budget_scale = 1.0f;

    int seq_len = 50;
    int batch = 16;
    int64_t prefill = 5000;
    int train_every = 5;  // env steps per gradient step
    int64_t buffer_capacity = 100000;
    float explore_noise = 0.3f;
    int64_t checkpoint_every = 0;  // env steps; 0 disables periodic saves
    int metrics_every = 100;       // gradient steps per periodic metrics row

    float adam_beta1 = 0.9f;
    float adam_beta2 = 0.999f;
    float adam_eps = 1e-8f;
    float grad_clip = 100.f;

    // Parse `key = value` lines with '#' comments; unknown keys are errors.
    static TrainConfig load(const std::string& path);
    void apply(const std::string& key, const std::string& value);
    // Derived fields (obs dim, episode-length coupling) and sanity checks.
    void finalize();

    Records to_records() const;
    static TrainConfig from_records(const Records& records);
};

}  // namespace nmdr
