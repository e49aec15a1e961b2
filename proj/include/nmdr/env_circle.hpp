#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nmdr/rng.hpp"
#include "nmdr/tensor.hpp"

namespace nmdr {

enum class ObsMode { kVector, kImage };

struct EnvConfig {
    float dt = 0.1f;
    float drag = 0.05f;
    float a_max = 1.0f;
    float v_max = 2.0f;
    float ring_radius = 1.5f;
    float x_lim = 1.25f;
    float arena = 3.0f;
    int episode_length = 500;
    ObsMode obs_mode = ObsMode::kVector;

    int obs_dim() const { return obs_mode == ObsMode::kVector ? 8 : 256; }
};

struct EnvState {
    float x = 0.f, y = 0.f;
    float vx = 0.f, vy = 0.f;
    int step_index = 0;
};

struct Observation {
    Tensor data;  // [8] vector mode, [256] flattened 16x16 image mode
};

struct StepResult {
    Observation observation;
    float reward = 0.f;
    float cost = 0.f;
    bool terminal = false;
};

// 2D point mass circulating a ring, costed for leaving |x| <= x_lim. Episodes
// are fixed length; walls clamp position and zero the normal velocity.
class CircleEnv {
public:
    explicit CircleEnv(EnvConfig cfg = {}) : cfg_(cfg) {}

    std::pair<EnvState, Observation> reset(uint64_t seed) const;

    // Pure transition: reward and cost are evaluated on the post-step state.
    // Non-finite actions are an error; out-of-range components are clamped
    // (with a warning the first few times).
    std::pair<EnvState, StepResult> step(const EnvState& state,
                                         const std::array<float, 2>& action) const;

    Tensor render(const EnvState& state) const;  // [16,16] grayscale in [0,1]

    Observation observe(const EnvState& state) const;

    float cost_of(const EnvState& state) const {
        return std::fabs(state.x) > cfg_.x_lim ? 1.f : 0.f;
    }

    const EnvConfig& config() const { return cfg_; }

private:
    EnvConfig cfg_;
    mutable int clamp_warnings_ = 0;
};

float episode_cost(const std::vector<StepResult>& results);

// Debug trajectory dump: header step,x,y,vx,vy,ax,ay,reward,cost with
// optional planner diagnostic columns c_obs,c_sum,chose_safe.
class TrajectoryCsv {
public:
    TrajectoryCsv(const std::string& path, bool planner_columns);
    ~TrajectoryCsv();
    void append(int step, const EnvState& state, const std::array<float, 2>& action,
                float reward, float cost);
    void append(int step, const EnvState& state, const std::array<float, 2>& action,
                float reward, float cost, float c_obs, float c_sum, bool chose_safe);

private:
    std::FILE* f_ = nullptr;
    bool planner_columns_ = false;
};

}  // namespace nmdr
