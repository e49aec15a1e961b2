#include "nmdr/env_circle.hpp"

#include <cmath>
#include <cstdio>

namespace nmdr {

std::pair<EnvState, Observation> CircleEnv::reset(uint64_t seed) const {
    Rng rng(seed);
    EnvState s;
    s.x = static_cast<float>(rng.uniform(-0.5, 0.5));
    s.y = static_cast<float>(rng.uniform(-0.5, 0.5));
    s.vx = 0.f;
    s.vy = 0.f;
    s.step_index = 0;
    return {s, observe(s)};
}

std::pair<EnvState, StepResult> CircleEnv::step(const EnvState& state,
                                                const std::array<float, 2>& action) const {
    check(std::isfinite(action[0]) && std::isfinite(action[1]),
          "env step: non-finite action");
    float ax = action[0], ay = action[1];
    if (ax < -1.f || ax > 1.f || ay < -1.f || ay > 1.f) {
        if (clamp_warnings_ < 5) {
            std::fprintf(stderr, "env step: action (%g, %g) clamped to [-1, 1]\n",
                         static_cast<double>(ax), static_cast<double>(ay));
            ++clamp_warnings_;
        }
        ax = ax < -1.f ? -1.f : (ax > 1.f ? 1.f : ax);
        ay = ay < -1.f ? -1.f : (ay > 1.f ? 1.f : ay);
    }

    EnvState next = state;
    // Semi-implicit Euler with drag, then a hard speed cap.
    next.vx = state.vx * (1.f - cfg_.drag) + ax * cfg_.a_max * cfg_.dt;
    next.vy = state.vy * (1.f - cfg_.drag) + ay * cfg_.a_max * cfg_.dt;
    const float speed = std::sqrt(next.vx * next.vx + next.vy * next.vy);
    if (speed > cfg_.v_max) {
        const float scale = cfg_.v_max / speed;
        next.vx *= scale;
        next.vy *= scale;
    }
    next.x = state.x + next.vx * cfg_.dt;
    next.y = state.y + next.vy * cfg_.dt;
    // Hard walls: clamp and zero the normal velocity component.
    if (next.x < -cfg_.arena) { next.x = -cfg_.arena; next.vx = 0.f; }
    if (next.x > cfg_.arena)  { next.x = cfg_.arena;  next.vx = 0.f; }
    if (next.y < -cfg_.arena) { next.y = -cfg_.arena; next.vy = 0.f; }
    if (next.y > cfg_.arena)  { next.y = cfg_.arena;  next.vy = 0.f; }
    next.step_index = state.step_index + 1;

    StepResult res;
    // Signed tangential circulation, discounted by distance from the ring.
    const float radius = std::sqrt(next.x * next.x + next.y * next.y);
    const float circ = -next.y * next.vx + next.x * next.vy;
    res.reward = circ / (1.f + std::fabs(radius - cfg_.ring_radius)) * cfg_.dt;
    res.cost = cost_of(next);
    res.terminal = next.step_index >= cfg_.episode_length;
    res.observation = observe(next);
    return {next, res};
}

Observation CircleEnv::observe(const EnvState& s) const {
    if (cfg_.obs_mode == ObsMode::kImage) return Observation{render(s).reshaped({256})};
    Tensor t = Tensor::zeros({8});
    float* p = t.data();
    const float theta = std::atan2(s.y, s.x);
    p[0] = s.x;
    p[1] = s.y;
    p[2] = s.vx;
    p[3] = s.vy;
    p[4] = std::cos(theta);
    p[5] = std::sin(theta);
    p[6] = cfg_.x_lim - std::fabs(s.x);  // signed distance to the cost boundary
    p[7] = std::sqrt(s.vx * s.vx + s.vy * s.vy);
    return Observation{std::move(t)};
}

Tensor CircleEnv::render(const EnvState& s) const {
    constexpr int kGrid = 16;
    Tensor img = Tensor::zeros({kGrid, kGrid});
    float* p = img.data();
    const float cell = 2.f * cfg_.arena / kGrid;
    auto set_max = [&](int r, int c, float v) {
        if (r >= 0 && r < kGrid && c >= 0 && c < kGrid) {
            float& px = p[r * kGrid + c];
            if (v > px) px = v;
        }
    };
    for (int r = 0; r < kGrid; ++r) {
        for (int c = 0; c < kGrid; ++c) {
            const float wx = -cfg_.arena + (static_cast<float>(c) + 0.5f) * cell;
            const float wy = -cfg_.arena + (static_cast<float>(r) + 0.5f) * cell;
            if (std::fabs(std::sqrt(wx * wx + wy * wy) - cfg_.ring_radius) <= 0.5f * cell)
                set_max(r, c, 0.4f);
            if (std::fabs(std::fabs(wx) - cfg_.x_lim) <= 0.5f * cell) set_max(r, c, 0.6f);
        }
    }
    auto to_cell = [&](float w) {
        int i = static_cast<int>(std::floor((w + cfg_.arena) / cell));
        if (i < 0) i = 0;
        if (i > kGrid - 2) i = kGrid - 2;  // 2x2 blob stays in-bounds
        return i;
    };
    const int ac = to_cell(s.x);
    const int ar = to_cell(s.y);
    for (int dr = 0; dr < 2; ++dr)
        for (int dc = 0; dc < 2; ++dc) set_max(ar + dr, ac + dc, 1.0f);
    return img;
}

float episode_cost(const std::vector<StepResult>& results) {
    double s = 0.0;
    for (const auto& r : results) s += r.cost;
    return static_cast<float>(s);
}

TrajectoryCsv::TrajectoryCsv(const std::string& path, bool planner_columns)
    : planner_columns_(planner_columns) {
    f_ = std::fopen(path.c_str(), "w");
    check(f_ != nullptr, "trajectory csv: cannot open " + path);
    std::fprintf(f_, "step,x,y,vx,vy,ax,ay,reward,cost%s\n",
                 planner_columns_ ? ",c_obs,c_sum,chose_safe" : "");
}

TrajectoryCsv::~TrajectoryCsv() {
    if (f_) std::fclose(f_);
}

void TrajectoryCsv::append(int step, const EnvState& s, const std::array<float, 2>& a,
                           float reward, float cost) {
    check(!planner_columns_, "trajectory csv: planner columns expected");
    std::fprintf(f_, "%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", step,
                 static_cast<double>(s.x), static_cast<double>(s.y), static_cast<double>(s.vx),
                 static_cast<double>(s.vy), static_cast<double>(a[0]), static_cast<double>(a[1]),
                 static_cast<double>(reward), static_cast<double>(cost));
}

void TrajectoryCsv::append(int step, const EnvState& s, const std::array<float, 2>& a,
                           float reward, float cost, float c_obs, float c_sum, bool chose_safe) {
    check(planner_columns_, "trajectory csv: planner columns not enabled");
    std::fprintf(f_, "%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%d\n", step,
                 static_cast<double>(s.x), static_cast<double>(s.y), static_cast<double>(s.vx),
                 static_cast<double>(s.vy), static_cast<double>(a[0]), static_cast<double>(a[1]),
                 static_cast<double>(reward), static_cast<double>(cost),
                 static_cast<double>(c_obs), static_cast<double>(c_sum), chose_safe ? 1 : 0);
}

}  // namespace nmdr
