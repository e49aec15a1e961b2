#pragma once

#include <vector>

#include "nmdr/tensor.hpp"

namespace nmdr {

struct LagrangeConfig {
    float alpha = 0.02f;        // dual learning rate
    float budget = 25.f;        // episode cost budget b
    float lambda_init = 1e-3f;
    float lambda_min = 1e-3f;   // strictly positive so cost pressure never vanishes
    float lambda_max = 100.f;
    int window = 50;            // moving-average length l
    int episode_length = 500;   // converts the per-step mean into episode units
    bool paper_sign = false;    // reproduce the printed minus-sign update
};

// Dual multiplier driven by a moving average of real per-step costs.
class LagrangeState {
public:
    explicit LagrangeState(LagrangeConfig cfg = {})
        : cfg_(cfg), lambda_p_(cfg.lambda_init) {}

    void record_cost(float cost) {
        check(cost >= 0.f, "lagrange: negative cost");
        if (static_cast<int>(window_.size()) < cfg_.window) {
            window_.push_back(cost);
        } else {
            window_[static_cast<size_t>(cursor_)] = cost;
        }
        cursor_ = (cursor_ + 1) % cfg_.window;
    }

    // Windowed per-step mean cost expressed in episode-budget units.
    float mean_cost() const {
        check(!window_.empty(), "lagrange: mean_cost on empty window");
        double s = 0.0;
        for (float c : window_) s += c;
        const double per_step = s / static_cast<double>(window_.size());
        return static_cast<float>(per_step * static_cast<double>(cfg_.episode_length));
    }

    // Clipped dual update. The default is dual ascent: the multiplier grows
    // while the windowed cost exceeds the budget.
    void update_multiplier() {
        const float ck = mean_cost();
        const float delta = cfg_.alpha * (ck - cfg_.budget);
        float next = cfg_.paper_sign ? lambda_p_ - delta : lambda_p_ + delta;
        if (next < cfg_.lambda_min) next = cfg_.lambda_min;
        if (next > cfg_.lambda_max) next = cfg_.lambda_max;
        lambda_p_ = next;
    }

    float lambda() const { return lambda_p_; }
    void set_lambda(float v) { lambda_p_ = v; }
    bool window_empty() const { return window_.empty(); }
    int window_size() const { return static_cast<int>(window_.size()); }
    const LagrangeConfig& config() const { return cfg_; }

    // Checkpoint plumbing.
    std::vector<float> window_contents() const { return window_; }
    int cursor() const { return cursor_; }
    void restore(float lambda_p, std::vector<float> window, int cursor) {
        check(static_cast<int>(window.size()) <= cfg_.window, "lagrange: window too large");
        lambda_p_ = lambda_p;
        window_ = std::move(window);
        cursor_ = cursor;
    }

private:
    LagrangeConfig cfg_;
    float lambda_p_;
    std::vector<float> window_;
    int cursor_ = 0;
};

}  // namespace nmdr
