#pragma once

#include <deque>
#include <vector>

#include "nmdr/checkpoint.hpp"
#include "nmdr/rng.hpp"
#include "nmdr/tensor.hpp"

namespace nmdr {

// One complete episode, flat row-major storage.
struct Episode {
    std::vector<float> obs;        // [T * obs_dim]
    std::vector<float> actions;    // [T * action_dim]
    std::vector<float> rewards;    // [T]
    std::vector<float> costs;      // [T]
    std::vector<float> terminals;  // [T]

    int length() const { return static_cast<int>(rewards.size()); }
};

// Time-major training batch. Element t pairs the observation at t with the
// action that led into it and the reward/cost/terminal received on arrival;
// index 0 carries the zero placeholder action.
struct SequenceBatch {
    std::vector<Tensor> obs;       // T x [B, obs_dim]
    std::vector<Tensor> action;    // T x [B, A]
    std::vector<Tensor> reward;    // T x [B]
    std::vector<Tensor> cost;      // T x [B]
    std::vector<Tensor> terminal;  // T x [B]

    int seq_len() const { return static_cast<int>(obs.size()); }
    int batch() const { return obs.empty() ? 0 : obs[0].rows(); }
};

// Episodic replay: whole episodes in, whole episodes evicted, sampled
// sequences never cross an episode boundary.
class ReplayBuffer {
public:
    ReplayBuffer(int64_t capacity_steps, int obs_dim, int action_dim)
        : capacity_(capacity_steps), obs_dim_(obs_dim), action_dim_(action_dim) {}

    void add_episode(Episode e);

    int64_t total_steps() const { return total_steps_; }
    size_t episode_count() const { return episodes_.size(); }
    int obs_dim() const { return obs_dim_; }
    int action_dim() const { return action_dim_; }
    const Episode& episode(size_t i) const { return episodes_[i]; }

    bool can_sample(int seq_len) const;

    // Uniform over all valid (episode, offset) pairs.
    SequenceBatch sample(int batch, int seq_len, Rng& rng) const;

    Records to_records(const std::string& prefix) const;
    static ReplayBuffer from_records(const Records& records, const std::string& prefix,
                                     int64_t capacity, int obs_dim, int action_dim);

private:
    std::deque<Episode> episodes_;
    int64_t total_steps_ = 0;
    int64_t capacity_;
    int obs_dim_;
    int action_dim_;
};

}  // namespace nmdr
