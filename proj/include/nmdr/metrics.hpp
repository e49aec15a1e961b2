#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "nmdr/tensor.hpp"

namespace nmdr {

struct MetricsRow {
    int64_t env_step = 0;
    double episode_return = 0.0;
    double episode_cost = 0.0;
    double lambda_p = 0.0;
    double c_k = 0.0;
    double loss_recon = 0.0;
    double loss_reward = 0.0;
    double loss_cost = 0.0;
    double loss_kl = 0.0;
    double loss_actor_control = 0.0;
    double loss_actor_safe = 0.0;
    double loss_critic_reward = 0.0;
    double loss_critic_cost = 0.0;
    double loss_disc = 0.0;
    double chose_safe_rate = 0.0;
    double wallclock_s = 0.0;
};

// Append-only CSV, header written once per file.
class MetricsWriter {
public:
    MetricsWriter() = default;
    explicit MetricsWriter(const std::string& path) { open(path); }
    ~MetricsWriter() { close(); }

    MetricsWriter(const MetricsWriter&) = delete;
    MetricsWriter& operator=(const MetricsWriter&) = delete;

    void open(const std::string& path);
    void close();
    void append(const MetricsRow& row);
    const std::string& path() const { return path_; }

    static const char* header();

private:
    std::FILE* f_ = nullptr;
    std::string path_;
};

}  // namespace nmdr
