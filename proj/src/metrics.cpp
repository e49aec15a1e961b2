#include "nmdr/metrics.hpp"

#include <sys/stat.h>

namespace nmdr {

const char* MetricsWriter::header() {
    return "env_step,episode_return,episode_cost,lambda_p,c_k,loss_recon,loss_reward,"
           "loss_cost,loss_kl,loss_actor_control,loss_actor_safe,loss_critic_reward,"
           "loss_critic_cost,loss_disc,chose_safe_rate,wallclock_s";
}

void MetricsWriter::open(const std::string& path) {
    close();
    struct stat st{};
    const bool fresh = stat(path.c_str(), &st) != 0 || st.st_size == 0;
    f_ = std::fopen(path.c_str(), "a");
    check(f_ != nullptr, "metrics: cannot open " + path);
    path_ = path;
    if (fresh) std::fprintf(f_, "%s\n", header());
}

void MetricsWriter::close() {
    if (f_) {
        std::fclose(f_);
        f_ = nullptr;
    }
}

void MetricsWriter::append(const MetricsRow& r) {
    check(f_ != nullptr, "metrics: writer not open");
    std::fprintf(f_,
                 "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                 "%.3f\n",
                 static_cast<long long>(r.env_step), r.episode_return, r.episode_cost,
                 r.lambda_p, r.c_k, r.loss_recon, r.loss_reward, r.loss_cost, r.loss_kl,
                 r.loss_actor_control, r.loss_actor_safe, r.loss_critic_reward,
                 r.loss_critic_cost, r.loss_disc, r.chose_safe_rate, r.wallclock_s);
    std::fflush(f_);
}

}  // namespace nmdr
