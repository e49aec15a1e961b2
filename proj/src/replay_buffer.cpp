#include "nmdr/replay_buffer.hpp"

#include <cstring>

namespace nmdr {

void ReplayBuffer::add_episode(Episode e) {
    const int T = e.length();
    check(T > 0, "replay: empty episode");
    check(static_cast<int>(e.obs.size()) == T * obs_dim_, "replay: obs size mismatch");
    check(static_cast<int>(e.actions.size()) == T * action_dim_,
          "replay: action size mismatch");
    check(e.costs.size() == e.rewards.size() && e.terminals.size() == e.rewards.size(),
          "replay: field length mismatch");
    total_steps_ += T;
    episodes_.push_back(std::move(e));
    while (total_steps_ > capacity_ && episodes_.size() > 1) {
        total_steps_ -= episodes_.front().length();
        episodes_.pop_front();
    }
}

bool ReplayBuffer::can_sample(int seq_len) const {
    for (const Episode& e : episodes_)
        if (e.length() >= seq_len) return true;
    return false;
}

SequenceBatch ReplayBuffer::sample(int batch, int seq_len, Rng& rng) const {
    check(can_sample(seq_len), "replay: no episode of length >= " + std::to_string(seq_len));

    // Valid start offsets per episode; uniform over all (episode, offset) pairs.
    std::vector<int64_t> cum;
    cum.reserve(episodes_.size());
    int64_t total = 0;
    for (const Episode& e : episodes_) {
        const int64_t valid = e.length() >= seq_len ? e.length() - seq_len + 1 : 0;
        total += valid;
        cum.push_back(total);
    }

    SequenceBatch out;
    out.obs.resize(static_cast<size_t>(seq_len));
    out.action.resize(static_cast<size_t>(seq_len));
    out.reward.resize(static_cast<size_t>(seq_len));
    out.cost.resize(static_cast<size_t>(seq_len));
    out.terminal.resize(static_cast<size_t>(seq_len));
    for (int t = 0; t < seq_len; ++t) {
        out.obs[t] = Tensor::zeros({batch, obs_dim_});
        out.action[t] = Tensor::zeros({batch, action_dim_});
        out.reward[t] = Tensor::zeros({batch});
        out.cost[t] = Tensor::zeros({batch});
        out.terminal[t] = Tensor::zeros({batch});
    }

    for (int b = 0; b < batch; ++b) {
        const int64_t r = static_cast<int64_t>(rng.below(static_cast<uint64_t>(total)));
        size_t ei = 0;
        while (cum[ei] <= r) ++ei;
        const int64_t offset = r - (ei == 0 ? 0 : cum[ei - 1]);
        const Episode& e = episodes_[ei];
        const int k = static_cast<int>(offset);

        for (int t = 0; t < seq_len; ++t) {
            const int i = k + t;
            std::memcpy(out.obs[t].data() + static_cast<size_t>(b) * obs_dim_,
                        e.obs.data() + static_cast<size_t>(i) * obs_dim_,
                        sizeof(float) * static_cast<size_t>(obs_dim_));
            // Element t pairs obs_i with the transition that arrived at it;
            // the first element gets the zero placeholder action.
            if (t > 0) {
                std::memcpy(out.action[t].data() + static_cast<size_t>(b) * action_dim_,
                            e.actions.data() + static_cast<size_t>(i - 1) * action_dim_,
                            sizeof(float) * static_cast<size_t>(action_dim_));
                out.reward[t].data()[b] = e.rewards[static_cast<size_t>(i - 1)];
                out.cost[t].data()[b] = e.costs[static_cast<size_t>(i - 1)];
                out.terminal[t].data()[b] = e.terminals[static_cast<size_t>(i - 1)];
            }
        }
    }
    return out;
}

Records ReplayBuffer::to_records(const std::string& prefix) const {
    Records recs;
    recs.emplace_back(prefix + "count",
                      Tensor::scalar(static_cast<float>(episodes_.size())));
    for (size_t i = 0; i < episodes_.size(); ++i) {
        const Episode& e = episodes_[i];
        const std::string base = prefix + "e" + std::to_string(i) + ".";
        const int T = e.length();
        recs.emplace_back(base + "obs", Tensor({T, obs_dim_}, e.obs));
        recs.emplace_back(base + "act", Tensor({T, action_dim_}, e.actions));
        recs.emplace_back(base + "rew", Tensor({T}, e.rewards));
        recs.emplace_back(base + "cost", Tensor({T}, e.costs));
        recs.emplace_back(base + "term", Tensor({T}, e.terminals));
    }
    return recs;
}

ReplayBuffer ReplayBuffer::from_records(const Records& records, const std::string& prefix,
                                        int64_t capacity, int obs_dim, int action_dim) {
    ReplayBuffer buf(capacity, obs_dim, action_dim);
    auto find = [&](const std::string& name) -> const Tensor* {
        for (const auto& [n, t] : records)
            if (n == name) return &t;
        return nullptr;
    };
    const Tensor* count = find(prefix + "count");
    check(count != nullptr, "replay: checkpoint missing " + prefix + "count");
    const int n = static_cast<int>(count->item());
    for (int i = 0; i < n; ++i) {
        const std::string base = prefix + "e" + std::to_string(i) + ".";
        const Tensor* obs = find(base + "obs");
        const Tensor* act = find(base + "act");
        const Tensor* rew = find(base + "rew");
        const Tensor* cost = find(base + "cost");
        const Tensor* term = find(base + "term");
        check(obs && act && rew && cost && term, "replay: checkpoint missing episode " + base);
        Episode e;
        e.obs.assign(obs->data(), obs->data() + obs->size());
        e.actions.assign(act->data(), act->data() + act->size());
        e.rewards.assign(rew->data(), rew->data() + rew->size());
        e.costs.assign(cost->data(), cost->data() + cost->size());
        e.terminals.assign(term->data(), term->data() + term->size());
        buf.add_episode(std::move(e));
    }
    return buf;
}

}  // namespace nmdr
