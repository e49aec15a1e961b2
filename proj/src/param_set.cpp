#include "nmdr/param_set.hpp"

#include "nmdr/checkpoint.hpp"

namespace nmdr {

std::vector<std::pair<std::string, Tensor>> ParamSet::to_records(const std::string& prefix) const {
    Records recs;
    recs.reserve(order_.size() * 3 + 1);
    for (size_t i = 0; i < order_.size(); ++i) {
        const std::string name = prefix + order_[i];
        recs.emplace_back(name, entries_[i].value);
        if (entries_[i].m1.defined()) {
            recs.emplace_back(name + ".m1", entries_[i].m1);
            recs.emplace_back(name + ".m2", entries_[i].m2);
        }
    }
    recs.emplace_back(prefix + "step", Tensor::scalar(static_cast<float>(step_)));
    return recs;
}

ParamSet ParamSet::from_records(const std::vector<std::pair<std::string, Tensor>>& records,
                                const std::string& prefix) {
    ParamSet ps;
    auto ends_with = [](const std::string& s, const char* suf) {
        std::string t(suf);
        return s.size() >= t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0;
    };
    for (const auto& [name, t] : records) {
        if (name.compare(0, prefix.size(), prefix) != 0) continue;
        std::string local = name.substr(prefix.size());
        if (local == "step") {
            ps.step_ = static_cast<int64_t>(t.item());
            continue;
        }
        if (ends_with(local, ".m1") || ends_with(local, ".m2")) continue;
        ps.add(local, t.clone());
    }
    // Second pass attaches moments now that values exist.
    for (const auto& [name, t] : records) {
        if (name.compare(0, prefix.size(), prefix) != 0) continue;
        std::string local = name.substr(prefix.size());
        if (ends_with(local, ".m1")) {
            ps.entry(local.substr(0, local.size() - 3)).m1 = t.clone();
        } else if (ends_with(local, ".m2")) {
            ps.entry(local.substr(0, local.size() - 3)).m2 = t.clone();
        }
    }
    return ps;
}

void ParamSet::save(const std::string& path) const { save_records(path, to_records("")); }

ParamSet ParamSet::load(const std::string& path) {
    return from_records(load_records(path), "");
}

}  // namespace nmdr
