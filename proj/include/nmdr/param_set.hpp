#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nmdr/tensor.hpp"

namespace nmdr {

// Named trainable parameters plus per-parameter optimizer moments and one
// step counter shared by the whole set.
class ParamSet {
public:
    struct Entry {
        Tensor value;
        Tensor m1;  // allocated lazily on first optimizer step
        Tensor m2;
    };

    void add(const std::string& name, Tensor init) {
        check(!has(name), "param set: duplicate parameter " + name);
        index_[name] = order_.size();
        order_.push_back(name);
        entries_.push_back(Entry{std::move(init), Tensor{}, Tensor{}});
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Entry& entry(const std::string& name) {
        auto it = index_.find(name);
        check(it != index_.end(), "param set: missing parameter " + name);
        return entries_[it->second];
    }
    const Entry& entry(const std::string& name) const {
        auto it = index_.find(name);
        check(it != index_.end(), "param set: missing parameter " + name);
        return entries_[it->second];
    }

    Tensor& value(const std::string& name) { return entry(name).value; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }

    const std::vector<std::string>& names() const { return order_; }
    size_t size() const { return order_.size(); }

    int64_t step() const { return step_; }
    void set_step(int64_t s) { step_ = s; }
    void bump_step() { ++step_; }

    int64_t scalar_count() const {
        int64_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    // Deep copy (used for target critics).
    ParamSet clone() const {
        ParamSet out;
        out.order_ = order_;
        out.index_ = index_;
        out.step_ = step_;
        out.entries_.reserve(entries_.size());
        for (const auto& e : entries_)
            out.entries_.push_back(Entry{e.value.clone(),
                                         e.m1.defined() ? e.m1.clone() : Tensor{},
                                         e.m2.defined() ? e.m2.clone() : Tensor{}});
        return out;
    }

    void copy_values_from(const ParamSet& other) {
        check(order_ == other.order_, "param set: copy between mismatched sets");
        for (size_t i = 0; i < entries_.size(); ++i) {
            check(entries_[i].value.same_shape(other.entries_[i].value),
                  "param set: copy shape mismatch");
            const float* src = other.entries_[i].value.data();
            float* dst = entries_[i].value.data();
            for (int64_t j = 0; j < entries_[i].value.size(); ++j) dst[j] = src[j];
        }
    }

    // Checkpoint serialization (see checkpoint.hpp for the record format).
    void save(const std::string& path) const;
    static ParamSet load(const std::string& path);

    // Flatten into (name, tensor) records: values, moments, "step".
    std::vector<std::pair<std::string, Tensor>> to_records(const std::string& prefix) const;
    static ParamSet from_records(const std::vector<std::pair<std::string, Tensor>>& records,
                                 const std::string& prefix);

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, size_t> index_;
    std::vector<Entry> entries_;
    int64_t step_ = 0;
};

}  // namespace nmdr
