#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace nmdr {

// xoshiro256** with splitmix64 seeding. Self-contained so that streams are
// reproducible across compilers and the full state can be checkpointed.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t x = seed;
        for (auto& s : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            s = z ^ (z >> 31);
        }
        have_spare_ = false;
        spare_ = 0.0;
    }

    uint64_t next_u64() {
        uint64_t* s = state_.data();
        uint64_t result = rotl(s[1] * 5, 7) * 9;
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Index in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (explicit formula, serializable state).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    float normal_f() { return static_cast<float>(normal()); }

    // Checkpointable state: 4 words of xoshiro state plus the Box-Muller spare.
    struct State {
        std::array<uint64_t, 4> s;
        bool have_spare;
        double spare;
    };

    State save() const { return State{state_, have_spare_, spare_}; }
    void restore(const State& st) {
        state_ = st.s;
        have_spare_ = st.have_spare;
        spare_ = st.spare;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nmdr
