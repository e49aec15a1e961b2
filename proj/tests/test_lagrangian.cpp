#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nmdr/lagrangian.hpp"
#include "nmdr/rng.hpp"

using namespace nmdr;

TEST_CASE("record_cost: fifty ones give mean one (episode units scale by length)") {
    LagrangeState st;
    for (int i = 0; i < 50; ++i) st.record_cost(1.f);
    // All-ones window: per-step mean 1.0 -> 500 in episode units.
    CHECK(st.mean_cost() == doctest::Approx(500.0));
}

TEST_CASE("record_cost: 51st push evicts the oldest") {
    LagrangeConfig cfg;
    cfg.window = 50;
    LagrangeState st(cfg);
    st.record_cost(1.f);
    for (int i = 0; i < 49; ++i) st.record_cost(0.f);
    // Window now {1, 0 x 49}: mean 1/50.
    CHECK(st.mean_cost() == doctest::Approx(500.0 / 50.0));
    st.record_cost(0.f);  // evicts the initial 1
    CHECK(st.mean_cost() == doctest::Approx(0.0));
}

TEST_CASE("record_cost: negative cost is an error; empty window mean is an error") {
    LagrangeState st;
    CHECK_THROWS_AS(st.record_cost(-0.5f), Error);
    CHECK_THROWS_AS(st.mean_cost(), Error);
}

TEST_CASE("mean_cost matches recomputation from scratch on a random stream") {
    LagrangeConfig cfg;
    cfg.window = 50;
    LagrangeState st(cfg);
    Rng rng(17);
    std::vector<float> all;
    for (int i = 0; i < 500; ++i) {
        const float c = static_cast<float>(rng.uniform(0, 2));
        st.record_cost(c);
        all.push_back(c);
        // Oracle: recount the last <=50 entries directly.
        double s = 0.0;
        const size_t n = std::min<size_t>(all.size(), 50);
        for (size_t k = all.size() - n; k < all.size(); ++k) s += all[k];
        const double expected = s / static_cast<double>(n) * 500.0;
        CHECK(st.mean_cost() == doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("update_multiplier: fixed point at budget, ascent on violation, clip at max") {
    LagrangeConfig cfg;
    cfg.alpha = 0.01f;
    cfg.budget = 25.f;
    cfg.lambda_init = 1.f;
    LagrangeState st(cfg);
    // Window mean == budget: 25/500 per step.
    for (int i = 0; i < 50; ++i) st.record_cost(25.f / 500.f);
    CHECK(st.mean_cost() == doctest::Approx(25.0).epsilon(1e-5));
    st.update_multiplier();
    CHECK(st.lambda() == doctest::Approx(1.0).epsilon(1e-5));

    // C_k = budget + 10 -> ascent by alpha * 10.
    LagrangeState st2(cfg);
    for (int i = 0; i < 50; ++i) st2.record_cost(35.f / 500.f);
    st2.update_multiplier();
    CHECK(st2.lambda() == doctest::Approx(1.1).epsilon(1e-4));

    // At lambda_max with a violating stream, stays at lambda_max.
    LagrangeState st3(cfg);
    st3.set_lambda(cfg.lambda_max);
    for (int i = 0; i < 50; ++i) st3.record_cost(1.f);
    st3.update_multiplier();
    CHECK(st3.lambda() == cfg.lambda_max);
}

TEST_CASE("paper_sign flag reproduces the printed update direction") {
    LagrangeConfig cfg;
    cfg.alpha = 0.01f;
    cfg.budget = 25.f;
    cfg.lambda_init = 1.f;
    cfg.paper_sign = true;
    LagrangeState st(cfg);
    for (int i = 0; i < 50; ++i) st.record_cost(35.f / 500.f);
    st.update_multiplier();  // printed form relaxes the multiplier under violation
    CHECK(st.lambda() == doctest::Approx(0.9).epsilon(1e-4));
}

TEST_CASE("bounds and monotone response under 10k random streams") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        LagrangeConfig cfg;
        cfg.lambda_init = static_cast<float>(rng.uniform(1e-3, 100.0));
        LagrangeState st(cfg);
        const int steps = 50;
        for (int i = 0; i < steps; ++i) {
            float c = static_cast<float>(rng.uniform(0, 1.0));
            if (rng.uniform() < 0.02) c = 1e9f;  // extreme spikes
            st.record_cost(c);
            st.update_multiplier();
            CHECK(st.lambda() >= cfg.lambda_min);
            CHECK(st.lambda() <= cfg.lambda_max);
        }
    }

    // Monotone response: same prior state, larger windowed cost never gives a
    // smaller post-update multiplier.
    Rng rng2(29);
    for (int trial = 0; trial < 500; ++trial) {
        LagrangeConfig cfg;
        cfg.lambda_init = static_cast<float>(rng2.uniform(1e-3, 100.0));
        const float base = static_cast<float>(rng2.uniform(0, 1.0));
        const float bigger = base + static_cast<float>(rng2.uniform(0, 1.0 - base));
        LagrangeState a(cfg), b(cfg);
        for (int i = 0; i < 50; ++i) {
            a.record_cost(base);
            b.record_cost(bigger);
        }
        a.update_multiplier();
        b.update_multiplier();
        CHECK(b.lambda() >= a.lambda());
    }
}

TEST_CASE("fixed point: constant cost at budget keeps lambda constant forever") {
    LagrangeConfig cfg;
    cfg.lambda_init = 3.f;
    LagrangeState st(cfg);
    for (int i = 0; i < 500; ++i) {
        st.record_cost(cfg.budget / static_cast<float>(cfg.episode_length));
        st.update_multiplier();
        CHECK(st.lambda() == doctest::Approx(3.0).epsilon(1e-5));
    }
}

TEST_CASE("restore reproduces the saved window state") {
    LagrangeState st;
    Rng rng(5);
    for (int i = 0; i < 77; ++i) st.record_cost(static_cast<float>(rng.uniform(0, 1)));
    LagrangeState st2;
    st2.restore(st.lambda(), st.window_contents(), st.cursor());
    CHECK(st2.mean_cost() == st.mean_cost());
}
