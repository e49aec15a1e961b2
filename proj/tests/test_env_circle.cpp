#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nmdr/env_circle.hpp"
#include "nmdr/rng.hpp"

using namespace nmdr;

TEST_CASE("reset: deterministic per seed, support, distinct seeds") {
    CircleEnv env;
    auto [s1, o1] = env.reset(7);
    auto [s2, o2] = env.reset(7);
    CHECK(s1.x == s2.x);
    CHECK(s1.y == s2.y);
    for (int64_t i = 0; i < o1.data.size(); ++i) CHECK(o1.data.data()[i] == o2.data.data()[i]);

    for (uint64_t seed = 0; seed < 1000; ++seed) {
        auto [s, o] = env.reset(seed);
        CHECK(std::fabs(s.x) <= 0.5f);
        CHECK(std::fabs(s.y) <= 0.5f);
        CHECK(s.vx == 0.f);
        CHECK(s.vy == 0.f);
        CHECK(s.step_index == 0);
    }

    auto [s8, o8] = env.reset(8);
    CHECK((s1.x != s8.x || s1.y != s8.y));
}

TEST_CASE("step: outside the boundary always costs 1 from rest") {
    CircleEnv env;
    EnvState s;
    s.x = 1.35f;  // x_lim + 0.1
    s.y = 0.f;
    for (float ax : {-1.f, 0.f, 1.f}) {
        for (float ay : {-1.f, 0.f, 1.f}) {
            auto [ns, res] = env.step(s, {ax, ay});
            CHECK(res.cost == 1.f);
        }
    }
}

TEST_CASE("step: at rest at the origin, zero action gives zero reward and cost") {
    CircleEnv env;
    EnvState s;
    auto [ns, res] = env.step(s, {0.f, 0.f});
    CHECK(res.reward == 0.f);
    CHECK(res.cost == 0.f);
}

TEST_CASE("step: reward matches the hand-evaluated tangential expression") {
    // Oracle: evaluate the update and reward formula here in f64.
    CircleEnv env;
    const auto& c = env.config();
    EnvState s;
    s.x = 1.5f;
    s.y = 0.f;
    s.vx = 0.f;
    s.vy = 1.f;

    const double vx = 0.0 * (1.0 - c.drag);
    const double vy = 1.0 * (1.0 - c.drag);
    const double nx = 1.5 + vx * c.dt;
    const double ny = 0.0 + vy * c.dt;
    const double radius = std::sqrt(nx * nx + ny * ny);
    const double expected =
        (-ny * vx + nx * vy) / (1.0 + std::fabs(radius - c.ring_radius)) * c.dt;

    auto [ns, res] = env.step(s, {0.f, 0.f});
    CHECK(static_cast<double>(res.reward) == doctest::Approx(expected).epsilon(1e-5));
    CHECK(res.cost == 1.f);  // 1.5 > x_lim
}

TEST_CASE("step: non-finite action is an error; oversized action clamps") {
    CircleEnv env;
    EnvState s;
    CHECK_THROWS_AS(env.step(s, {std::nanf(""), 0.f}), Error);
    auto [ns, res] = env.step(s, {5.f, 0.f});
    // Clamped to 1: velocity = a_max * dt = 0.1
    CHECK(ns.vx == doctest::Approx(0.1f));
}

TEST_CASE("cost depends only on |x| vs x_lim") {
    CircleEnv env;
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        EnvState s;
        s.x = static_cast<float>(rng.uniform(-3, 3));
        s.y = static_cast<float>(rng.uniform(-3, 3));
        s.vx = static_cast<float>(rng.uniform(-2, 2));
        s.vy = static_cast<float>(rng.uniform(-2, 2));
        const float expected = std::fabs(s.x) > env.config().x_lim ? 1.f : 0.f;
        CHECK(env.cost_of(s) == expected);
    }
}

TEST_CASE("energy bound holds after every step") {
    CircleEnv env;
    auto [s, o] = env.reset(42);
    Rng rng(43);
    for (int t = 0; t < 1000; ++t) {
        std::array<float, 2> a = {static_cast<float>(rng.uniform(-1, 1)),
                                  static_cast<float>(rng.uniform(-1, 1))};
        auto [ns, res] = env.step(s, a);
        s = ns;
        CHECK(std::sqrt(s.vx * s.vx + s.vy * s.vy) <= env.config().v_max + 1e-5f);
        CHECK(std::fabs(s.x) <= env.config().arena);
        CHECK(std::fabs(s.y) <= env.config().arena);
    }
}

TEST_CASE("full determinism: seed plus action sequence fixes the trajectory") {
    CircleEnv env;
    auto run = [&] {
        auto [s, o] = env.reset(5);
        Rng rng(6);
        std::vector<float> tape;
        for (int t = 0; t < 200; ++t) {
            std::array<float, 2> a = {static_cast<float>(rng.uniform(-1, 1)),
                                      static_cast<float>(rng.uniform(-1, 1))};
            auto [ns, res] = env.step(s, a);
            s = ns;
            tape.push_back(s.x);
            tape.push_back(s.y);
            tape.push_back(res.reward);
            tape.push_back(res.cost);
        }
        return tape;
    };
    CHECK(run() == run());
}

TEST_CASE("reward symmetry: reflecting across the x-axis negates the reward") {
    CircleEnv env;
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        EnvState s;
        s.x = static_cast<float>(rng.uniform(-2, 2));
        s.y = static_cast<float>(rng.uniform(-2, 2));
        s.vx = static_cast<float>(rng.uniform(-1.5, 1.5));
        s.vy = static_cast<float>(rng.uniform(-1.5, 1.5));
        std::array<float, 2> a = {static_cast<float>(rng.uniform(-1, 1)),
                                  static_cast<float>(rng.uniform(-1, 1))};
        EnvState sr;
        sr.x = s.x;
        sr.y = -s.y;
        sr.vx = s.vx;
        sr.vy = -s.vy;
        std::array<float, 2> ar = {a[0], -a[1]};
        auto [n1, r1] = env.step(s, a);
        auto [n2, r2] = env.step(sr, ar);
        CHECK(static_cast<double>(r1.reward) ==
              doctest::Approx(-static_cast<double>(r2.reward)).epsilon(1e-4));
    }
}

TEST_CASE("terminal flag exactly at episode length") {
    EnvConfig cfg;
    cfg.episode_length = 5;
    CircleEnv env(cfg);
    auto [s, o] = env.reset(1);
    for (int t = 0; t < 5; ++t) {
        auto [ns, res] = env.step(s, {0.1f, 0.f});
        s = ns;
        CHECK(res.terminal == (t == 4));
    }
}

TEST_CASE("render: blob at center, grid determinism, corner clamping") {
    CircleEnv env;
    EnvState center;
    Tensor img = env.render(center);
    CHECK(img.rows() == 16);
    CHECK(img.cols() == 16);
    // Agent blob has intensity 1 and sits at the grid center.
    float mx = 0.f;
    for (int64_t i = 0; i < img.size(); ++i) mx = std::max(mx, img.data()[i]);
    CHECK(mx == 1.0f);
    bool center_hit = false;
    for (int r = 7; r <= 8; ++r)
        for (int c = 7; c <= 8; ++c)
            if (img.data()[r * 16 + c] == 1.0f) center_hit = true;
    CHECK(center_hit);

    Tensor img2 = env.render(center);
    for (int64_t i = 0; i < img.size(); ++i) CHECK(img.data()[i] == img2.data()[i]);

    EnvState corner;
    corner.x = 3.f;
    corner.y = 3.f;
    Tensor imgc = env.render(corner);
    CHECK(imgc.data()[15 * 16 + 15] == 1.0f);  // clipped in-bounds
    for (int64_t i = 0; i < imgc.size(); ++i) {
        CHECK(imgc.data()[i] >= 0.f);
        CHECK(imgc.data()[i] <= 1.f);
    }
}

TEST_CASE("image observations are the flattened render") {
    EnvConfig cfg;
    cfg.obs_mode = ObsMode::kImage;
    CircleEnv env(cfg);
    auto [s, o] = env.reset(3);
    CHECK(o.data.size() == 256);
    Tensor img = env.render(s);
    for (int64_t i = 0; i < 256; ++i) CHECK(o.data.data()[i] == img.data()[i]);
}

TEST_CASE("episode cost: zero, counting, and recount oracle") {
    std::vector<StepResult> results;
    CHECK(episode_cost(results) == 0.f);
    StepResult r;
    for (int i = 0; i < 500; ++i) {
        r.cost = i < 30 ? 1.f : 0.f;
        results.push_back(r);
    }
    CHECK(episode_cost(results) == 30.f);

    // Random rollout equals an independent recount.
    CircleEnv env;
    auto [s, o] = env.reset(12);
    Rng rng(13);
    results.clear();
    double recount = 0.0;
    for (int t = 0; t < 500; ++t) {
        std::array<float, 2> a = {static_cast<float>(rng.uniform(-1, 1)),
                                  static_cast<float>(rng.uniform(-1, 1))};
        auto [ns, res] = env.step(s, a);
        s = ns;
        results.push_back(res);
        recount += std::fabs(res.cost);
    }
    CHECK(episode_cost(results) == doctest::Approx(recount));
}

TEST_CASE("trajectory csv dump has the documented header") {
    const std::string path = "/tmp/nmdr_traj_test.csv";
    {
        TrajectoryCsv csv(path, false);
        EnvState s;
        csv.append(0, s, {0.1f, -0.2f}, 0.5f, 0.f);
    }
    std::FILE* f = std::fopen(path.c_str(), "r");
    REQUIRE(f != nullptr);
    char line[256];
    REQUIRE(std::fgets(line, sizeof line, f) != nullptr);
    CHECK(std::string(line) == "step,x,y,vx,vy,ax,ay,reward,cost\n");
    std::fclose(f);
    std::remove(path.c_str());
}
