#include "nmdr/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nmdr {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

float to_f(const std::string& v) {
    size_t pos = 0;
    float x = std::stof(v, &pos);
    check(pos == v.size(), "config: bad float '" + v + "'");
    return x;
}

int64_t to_i(const std::string& v) {
    size_t pos = 0;
    int64_t x = std::stoll(v, &pos);
    check(pos == v.size(), "config: bad integer '" + v + "'");
    return x;
}

bool to_b(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("config: bad bool '" + v + "'");
}

}  // namespace

void TrainConfig::apply(const std::string& key, const std::string& value) {
    using Setter = std::function<void(TrainConfig&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"seed", [](TrainConfig& c, const std::string& v) { c.seed = static_cast<uint64_t>(to_i(v)); }},
        {"obs_mode",
         [](TrainConfig& c, const std::string& v) {
             check(v == "vector" || v == "image", "config: obs_mode must be vector or image");
             c.obs_mode = v;
         }},
        {"output_dir", [](TrainConfig& c, const std::string& v) { c.output_dir = v; }},
        {"total_steps", [](TrainConfig& c, const std::string& v) { c.total_steps = to_i(v); }},

        {"env.dt", [](TrainConfig& c, const std::string& v) { c.env.dt = to_f(v); }},
        {"env.drag", [](TrainConfig& c, const std::string& v) { c.env.drag = to_f(v); }},
        {"env.a_max", [](TrainConfig& c, const std::string& v) { c.env.a_max = to_f(v); }},
        {"env.v_max", [](TrainConfig& c, const std::string& v) { c.env.v_max = to_f(v); }},
        {"env.ring_radius",
         [](TrainConfig& c, const std::string& v) { c.env.ring_radius = to_f(v); }},
        {"env.x_lim", [](TrainConfig& c, const std::string& v) { c.env.x_lim = to_f(v); }},
        {"env.arena", [](TrainConfig& c, const std::string& v) { c.env.arena = to_f(v); }},
        {"env.episode_length",
         [](TrainConfig& c, const std::string& v) { c.env.episode_length = static_cast<int>(to_i(v)); }},

        {"wm.deter", [](TrainConfig& c, const std::string& v) { c.wm.deter = static_cast<int>(to_i(v)); }},
        {"wm.stoch", [](TrainConfig& c, const std::string& v) { c.wm.stoch = static_cast<int>(to_i(v)); }},
        {"wm.hidden", [](TrainConfig& c, const std::string& v) { c.wm.hidden = static_cast<int>(to_i(v)); }},
        {"wm.embed", [](TrainConfig& c, const std::string& v) { c.wm.embed = static_cast<int>(to_i(v)); }},
        {"wm.lr", [](TrainConfig& c, const std::string& v) { c.wm_lr = to_f(v); }},
        {"wm.alpha_r", [](TrainConfig& c, const std::string& v) { c.wm.alpha_r = to_f(v); }},
        {"wm.alpha_c", [](TrainConfig& c, const std::string& v) { c.wm.alpha_c = to_f(v); }},
        {"wm.beta_kl", [](TrainConfig& c, const std::string& v) { c.wm.beta_kl = to_f(v); }},
        {"wm.free_nats", [](TrainConfig& c, const std::string& v) { c.wm.free_nats = to_f(v); }},
        {"wm.kl_balance", [](TrainConfig& c, const std::string& v) { c.wm.kl_balance = to_f(v); }},
        {"wm.std_floor", [](TrainConfig& c, const std::string& v) { c.wm.std_floor = to_f(v); }},

        {"gamma",
         [](TrainConfig& c, const std::string& v) {
             c.wm.gamma = to_f(v);
             c.policy.gamma = to_f(v);
         }},
        {"policy.horizon",
         [](TrainConfig& c, const std::string& v) { c.policy.horizon = static_cast<int>(to_i(v)); }},
        {"policy.lambda", [](TrainConfig& c, const std::string& v) { c.policy.lambda = to_f(v); }},
        {"policy.entropy_eta",
         [](TrainConfig& c, const std::string& v) { c.policy.entropy_eta = to_f(v); }},
        {"policy.actor_lr",
         [](TrainConfig& c, const std::string& v) { c.policy.actor_lr = to_f(v); }},
        {"policy.critic_lr",
         [](TrainConfig& c, const std::string& v) { c.policy.critic_lr = to_f(v); }},
        {"policy.target_interval",
         [](TrainConfig& c, const std::string& v) { c.policy.target_interval = static_cast<int>(to_i(v)); }},
        {"policy.std_floor",
         [](TrainConfig& c, const std::string& v) { c.policy.std_floor = to_f(v); }},
        {"policy.imag_starts",
         [](TrainConfig& c, const std::string& v) { c.policy.imag_starts = static_cast<int>(to_i(v)); }},

        {"disc.hidden", [](TrainConfig& c, const std::string& v) { c.disc.hidden = static_cast<int>(to_i(v)); }},
        {"disc.lr", [](TrainConfig& c, const std::string& v) { c.disc.lr = to_f(v); }},
        {"disc.logit_clamp",
         [](TrainConfig& c, const std::string& v) { c.disc.logit_clamp = to_f(v); }},

        {"lagrange.alpha", [](TrainConfig& c, const std::string& v) { c.lagrange.alpha = to_f(v); }},
        {"lagrange.budget",
         [](TrainConfig& c, const std::string& v) { c.lagrange.budget = to_f(v); }},
        {"lagrange.lambda_init",
         [](TrainConfig& c, const std::string& v) { c.lagrange.lambda_init = to_f(v); }},
        {"lagrange.lambda_min",
         [](TrainConfig& c, const std::string& v) { c.lagrange.lambda_min = to_f(v); }},
        {"lagrange.lambda_max",
         [](TrainConfig& c, const std::string& v) { c.lagrange.lambda_max = to_f(v); }},
        {"lagrange.window",
         [](TrainConfig& c, const std::string& v) { c.lagrange.window = static_cast<int>(to_i(v)); }},
        {"lagrange.paper_sign",
         [](TrainConfig& c, const std::string& v) { c.lagrange.paper_sign = to_b(v); }},

        {"planner.horizon",
         [](TrainConfig& c, const std::string& v) { c.planner_horizon = static_cast<int>(to_i(v)); }},
        {"planner.budget_scale",
         [](TrainConfig& c, const std::string& v) { c.planner_budget_scale = to_f(v); }},

        {"train.seq_len", [](TrainConfig& c, const std::string& v) { c.seq_len = static_cast<int>(to_i(v)); }},
        {"train.batch", [](TrainConfig& c, const std::string& v) { c.batch = static_cast<int>(to_i(v)); }},
        {"train.prefill", [](TrainConfig& c, const std::string& v) { c.prefill = to_i(v); }},
        {"train.train_every",
         [](TrainConfig& c, const std::string& v) { c.train_every = static_cast<int>(to_i(v)); }},
        {"train.buffer_capacity",
         [](TrainConfig& c, const std::string& v) { c.buffer_capacity = to_i(v); }},
        {"train.explore_noise",
         [](TrainConfig& c, const std::string& v) { c.explore_noise = to_f(v); }},
        {"train.checkpoint_every",
         [](TrainConfig& c, const std::string& v) { c.checkpoint_every = to_i(v); }},
        {"train.metrics_every",
         [](TrainConfig& c, const std::string& v) { c.metrics_every = static_cast<int>(to_i(v)); }},

        {"adam.beta1", [](TrainConfig& c, const std::string& v) { c.adam_beta1 = to_f(v); }},
        {"adam.beta2", [](TrainConfig& c, const std::string& v) { c.adam_beta2 = to_f(v); }},
        {"adam.eps", [](TrainConfig& c, const std::string& v) { c.adam_eps = to_f(v); }},
        {"adam.clip", [](TrainConfig& c, const std::string& v) { c.grad_clip = to_f(v); }},
    };

    auto it = setters.find(key);
    check(it != setters.end(), "config: unknown key '" + key + "'");
    it->second(*this, value);
}

void TrainConfig::finalize() {
    env.obs_mode = obs_mode == "image" ? ObsMode::kImage : ObsMode::kVector;
    wm.obs_dim = env.obs_dim();
    lagrange.episode_length = env.episode_length;

    check(total_steps > 0 && prefill >= 0 && train_every > 0, "config: step counts positive");
    check(seq_len >= 2 && batch >= 1, "config: batch shape");
    check(buffer_capacity >= env.episode_length, "config: buffer below one episode");
    check(policy.horizon >= 1 && planner_horizon >= 0, "config: horizons");
    check(policy.lambda >= 0.f && policy.lambda <= 1.f, "config: lambda in [0,1]");
    check(lagrange.budget >= 0.f, "config: budget must be >= 0");
    check(policy.imag_starts >= 1, "config: imag_starts");
    check(env.episode_length >= seq_len, "config: episode shorter than seq_len");
}

TrainConfig TrainConfig::load(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "config: cannot open " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        check(eq != std::string::npos,
              "config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        check(!key.empty() && !value.empty(),
              "config: line " + std::to_string(lineno) + " has empty key or value");
        cfg.apply(key, value);
    }
    cfg.finalize();
    return cfg;
}

Records TrainConfig::to_records() const {
    Records r;
    auto put = [&](const std::string& k, float v) {
        r.emplace_back("config." + k, Tensor::scalar(v));
    };
    put("seed", static_cast<float>(seed));
    put("obs_mode", obs_mode == "image" ? 1.f : 0.f);
    put("total_steps", static_cast<float>(total_steps));
    put("env.dt", env.dt);
    put("env.drag", env.drag);
    put("env.a_max", env.a_max);
    put("env.v_max", env.v_max);
    put("env.ring_radius", env.ring_radius);
    put("env.x_lim", env.x_lim);
    put("env.arena", env.arena);
    put("env.episode_length", static_cast<float>(env.episode_length));
    put("wm.deter", static_cast<float>(wm.deter));
    put("wm.stoch", static_cast<float>(wm.stoch));
    put("wm.hidden", static_cast<float>(wm.hidden));
    put("wm.embed", static_cast<float>(wm.embed));
    put("wm.lr", wm_lr);
    put("wm.alpha_r", wm.alpha_r);
    put("wm.alpha_c", wm.alpha_c);
    put("wm.beta_kl", wm.beta_kl);
    put("wm.free_nats", wm.free_nats);
    put("wm.kl_balance", wm.kl_balance);
    put("wm.std_floor", wm.std_floor);
    put("gamma", wm.gamma);
    put("policy.horizon", static_cast<float>(policy.horizon));
    put("policy.lambda", policy.lambda);
    put("policy.entropy_eta", policy.entropy_eta);
    put("policy.actor_lr", policy.actor_lr);
    put("policy.critic_lr", policy.critic_lr);
    put("policy.target_interval", static_cast<float>(policy.target_interval));
    put("policy.std_floor", policy.std_floor);
    put("policy.imag_starts", static_cast<float>(policy.imag_starts));
    put("disc.hidden", static_cast<float>(disc.hidden));
    put("disc.lr", disc.lr);
    put("disc.logit_clamp", disc.logit_clamp);
    put("lagrange.alpha", lagrange.alpha);
    put("lagrange.budget", lagrange.budget);
    put("lagrange.lambda_init", lagrange.lambda_init);
    put("lagrange.lambda_min", lagrange.lambda_min);
    put("lagrange.lambda_max", lagrange.lambda_max);
    put("lagrange.window", static_cast<float>(lagrange.window));
    put("lagrange.paper_sign", lagrange.paper_sign ? 1.f : 0.f);
    put("planner.horizon", static_cast<float>(planner_horizon));
    put("planner.budget_scale", planner_budget_scale);
    put("train.seq_len", static_cast<float>(seq_len));
    put("train.batch", static_cast<float>(batch));
    put("train.prefill", static_cast<float>(prefill));
    put("train.train_every", static_cast<float>(train_every));
    put("train.buffer_capacity", static_cast<float>(buffer_capacity));
    put("train.explore_noise", explore_noise);
    put("train.checkpoint_every", static_cast<float>(checkpoint_every));
    put("train.metrics_every", static_cast<float>(metrics_every));
    put("adam.beta1", adam_beta1);
    put("adam.beta2", adam_beta2);
    put("adam.eps", adam_eps);
    put("adam.clip", grad_clip);
    return r;
}

TrainConfig TrainConfig::from_records(const Records& records) {
    TrainConfig cfg;
    auto get = [&](const std::string& k) -> float {
        for (const auto& [name, t] : records)
            if (name == "config." + k) return t.item();
        throw Error("checkpoint: missing config." + k);
    };
    cfg.seed = static_cast<uint64_t>(get("seed"));
    cfg.obs_mode = get("obs_mode") > 0.5f ? "image" : "vector";
    cfg.total_steps = static_cast<int64_t>(get("total_steps"));
    cfg.env.dt = get("env.dt");
    cfg.env.drag = get("env.drag");
    cfg.env.a_max = get("env.a_max");
    cfg.env.v_max = get("env.v_max");
    cfg.env.ring_radius = get("env.ring_radius");
    cfg.env.x_lim = get("env.x_lim");
    cfg.env.arena = get("env.arena");
    cfg.env.episode_length = static_cast<int>(get("env.episode_length"));
    cfg.wm.deter = static_cast<int>(get("wm.deter"));
    cfg.wm.stoch = static_cast<int>(get("wm.stoch"));
    cfg.wm.hidden = static_cast<int>(get("wm.hidden"));
    cfg.wm.embed = static_cast<int>(get("wm.embed"));
    cfg.wm_lr = get("wm.lr");
    cfg.wm.alpha_r = get("wm.alpha_r");
    cfg.wm.alpha_c = get("wm.alpha_c");
    cfg.wm.beta_kl = get("wm.beta_kl");
    cfg.wm.free_nats = get("wm.free_nats");
    cfg.wm.kl_balance = get("wm.kl_balance");
    cfg.wm.std_floor = get("wm.std_floor");
    cfg.wm.gamma = get("gamma");
    cfg.policy.gamma = get("gamma");
    cfg.policy.horizon = static_cast<int>(get("policy.horizon"));
    cfg.policy.lambda = get("policy.lambda");
    cfg.policy.entropy_eta = get("policy.entropy_eta");
    cfg.policy.actor_lr = get("policy.actor_lr");
    cfg.policy.critic_lr = get("policy.critic_lr");
    cfg.policy.target_interval = static_cast<int>(get("policy.target_interval"));
    cfg.policy.std_floor = get("policy.std_floor");
    cfg.policy.imag_starts = static_cast<int>(get("policy.imag_starts"));
    cfg.disc.hidden = static_cast<int>(get("disc.hidden"));
    cfg.disc.lr = get("disc.lr");
    cfg.disc.logit_clamp = get("disc.logit_clamp");
    cfg.lagrange.alpha = get("lagrange.alpha");
    cfg.lagrange.budget = get("lagrange.budget");
    cfg.lagrange.lambda_init = get("lagrange.lambda_init");
    cfg.lagrange.lambda_min = get("lagrange.lambda_min");
    cfg.lagrange.lambda_max = get("lagrange.lambda_max");
    cfg.lagrange.window = static_cast<int>(get("lagrange.window"));
    cfg.lagrange.paper_sign = get("lagrange.paper_sign") > 0.5f;
    cfg.planner_horizon = static_cast<int>(get("planner.horizon"));
    cfg.planner_budget_scale = get("planner.budget_scale");
    cfg.seq_len = static_cast<int>(get("train.seq_len"));
    cfg.batch = static_cast<int>(get("train.batch"));
    cfg.prefill = static_cast<int64_t>(get("train.prefill"));
    cfg.train_every = static_cast<int>(get("train.train_every"));
    cfg.buffer_capacity = static_cast<int64_t>(get("train.buffer_capacity"));
    cfg.explore_noise = get("train.explore_noise");
    cfg.checkpoint_every = static_cast<int64_t>(get("train.checkpoint_every"));
    cfg.metrics_every = static_cast<int>(get("train.metrics_every"));
    cfg.adam_beta1 = get("adam.beta1");
    cfg.adam_beta2 = get("adam.beta2");
    cfg.adam_eps = get("adam.eps");
    cfg.grad_clip = get("adam.clip");
    cfg.finalize();
    return cfg;
}

}  // namespace nmdr
