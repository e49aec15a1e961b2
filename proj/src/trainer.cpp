#include "nmdr/trainer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "nmdr/discriminator.hpp"
#include "nmdr/optimizer.hpp"

namespace nmdr {

namespace {

// Exact u64/f64 storage inside f32 records: four 16-bit chunks per word.
void pack_u64(std::vector<float>& out, uint64_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<float>((v >> (16 * i)) & 0xFFFFu));
}
uint64_t unpack_u64(const float* p) {
    uint64_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<uint64_t>(static_cast<uint16_t>(p[i])) << (16 * i);
    return v;
}
void pack_f64(std::vector<float>& out, double v) { pack_u64(out, std::bit_cast<uint64_t>(v)); }
double unpack_f64(const float* p) { return std::bit_cast<double>(unpack_u64(p)); }

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

const Tensor* find_record(const Records& recs, const std::string& name) {
    for (const auto& [n, t] : recs)
        if (n == name) return &t;
    return nullptr;
}

const Tensor& need_record(const Records& recs, const std::string& name) {
    const Tensor* t = find_record(recs, name);
    check(t != nullptr, "checkpoint: missing record " + name);
    return *t;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg),
      env_(cfg.env),
      wm_(cfg.wm, mix_seed(cfg.seed, 1)),
      lagrange_(cfg.lagrange),
      buffer_(cfg.buffer_capacity, cfg.env.obs_dim(), cfg.policy.action_dim),
      rng_(mix_seed(cfg.seed, 0)) {
    init_modules();
    planner_budget_ = planner_budget(cfg_.lagrange.budget, cfg_.planner_horizon,
                                     cfg_.env.episode_length, cfg_.planner_budget_scale);
    std::filesystem::create_directories(cfg_.output_dir);
    metrics_.open(metrics_path());
    start_time_ = std::chrono::steady_clock::now();
}

void Trainer::init_modules() {
    const int feat = cfg_.wm.feat_dim();
    Rng rng(mix_seed(cfg_.seed, 2));
    init_actor_params(actor_c_, feat, cfg_.policy, rng);
    init_actor_params(actor_s_, feat, cfg_.policy, rng);
    init_critic_params(critic_r_, feat, cfg_.policy, rng);
    init_critic_params(critic_c_, feat, cfg_.policy, rng);
    init_disc_params(disc_, feat, cfg_.policy.action_dim, cfg_.disc, rng);
    critic_r_target_ = critic_r_.clone();
    critic_c_target_ = critic_c_.clone();
}

double Trainer::wallclock() const {
    return wallclock_offset_ +
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time_)
               .count();
}

void Trainer::run() { run_until(cfg_.total_steps); }

void Trainer::run_until(int64_t target_env_steps) {
    check(target_env_steps <= cfg_.total_steps, "run_until: beyond total_steps");
    while (env_step_ < target_env_steps) {
        collect_step();
        if (env_step_ >= cfg_.prefill && env_step_ % cfg_.train_every == 0 &&
            buffer_.can_sample(cfg_.seq_len)) {
            train_step();
        }
        if (cfg_.checkpoint_every > 0 && env_step_ % cfg_.checkpoint_every == 0) {
            save_checkpoint(cfg_.output_dir + "/ckpt_" + std::to_string(env_step_) + ".nmdr");
        }
    }
}

void Trainer::start_episode() {
    auto [state, obs] = env_.reset(mix_seed(cfg_.seed, 0x1000 + static_cast<uint64_t>(episode_idx_)));
    env_state_ = state;
    cur_obs_ = obs.data;
    stream_ = wm_.initial_state(1);
    prev_action_ = Tensor::zeros({1, cfg_.policy.action_dim});
    partial_ = Episode{};
    ep_return_ = ep_cost_ = 0.0;
    ep_len_ = ep_safe_ = 0;
    episode_live_ = true;
}

void Trainer::collect_step() {
    if (!episode_live_) start_episode();

    // Posterior update from the current observation, then act from it.
    Tensor obs_row = cur_obs_.reshaped({1, env_.config().obs_dim()});
    stream_ = wm_.observe_step(stream_, prev_action_, obs_row, rng_).first;

    Tensor action;
    PlanDiagnostics diag;
    if (grad_step_ == 0) {
        // Warmup: the cost head is noise until training starts, so the
        // planner stays out of the loop; exploration noise during prefill.
        action = act(actor_c_, stream_, ActMode::kSample, cfg_.policy, rng_).clone();
        if (env_step_ < cfg_.prefill) {
            for (int64_t i = 0; i < action.size(); ++i)
                action.data()[i] += cfg_.explore_noise * rng_.normal_f();
        }
        for (int64_t i = 0; i < action.size(); ++i) {
            float& a = action.data()[i];
            a = a < -1.f ? -1.f : (a > 1.f ? 1.f : a);
        }
    } else {
        LatentPlanner model(wm_, actor_c_, actor_s_, cfg_.policy, stream_, ActMode::kSample);
        auto [a, d] = plan_action(model, cfg_.planner_horizon, planner_budget_, rng_);
        action = a;
        diag = d;
    }

    std::array<float, 2> a2 = {action.at(0), action.at(1)};
    auto [next_state, res] = env_.step(env_state_, a2);

    // The multiplier is driven by real observed costs, never predictions.
    lagrange_.record_cost(res.cost);

    const float* obs_p = cur_obs_.data();
    partial_.obs.insert(partial_.obs.end(), obs_p, obs_p + cur_obs_.size());
    partial_.actions.push_back(a2[0]);
    partial_.actions.push_back(a2[1]);
    partial_.rewards.push_back(res.reward);
    partial_.costs.push_back(res.cost);
    partial_.terminals.push_back(res.terminal ? 1.f : 0.f);

    ep_return_ += res.reward;
    ep_cost_ += res.cost;
    ep_len_ += 1;
    ep_safe_ += diag.chose_safe ? 1 : 0;

    env_state_ = next_state;
    cur_obs_ = res.observation.data;
    {
        Tensor pa = Tensor::zeros({1, cfg_.policy.action_dim});
        pa.data()[0] = a2[0];
        pa.data()[1] = a2[1];
        prev_action_ = pa;
    }
    ++env_step_;

    if (res.terminal) flush_episode();
}

void Trainer::flush_episode() {
    buffer_.add_episode(partial_);
    last_ep_return_ = ep_return_;
    last_ep_cost_ = ep_cost_;
    last_ep_safe_rate_ = ep_len_ > 0 ? static_cast<double>(ep_safe_) / ep_len_ : 0.0;

    MetricsRow row = base_row();
    row.episode_return = ep_return_;
    row.episode_cost = ep_cost_;
    row.chose_safe_rate = last_ep_safe_rate_;
    metrics_.append(row);

    ++episode_idx_;
    episode_live_ = false;
    partial_ = Episode{};
}

MetricsRow Trainer::base_row() const {
    MetricsRow row;
    row.env_step = env_step_;
    row.episode_return = last_ep_return_;
    row.episode_cost = last_ep_cost_;
    row.chose_safe_rate = last_ep_safe_rate_;
    row.lambda_p = lagrange_.lambda();
    row.c_k = lagrange_.window_empty() ? 0.0 : lagrange_.mean_cost();
    const LastLosses& l = loss_count_ > 0 ? loss_acc_ : last_losses_;
    const double n = loss_count_ > 0 ? static_cast<double>(loss_count_) : 1.0;
    row.loss_recon = l.recon / n;
    row.loss_reward = l.reward / n;
    row.loss_cost = l.cost / n;
    row.loss_kl = l.kl / n;
    row.loss_actor_control = l.actor_c / n;
    row.loss_actor_safe = l.actor_s / n;
    row.loss_critic_reward = l.critic_r / n;
    row.loss_critic_cost = l.critic_c / n;
    row.loss_disc = l.disc / n;
    row.wallclock_s = wallclock();
    return row;
}

void Trainer::periodic_train_row() {
    MetricsRow row = base_row();
    metrics_.append(row);
    if (loss_count_ > 0) {
        const double n = static_cast<double>(loss_count_);
        last_losses_ = LastLosses{loss_acc_.recon / n,    loss_acc_.reward / n,
                                  loss_acc_.cost / n,     loss_acc_.kl / n,
                                  loss_acc_.actor_c / n,  loss_acc_.actor_s / n,
                                  loss_acc_.critic_r / n, loss_acc_.critic_c / n,
                                  loss_acc_.disc / n};
    }
    loss_acc_ = LastLosses{};
    loss_count_ = 0;
}

SequenceBatch Trainer::sample_sequences(int batch, int seq_len) {
    return buffer_.sample(batch, seq_len, rng_);
}

LatentState Trainer::gather_starts(const std::vector<LatentState>& posts) {
    const int T = static_cast<int>(posts.size());
    const int B = posts[0].batch();
    const int total = T * B;
    const int S = std::min(cfg_.policy.imag_starts, total);

    // Partial Fisher-Yates for S distinct (t, b) indices.
    std::vector<int> idx(static_cast<size_t>(total));
    for (int i = 0; i < total; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = 0; i < S; ++i) {
        const int j = i + static_cast<int>(rng_.below(static_cast<uint64_t>(total - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }

    const int deter = cfg_.wm.deter, stoch = cfg_.wm.stoch;
    LatentState out;
    out.h = Tensor::zeros({S, deter});
    out.z = Tensor::zeros({S, stoch});
    out.z_mean = Tensor::zeros({S, stoch});
    out.z_std = Tensor::full({S, stoch}, cfg_.wm.std_floor);
    for (int i = 0; i < S; ++i) {
        const int t = idx[static_cast<size_t>(i)] / B;
        const int b = idx[static_cast<size_t>(i)] % B;
        const LatentState& src = posts[static_cast<size_t>(t)];
        std::memcpy(out.h.data() + static_cast<size_t>(i) * deter,
                    src.h.data() + static_cast<size_t>(b) * deter, sizeof(float) * deter);
        std::memcpy(out.z.data() + static_cast<size_t>(i) * stoch,
                    src.z.data() + static_cast<size_t>(b) * stoch, sizeof(float) * stoch);
        std::memcpy(out.z_mean.data() + static_cast<size_t>(i) * stoch,
                    src.z_mean.data() + static_cast<size_t>(b) * stoch, sizeof(float) * stoch);
        std::memcpy(out.z_std.data() + static_cast<size_t>(i) * stoch,
                    src.z_std.data() + static_cast<size_t>(b) * stoch, sizeof(float) * stoch);
    }
    return out;
}

void Trainer::update_actor_and_critic(bool safe_actor, const LatentState& starts) {
    const char* phase = safe_actor ? "safe_actor" : "control_actor";
    ParamSet& actor = safe_actor ? actor_s_ : actor_c_;
    ParamSet& critic = safe_actor ? critic_c_ : critic_r_;
    const int H = cfg_.policy.horizon;
    const int S = starts.batch();
    const Betas betas{cfg_.adam_beta1, cfg_.adam_beta2};

    Tape tape;
    ImaginedTrajectory traj = rollout(tape, wm_, actor, /*actor_frozen=*/false,
                                      critic_r_target_, critic_c_target_, starts, H,
                                      cfg_.policy, rng_);
    std::vector<Var> targets =
        safe_actor ? lambda_targets(traj.costs, traj.discounts, traj.cost_values,
                                    cfg_.policy.lambda)
                   : lambda_targets(traj.rewards, traj.discounts, traj.reward_values,
                                    cfg_.policy.lambda);
    Var loss;
    if (safe_actor) {
        std::vector<Var> feats_head(traj.feats.begin(), traj.feats.begin() + H);
        std::vector<Var> clone = clone_signal(tape, disc_, feats_head, traj.actions, cfg_.disc);
        loss = safe_actor_loss(traj, targets, lagrange_.lambda(), clone,
                               cfg_.policy.entropy_eta);
    } else {
        loss = control_actor_loss(traj, targets, cfg_.policy.entropy_eta);
    }
    check(loss.val().all_finite(), std::string(phase) + ": non-finite actor loss");
    tape.backward(loss);
    GradMap grads = tape.param_grads();
    clip_global_norm(grads, cfg_.grad_clip);
    opt_step(actor, grads, cfg_.policy.actor_lr, betas, cfg_.adam_eps);

    // Critic regression to the detached lambda targets.
    const int feat_dim = cfg_.wm.feat_dim();
    Tensor feats_v = Tensor::zeros({H * S, feat_dim});
    Tensor targets_v = Tensor::zeros({H * S});
    for (int t = 0; t < H; ++t) {
        const Tensor& f = traj.feats[static_cast<size_t>(t)].val();
        std::memcpy(feats_v.data() + static_cast<size_t>(t) * S * feat_dim, f.data(),
                    sizeof(float) * static_cast<size_t>(S) * feat_dim);
        const Tensor& tv = targets[static_cast<size_t>(t)].val();
        std::memcpy(targets_v.data() + static_cast<size_t>(t) * S, tv.data(),
                    sizeof(float) * static_cast<size_t>(S));
    }
    Tape ctape;
    Var closs = critic_loss(ctape, critic, feats_v, targets_v, cfg_.policy);
    check(closs.val().all_finite(), std::string(phase) + ": non-finite critic loss");
    ctape.backward(closs);
    GradMap cgrads = ctape.param_grads();
    clip_global_norm(cgrads, cfg_.grad_clip);
    opt_step(critic, cgrads, cfg_.policy.critic_lr, betas, cfg_.adam_eps);

    if (safe_actor) {
        loss_acc_.actor_s += loss.val().item();
        loss_acc_.critic_c += closs.val().item();
        last_losses_.actor_s = loss.val().item();
        last_losses_.critic_c = closs.val().item();
    } else {
        loss_acc_.actor_c += loss.val().item();
        loss_acc_.critic_r += closs.val().item();
        last_losses_.actor_c = loss.val().item();
        last_losses_.critic_r = closs.val().item();
    }
}

void Trainer::update_discriminator(const LatentState& starts) {
    const int S = starts.batch();
    const int feat_dim = cfg_.wm.feat_dim();
    Tensor feats = Tensor::zeros({S, feat_dim});
    for (int i = 0; i < S; ++i) {
        std::memcpy(feats.data() + static_cast<size_t>(i) * feat_dim,
                    starts.h.data() + static_cast<size_t>(i) * cfg_.wm.deter,
                    sizeof(float) * static_cast<size_t>(cfg_.wm.deter));
        std::memcpy(feats.data() + static_cast<size_t>(i) * feat_dim + cfg_.wm.deter,
                    starts.z.data() + static_cast<size_t>(i) * cfg_.wm.stoch,
                    sizeof(float) * static_cast<size_t>(cfg_.wm.stoch));
    }

    // Paired actions from shared start states, detached from both policies.
    Tensor a_ctrl, a_safe;
    {
        Tape tape;
        Var f = tape.constant(feats);
        TruncNormal pc = actor_dist(tape, actor_c_, f, cfg_.policy, /*freeze=*/true);
        a_ctrl = trunc_normal_sample(pc, rng_).val();
        TruncNormal ps = actor_dist(tape, actor_s_, f, cfg_.policy, /*freeze=*/true);
        a_safe = trunc_normal_sample(ps, rng_).val();
    }

    Tape tape;
    Var loss = disc_train_loss(tape, disc_, feats, a_ctrl, a_safe, cfg_.disc);
    check(loss.val().all_finite(), "discriminator: non-finite loss");
    tape.backward(loss);
    GradMap grads = tape.param_grads();
    clip_global_norm(grads, cfg_.grad_clip);
    opt_step(disc_, grads, cfg_.disc.lr, Betas{cfg_.adam_beta1, cfg_.adam_beta2},
             cfg_.adam_eps);
    loss_acc_.disc += loss.val().item();
    last_losses_.disc = loss.val().item();
}

void Trainer::train_step() {
    // (1) world model
    SequenceBatch batch = sample_sequences(cfg_.batch, cfg_.seq_len);
    Tape wtape;
    WorldLossResult wl;
    try {
        wl = wm_.world_loss(wtape, batch, rng_);
        wtape.backward(wl.total);
    } catch (const Error& e) {
        throw Error(std::string("world_model: ") + e.what());
    }
    GradMap wgrads = wtape.param_grads();
    clip_global_norm(wgrads, cfg_.grad_clip);
    opt_step(wm_.params(), wgrads, cfg_.wm_lr, Betas{cfg_.adam_beta1, cfg_.adam_beta2},
             cfg_.adam_eps);
    loss_acc_.recon += wl.breakdown.recon;
    loss_acc_.reward += wl.breakdown.reward;
    loss_acc_.cost += wl.breakdown.cost;
    loss_acc_.kl += wl.breakdown.kl;
    last_losses_.recon = wl.breakdown.recon;
    last_losses_.reward = wl.breakdown.reward;
    last_losses_.cost = wl.breakdown.cost;
    last_losses_.kl = wl.breakdown.kl;

    // (2) control actor + reward critic; (3) safe actor + cost critic;
    // (4) discriminator; (5) dual multiplier. The world model is frozen
    // during policy phases.
    LatentState starts = gather_starts(wl.posteriors);
    try {
        update_actor_and_critic(/*safe_actor=*/false, starts);
        update_actor_and_critic(/*safe_actor=*/true, starts);
        update_discriminator(starts);
    } catch (const Error& e) {
        throw Error(std::string("policy: ") + e.what());
    }

    if (!lagrange_.window_empty()) lagrange_.update_multiplier();

    ++grad_step_;
    ++loss_count_;
    if (grad_step_ % cfg_.policy.target_interval == 0) {
        critic_r_target_.copy_values_from(critic_r_);
        critic_c_target_.copy_values_from(critic_c_);
    }
    if (grad_step_ % cfg_.metrics_every == 0) periodic_train_row();
}

Trainer::EvalSummary Trainer::evaluate(int episodes, uint64_t seed_base, bool ablate_planner,
                                       const std::string& traj_csv) {
    EvalSummary out;
    out.episodes = episodes;
    CircleEnv env(cfg_.env);
    std::unique_ptr<TrajectoryCsv> csv;
    if (!traj_csv.empty()) csv = std::make_unique<TrajectoryCsv>(traj_csv, true);

    double total_return = 0.0, total_cost = 0.0;
    int64_t safe_choices = 0, steps = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(mix_seed(seed_base, 0x2000 + static_cast<uint64_t>(ep)));
        auto [state, obs] = env.reset(mix_seed(seed_base, static_cast<uint64_t>(ep)));
        LatentState stream = wm_.initial_state(1);
        Tensor prev_action = Tensor::zeros({1, cfg_.policy.action_dim});
        Tensor cur = obs.data;
        for (int t = 0; t < cfg_.env.episode_length; ++t) {
            Tensor obs_row = cur.reshaped({1, env.config().obs_dim()});
            stream = wm_.observe_step(stream, prev_action, obs_row, rng).first;
            Tensor action;
            PlanDiagnostics diag;
            if (ablate_planner) {
                action = act(actor_c_, stream, ActMode::kMean, cfg_.policy, rng);
            } else {
                LatentPlanner model(wm_, actor_c_, actor_s_, cfg_.policy, stream,
                                    ActMode::kMean);
                auto [a, d] = plan_action(model, cfg_.planner_horizon, planner_budget_, rng);
                action = a;
                diag = d;
            }
            std::array<float, 2> a2 = {action.at(0), action.at(1)};
            auto [next_state, res] = env.step(state, a2);
            if (csv)
                csv->append(t, next_state, a2, res.reward, res.cost, diag.c_obs, diag.c_sum,
                            diag.chose_safe);
            total_return += res.reward;
            total_cost += res.cost;
            safe_choices += diag.chose_safe ? 1 : 0;
            ++steps;
            state = next_state;
            cur = res.observation.data;
            Tensor pa = Tensor::zeros({1, cfg_.policy.action_dim});
            pa.data()[0] = a2[0];
            pa.data()[1] = a2[1];
            prev_action = pa;
        }
    }
    out.mean_return = total_return / episodes;
    out.mean_cost = total_cost / episodes;
    out.chose_safe_rate = steps > 0 ? static_cast<double>(safe_choices) / steps : 0.0;
    out.violation = out.mean_cost > cfg_.lagrange.budget;
    return out;
}

std::vector<PlanDiagnostics> Trainer::plan_debug(int steps, uint64_t seed) {
    std::vector<PlanDiagnostics> out;
    CircleEnv env(cfg_.env);
    Rng rng(mix_seed(seed, 77));
    auto [state, obs] = env.reset(seed);
    LatentState stream = wm_.initial_state(1);
    Tensor prev_action = Tensor::zeros({1, cfg_.policy.action_dim});
    Tensor cur = obs.data;
    for (int t = 0; t < steps; ++t) {
        Tensor obs_row = cur.reshaped({1, env.config().obs_dim()});
        stream = wm_.observe_step(stream, prev_action, obs_row, rng).first;
        LatentPlanner model(wm_, actor_c_, actor_s_, cfg_.policy, stream, ActMode::kMean);
        auto [a, d] = plan_action(model, cfg_.planner_horizon, planner_budget_, rng);
        out.push_back(d);
        std::array<float, 2> a2 = {a.at(0), a.at(1)};
        auto [next_state, res] = env.step(state, a2);
        state = next_state;
        cur = res.observation.data;
        Tensor pa = Tensor::zeros({1, cfg_.policy.action_dim});
        pa.data()[0] = a2[0];
        pa.data()[1] = a2[1];
        prev_action = pa;
    }
    return out;
}

void Trainer::save_checkpoint(const std::string& path) {
    Records recs = cfg_.to_records();
    auto append = [&](Records more) {
        for (auto& r : more) recs.push_back(std::move(r));
    };
    append(wm_.params().to_records("wm."));
    append(actor_c_.to_records("actor_c."));
    append(actor_s_.to_records("actor_s."));
    append(critic_r_.to_records("critic_r."));
    append(critic_c_.to_records("critic_c."));
    append(critic_r_target_.to_records("critic_r_target."));
    append(critic_c_target_.to_records("critic_c_target."));
    append(disc_.to_records("disc."));
    append(buffer_.to_records("buffer."));

    auto put = [&](const std::string& name, std::vector<float> vals) {
        const int n = static_cast<int>(vals.size());
        recs.emplace_back(name, Tensor({n}, std::move(vals)));
    };
    put("trainer.counters",
        {static_cast<float>(env_step_), static_cast<float>(grad_step_),
         static_cast<float>(episode_idx_), episode_live_ ? 1.f : 0.f,
         static_cast<float>(ep_len_), static_cast<float>(ep_safe_),
         static_cast<float>(loss_count_)});
    {
        std::vector<float> rs;
        const Rng::State st = rng_.save();
        for (uint64_t w : st.s) pack_u64(rs, w);
        rs.push_back(st.have_spare ? 1.f : 0.f);
        pack_f64(rs, st.spare);
        put("trainer.rng", std::move(rs));
    }
    put("trainer.env_state", {env_state_.x, env_state_.y, env_state_.vx, env_state_.vy,
                              static_cast<float>(env_state_.step_index)});
    recs.emplace_back("trainer.cur_obs", cur_obs_);
    recs.emplace_back("trainer.prev_action", prev_action_);
    recs.emplace_back("trainer.stream_h", stream_.h);
    recs.emplace_back("trainer.stream_z", stream_.z);
    recs.emplace_back("trainer.stream_zm", stream_.z_mean);
    recs.emplace_back("trainer.stream_zs", stream_.z_std);
    {
        std::vector<float> acc;
        pack_f64(acc, ep_return_);
        pack_f64(acc, ep_cost_);
        pack_f64(acc, last_ep_return_);
        pack_f64(acc, last_ep_cost_);
        pack_f64(acc, last_ep_safe_rate_);
        for (double v : {loss_acc_.recon, loss_acc_.reward, loss_acc_.cost, loss_acc_.kl,
                         loss_acc_.actor_c, loss_acc_.actor_s, loss_acc_.critic_r,
                         loss_acc_.critic_c, loss_acc_.disc})
            pack_f64(acc, v);
        for (double v : {last_losses_.recon, last_losses_.reward, last_losses_.cost,
                         last_losses_.kl, last_losses_.actor_c, last_losses_.actor_s,
                         last_losses_.critic_r, last_losses_.critic_c, last_losses_.disc})
            pack_f64(acc, v);
        pack_f64(acc, wallclock());
        put("trainer.accumulators", std::move(acc));
    }
    {
        std::vector<float> lg = {lagrange_.lambda(), static_cast<float>(lagrange_.cursor()),
                                 static_cast<float>(lagrange_.window_size())};
        put("trainer.lagrange", std::move(lg));
        const std::vector<float> window = lagrange_.window_contents();
        if (!window.empty()) put("trainer.lagrange_window", window);
    }
    const int plen = partial_.length();
    put("trainer.partial_len", {static_cast<float>(plen)});
    if (plen > 0) {
        recs.emplace_back("trainer.partial_obs", Tensor({plen, env_.config().obs_dim()},
                                                        partial_.obs));
        recs.emplace_back("trainer.partial_act",
                          Tensor({plen, cfg_.policy.action_dim}, partial_.actions));
        recs.emplace_back("trainer.partial_rew", Tensor({plen}, partial_.rewards));
        recs.emplace_back("trainer.partial_cost", Tensor({plen}, partial_.costs));
        recs.emplace_back("trainer.partial_term", Tensor({plen}, partial_.terminals));
    }

    save_records(path, recs);
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::string& path,
                                                  const std::string& output_dir) {
    Records recs = load_records(path);
    TrainConfig cfg = TrainConfig::from_records(recs);
    if (!output_dir.empty()) cfg.output_dir = output_dir;

    auto tr = std::make_unique<Trainer>(cfg);
    tr->wm_ = WorldModel(cfg.wm, ParamSet::from_records(recs, "wm."));
    tr->actor_c_ = ParamSet::from_records(recs, "actor_c.");
    tr->actor_s_ = ParamSet::from_records(recs, "actor_s.");
    tr->critic_r_ = ParamSet::from_records(recs, "critic_r.");
    tr->critic_c_ = ParamSet::from_records(recs, "critic_c.");
    tr->critic_r_target_ = ParamSet::from_records(recs, "critic_r_target.");
    tr->critic_c_target_ = ParamSet::from_records(recs, "critic_c_target.");
    tr->disc_ = ParamSet::from_records(recs, "disc.");
    tr->buffer_ = ReplayBuffer::from_records(recs, "buffer.", cfg.buffer_capacity,
                                             cfg.env.obs_dim(), cfg.policy.action_dim);

    const Tensor& counters = need_record(recs, "trainer.counters");
    tr->env_step_ = static_cast<int64_t>(counters.at(0));
    tr->grad_step_ = static_cast<int64_t>(counters.at(1));
    tr->episode_idx_ = static_cast<int64_t>(counters.at(2));
    tr->episode_live_ = counters.at(3) != 0.f;
    tr->ep_len_ = static_cast<int64_t>(counters.at(4));
    tr->ep_safe_ = static_cast<int64_t>(counters.at(5));
    tr->loss_count_ = static_cast<int64_t>(counters.at(6));

    {
        const Tensor& rs = need_record(recs, "trainer.rng");
        Rng::State st;
        for (int i = 0; i < 4; ++i) st.s[static_cast<size_t>(i)] = unpack_u64(rs.data() + 4 * i);
        st.have_spare = rs.at(16) != 0.f;
        st.spare = unpack_f64(rs.data() + 17);
        tr->rng_.restore(st);
    }
    {
        const Tensor& es = need_record(recs, "trainer.env_state");
        tr->env_state_.x = es.at(0);
        tr->env_state_.y = es.at(1);
        tr->env_state_.vx = es.at(2);
        tr->env_state_.vy = es.at(3);
        tr->env_state_.step_index = static_cast<int>(es.at(4));
    }
    tr->cur_obs_ = need_record(recs, "trainer.cur_obs").clone();
    tr->prev_action_ = need_record(recs, "trainer.prev_action").clone();
    tr->stream_.h = need_record(recs, "trainer.stream_h").clone();
    tr->stream_.z = need_record(recs, "trainer.stream_z").clone();
    tr->stream_.z_mean = need_record(recs, "trainer.stream_zm").clone();
    tr->stream_.z_std = need_record(recs, "trainer.stream_zs").clone();
    {
        const Tensor& acc = need_record(recs, "trainer.accumulators");
        const float* p = acc.data();
        int i = 0;
        auto next = [&] {
            double v = unpack_f64(p + i);
            i += 4;
            return v;
        };
        tr->ep_return_ = next();
        tr->ep_cost_ = next();
        tr->last_ep_return_ = next();
        tr->last_ep_cost_ = next();
        tr->last_ep_safe_rate_ = next();
        tr->loss_acc_.recon = next();
        tr->loss_acc_.reward = next();
        tr->loss_acc_.cost = next();
        tr->loss_acc_.kl = next();
        tr->loss_acc_.actor_c = next();
        tr->loss_acc_.actor_s = next();
        tr->loss_acc_.critic_r = next();
        tr->loss_acc_.critic_c = next();
        tr->loss_acc_.disc = next();
        tr->last_losses_.recon = next();
        tr->last_losses_.reward = next();
        tr->last_losses_.cost = next();
        tr->last_losses_.kl = next();
        tr->last_losses_.actor_c = next();
        tr->last_losses_.actor_s = next();
        tr->last_losses_.critic_r = next();
        tr->last_losses_.critic_c = next();
        tr->last_losses_.disc = next();
        tr->wallclock_offset_ = next();
        tr->start_time_ = std::chrono::steady_clock::now();
    }
    {
        const Tensor& lg = need_record(recs, "trainer.lagrange");
        std::vector<float> window;
        if (const Tensor* w = find_record(recs, "trainer.lagrange_window"))
            window.assign(w->data(), w->data() + w->size());
        check(static_cast<int>(window.size()) == static_cast<int>(lg.at(2)),
              "checkpoint: lagrange window size mismatch");
        tr->lagrange_.restore(lg.at(0), std::move(window), static_cast<int>(lg.at(1)));
    }
    const int plen = static_cast<int>(need_record(recs, "trainer.partial_len").item());
    tr->partial_ = Episode{};
    if (plen > 0) {
        const Tensor& obs = need_record(recs, "trainer.partial_obs");
        const Tensor& act = need_record(recs, "trainer.partial_act");
        const Tensor& rew = need_record(recs, "trainer.partial_rew");
        const Tensor& cost = need_record(recs, "trainer.partial_cost");
        const Tensor& term = need_record(recs, "trainer.partial_term");
        tr->partial_.obs.assign(obs.data(), obs.data() + obs.size());
        tr->partial_.actions.assign(act.data(), act.data() + act.size());
        tr->partial_.rewards.assign(rew.data(), rew.data() + rew.size());
        tr->partial_.costs.assign(cost.data(), cost.data() + cost.size());
        tr->partial_.terminals.assign(term.data(), term.data() + term.size());
    }
    return tr;
}

}  // namespace nmdr
