#include "nmdr/world_model.hpp"

#include <cmath>
#include <cstring>

namespace nmdr {

WorldModel::WorldModel(const WorldModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    Rng rng(init_seed);
    init_params(params_, cfg, rng);
}

WorldModel::WorldModel(const WorldModelConfig& cfg, ParamSet params)
    : cfg_(cfg), params_(std::move(params)) {}

void WorldModel::init_params(ParamSet& ps, const WorldModelConfig& cfg, Rng& rng) {
    init_mlp(ps, "embed", {cfg.obs_dim, cfg.hidden, cfg.embed}, rng);
    // Single gated recurrent cell over concat(z, a) with h.
    init_dense(ps, "gru", cfg.stoch + 2 + cfg.deter, 3 * cfg.deter, rng);
    init_mlp(ps, "prior", {cfg.deter, cfg.hidden, 2 * cfg.stoch}, rng);
    init_mlp(ps, "post", {cfg.deter + cfg.embed, cfg.hidden, 2 * cfg.stoch}, rng);
    init_mlp(ps, "dec", {cfg.feat_dim(), cfg.hidden, cfg.obs_dim}, rng);
    init_mlp(ps, "reward", {cfg.feat_dim(), cfg.hidden, 1}, rng);
    init_mlp(ps, "cost", {cfg.feat_dim(), cfg.hidden, 1}, rng);
    init_mlp(ps, "discount", {cfg.feat_dim(), cfg.hidden, 1}, rng);
}

LatentState WorldModel::initial_state(int batch) const {
    check(batch >= 1, "initial_state: batch must be >= 1");
    LatentState s;
    s.h = Tensor::zeros({batch, cfg_.deter});
    s.z = Tensor::zeros({batch, cfg_.stoch});
    s.z_mean = Tensor::zeros({batch, cfg_.stoch});
    s.z_std = Tensor::full({batch, cfg_.stoch}, cfg_.std_floor);
    return s;
}

Var WorldModel::embed_obs(Tape& tape, Var obs, bool freeze) {
    return elu(mlp_forward(tape, params_, "embed", obs, {cfg_.hidden, cfg_.embed}, freeze));
}

Var WorldModel::gru_step(Tape& tape, Var z_prev, Var action, Var h_prev, bool freeze) {
    Var x = concat_cols(z_prev, action);
    Var gates = dense(tape, params_, "gru", concat_cols(x, h_prev), freeze);
    const int d = cfg_.deter;
    Var reset = sigmoid(slice_cols(gates, 0, d));
    Var cand = tanh(reset * slice_cols(gates, d, 2 * d));
    Var update = sigmoid(slice_cols(gates, 2 * d, 3 * d) - 1.f);
    return update * cand + (affine(update, -1.f, 1.f)) * h_prev;
}

DiagGaussian WorldModel::prior_head(Tape& tape, Var h, bool freeze) {
    Var raw = mlp_forward(tape, params_, "prior", h, {cfg_.hidden, 2 * cfg_.stoch}, freeze);
    return make_diag_gaussian(raw, cfg_.std_floor);
}

DiagGaussian WorldModel::posterior_head(Tape& tape, Var h, Var embed, bool freeze) {
    Var raw = mlp_forward(tape, params_, "post", concat_cols(h, embed),
                          {cfg_.hidden, 2 * cfg_.stoch}, freeze);
    return make_diag_gaussian(raw, cfg_.std_floor);
}

Var WorldModel::decode(Tape& tape, Var feat, bool freeze) {
    return mlp_forward(tape, params_, "dec", feat, {cfg_.hidden, cfg_.obs_dim}, freeze);
}

Var WorldModel::reward_head(Tape& tape, Var feat, bool freeze) {
    Var out = mlp_forward(tape, params_, "reward", feat, {cfg_.hidden, 1}, freeze);
    return reshape(out, {out.val().rows()});
}

Var WorldModel::cost_head(Tape& tape, Var feat, bool freeze) {
    Var out = mlp_forward(tape, params_, "cost", feat, {cfg_.hidden, 1}, freeze);
    return reshape(out, {out.val().rows()});
}

Var WorldModel::discount_logit(Tape& tape, Var feat, bool freeze) {
    Var out = mlp_forward(tape, params_, "discount", feat, {cfg_.hidden, 1}, freeze);
    return reshape(out, {out.val().rows()});
}

std::pair<LatentState, DiagGaussianValue> WorldModel::observe_step(const LatentState& prev,
                                                                   const Tensor& action,
                                                                   const Tensor& obs,
                                                                   Rng& rng) {
    Tape tape;
    Var h = gru_step(tape, tape.constant(prev.z), tape.constant(action),
                     tape.constant(prev.h));
    DiagGaussian prior = prior_head(tape, h);
    Var emb = embed_obs(tape, tape.constant(obs));
    DiagGaussian post = posterior_head(tape, h, emb);
    Var z = diag_gaussian_sample(post, rng);

    LatentState out;
    out.h = h.val();
    out.z = z.val();
    out.z_mean = post.mean.val();
    out.z_std = post.std.val();
    return {out, DiagGaussianValue{prior.mean.val(), prior.std.val()}};
}

LatentState WorldModel::imagine_step(const LatentState& prev, const Tensor& action, Rng& rng) {
    Tape tape;
    Var h = gru_step(tape, tape.constant(prev.z), tape.constant(action),
                     tape.constant(prev.h));
    DiagGaussian prior = prior_head(tape, h);
    Var z = diag_gaussian_sample(prior, rng);

    LatentState out;
    out.h = h.val();
    out.z = z.val();
    out.z_mean = prior.mean.val();
    out.z_std = prior.std.val();
    return out;
}

WorldModel::Heads WorldModel::predict_heads(const LatentState& state) {
    Tape tape;
    Var feat = concat_cols(tape.constant(state.h), tape.constant(state.z));
    Heads out;
    out.obs = decode(tape, feat).val();
    out.reward = reward_head(tape, feat).val();
    out.cost = cost_head(tape, feat).val();
    out.discount_prob = sigmoid(discount_logit(tape, feat)).val();
    return out;
}

WorldLossResult WorldModel::world_loss(Tape& tape, const SequenceBatch& batch, Rng& rng,
                                       const std::vector<Tensor>* noise) {
    const int T = batch.seq_len();
    const int B = batch.batch();
    check(T >= 2, "world_loss: sequence length must be >= 2");
    {
        const float* a0 = batch.action[0].data();
        for (int64_t i = 0; i < batch.action[0].size(); ++i)
            check(a0[i] == 0.f, "world_loss: first action must be the zero placeholder");
    }

    // All observations as one [T*B, obs_dim] leaf, embedded in one pass.
    Tensor obs_all = Tensor::zeros({T * B, cfg_.obs_dim});
    for (int t = 0; t < T; ++t)
        std::memcpy(obs_all.data() + static_cast<size_t>(t) * B * cfg_.obs_dim,
                    batch.obs[static_cast<size_t>(t)].data(),
                    sizeof(float) * static_cast<size_t>(B) * cfg_.obs_dim);
    Var obs_leaf = tape.constant(obs_all);
    Var emb_all = embed_obs(tape, obs_leaf);

    Var h = tape.constant(Tensor::zeros({B, cfg_.deter}));
    Var z = tape.constant(Tensor::zeros({B, cfg_.stoch}));
    std::vector<Var> feats, post_m, post_s, prior_m, prior_s;
    feats.reserve(static_cast<size_t>(T));
    WorldLossResult result;
    result.posteriors.reserve(static_cast<size_t>(T));

    for (int t = 0; t < T; ++t) {
        Var a = tape.constant(batch.action[static_cast<size_t>(t)]);
        h = gru_step(tape, z, a, h);
        DiagGaussian prior = prior_head(tape, h);
        Var emb_t = slice_rows(emb_all, t * B, (t + 1) * B);
        DiagGaussian post = posterior_head(tape, h, emb_t);

        Tensor eps;
        if (noise) {
            eps = (*noise)[static_cast<size_t>(t)];
        } else {
            eps = Tensor::zeros({B, cfg_.stoch});
            for (int64_t i = 0; i < eps.size(); ++i) eps.data()[i] = rng.normal_f();
        }
        z = diag_gaussian_sample_with_noise(post, eps);

        post_m.push_back(post.mean);
        post_s.push_back(post.std);
        prior_m.push_back(prior.mean);
        prior_s.push_back(prior.std);
        feats.push_back(concat_cols(h, z));

        LatentState ls;
        ls.h = h.val();
        ls.z = z.val();
        ls.z_mean = post.mean.val();
        ls.z_std = post.std.val();
        result.posteriors.push_back(std::move(ls));
    }

    // KL balancing over the whole sequence at once: the sg(q)||p term trains
    // the transition head, the q||sg(p) term trains the posterior; free bits
    // floor the per-timestep batch means.
    Var kl;
    {
        DiagGaussian post_all{stack_rows(post_m), stack_rows(post_s)};
        DiagGaussian prior_all{stack_rows(prior_m), stack_rows(prior_s)};
        Var kl_dyn = diag_gaussian_kl_each(detach(post_all), prior_all);  // [T*B]
        Var kl_rep = diag_gaussian_kl_each(post_all, detach(prior_all));
        const float inv_b = 1.f / static_cast<float>(B);
        Var kl_dyn_t = row_sum(reshape(kl_dyn, {T, B})) * inv_b;  // [T]
        Var kl_rep_t = row_sum(reshape(kl_rep, {T, B})) * inv_b;
        Var kl_t = max_const(kl_dyn_t, cfg_.free_nats) * cfg_.kl_balance +
                   max_const(kl_rep_t, cfg_.free_nats) * (1.f - cfg_.kl_balance);
        kl = mean_all(kl_t);
    }

    Var feat_all = stack_rows(feats);  // [T*B, F], t-major rows
    Var dec = decode(tape, feat_all);
    Var recon = mean_all(row_sum(gaussian_nll_unit(dec, obs_leaf)));

    // Reward/cost/discount targets pair with arrivals; index 0 rows carry the
    // placeholder action and are excluded.
    Var feat_tail = slice_rows(feat_all, B, T * B);
    const int tail = (T - 1) * B;
    Tensor reward_t = Tensor::zeros({tail});
    Tensor cost_t = Tensor::zeros({tail});
    Tensor cont_t = Tensor::zeros({tail});
    for (int t = 1; t < T; ++t) {
        for (int b = 0; b < B; ++b) {
            const int row = (t - 1) * B + b;
            reward_t.data()[row] = batch.reward[static_cast<size_t>(t)].at(b);
            cost_t.data()[row] = batch.cost[static_cast<size_t>(t)].at(b);
            cont_t.data()[row] = 1.f - batch.terminal[static_cast<size_t>(t)].at(b);
        }
    }
    Var reward_nll = mean_all(gaussian_nll_unit(reward_head(tape, feat_tail), tape.constant(reward_t)));
    Var cost_nll = mean_all(gaussian_nll_unit(cost_head(tape, feat_tail), tape.constant(cost_t)));
    Var disc_nll = -bernoulli_log_prob(discount_logit(tape, feat_tail), tape.constant(cont_t));

    Var total = recon + reward_nll * cfg_.alpha_r + cost_nll * cfg_.alpha_c + disc_nll +
                kl * cfg_.beta_kl;

    result.breakdown.recon = recon.val().item();
    result.breakdown.reward = reward_nll.val().item();
    result.breakdown.cost = cost_nll.val().item();
    result.breakdown.discount = disc_nll.val().item();
    result.breakdown.kl = kl.val().item();
    result.breakdown.total = total.val().item();
    const struct {
        const char* name;
        float v;
    } terms[] = {{"recon", result.breakdown.recon},   {"reward", result.breakdown.reward},
                 {"cost", result.breakdown.cost},     {"discount", result.breakdown.discount},
                 {"kl", result.breakdown.kl},         {"total", result.breakdown.total}};
    for (const auto& term : terms)
        check(std::isfinite(term.v),
              std::string("world_loss: non-finite ") + term.name + " term");

    result.total = total;
    return result;
}

}  // namespace nmdr
