#include "nmdr/discriminator.hpp"

#include "nmdr/nets.hpp"

namespace nmdr {

void init_disc_params(ParamSet& ps, int feat_dim, int action_dim, const DiscConfig& cfg,
                      Rng& rng) {
    init_mlp(ps, "mlp", {feat_dim + action_dim, cfg.hidden, cfg.hidden, 1}, rng);
}

Var disc_logit(Tape& tape, ParamSet& disc, Var feat_action, const DiscConfig& cfg,
               bool freeze) {
    Var out = mlp_forward(tape, disc, "mlp", feat_action, {cfg.hidden, cfg.hidden, 1}, freeze);
    return reshape(out, {out.val().rows()});
}

std::pair<Tensor, Tensor> disc_score(ParamSet& disc, const Tensor& feats,
                                     const Tensor& actions, const DiscConfig& cfg) {
    Tape tape;
    Var fa = concat_cols(tape.constant(feats), tape.constant(actions));
    Var logit = disc_logit(tape, disc, fa, cfg, /*freeze=*/true);
    Var prob = sigmoid(logit);
    Var log_prob = -softplus(-logit);
    return {prob.val(), log_prob.val()};
}

Var disc_train_loss(Tape& tape, ParamSet& disc, const Tensor& feats, const Tensor& a_control,
                    const Tensor& a_safe, const DiscConfig& cfg) {
    check(a_control.rows() == feats.rows() && a_safe.rows() == feats.rows(),
          "disc_train_loss: batch size mismatch");
    Var f = tape.constant(feats);
    Var logit_c = disc_logit(tape, disc, concat_cols(f, tape.constant(a_control)), cfg);
    Var logit_s = disc_logit(tape, disc, concat_cols(f, tape.constant(a_safe)), cfg);
    // -log D = softplus(-logit); -log(1 - D) = softplus(logit)
    return mean_all(softplus(-logit_c)) + mean_all(softplus(logit_s));
}

std::vector<Var> clone_signal(Tape& tape, ParamSet& disc, const std::vector<Var>& feats,
                              const std::vector<Var>& actions, const DiscConfig& cfg) {
    check(feats.size() == actions.size(), "clone_signal: length mismatch");
    std::vector<Var> out;
    out.reserve(actions.size());
    for (size_t t = 0; t < actions.size(); ++t) {
        Var fa = concat_cols(stop_grad(feats[t]), actions[t]);
        Var logit = clamp(disc_logit(tape, disc, fa, cfg, /*freeze=*/true), -cfg.logit_clamp,
                          cfg.logit_clamp);
        out.push_back(-softplus(-logit));  // log D
    }
    return out;
}

}  // namespace nmdr
