#include "nmdr/nets.hpp"

#include <cmath>

namespace nmdr {

Tensor trunc_normal_init(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
    float* p = t.data();
    for (int64_t i = 0; i < t.size(); ++i) {
        double z;
        do {
            z = rng.normal();
        } while (std::fabs(z) > 2.0);
        p[i] = static_cast<float>(z * std);
    }
    return t;
}

void init_dense(ParamSet& ps, const std::string& name, int in, int out, Rng& rng) {
    ps.add(name + ".w", trunc_normal_init({in, out}, in, rng));
    ps.add(name + ".b", Tensor::zeros({out}));
}

void init_mlp(ParamSet& ps, const std::string& prefix, const std::vector<int>& sizes, Rng& rng) {
    check(sizes.size() >= 2, "init_mlp: need at least input and output widths");
    for (size_t i = 0; i + 1 < sizes.size(); ++i)
        init_dense(ps, prefix + ".l" + std::to_string(i), sizes[i], sizes[i + 1], rng);
}

Var dense(Tape& tape, ParamSet& ps, const std::string& name, Var x, bool freeze) {
    Var w = freeze ? tape.frozen(ps, name + ".w") : tape.param(ps, name + ".w");
    Var b = freeze ? tape.frozen(ps, name + ".b") : tape.param(ps, name + ".b");
    if (x.val().rank() == 1) x = reshape(x, {1, x.val().cols()});
    check(x.val().cols() == w.val().rows(),
          "dense " + name + ": input width " + std::to_string(x.val().cols()) +
              " does not match weight " + w.val().shape_str());
    return add_bias(matmul(x, w), b);
}

Var mlp_forward(Tape& tape, ParamSet& ps, const std::string& prefix, Var input,
                const std::vector<int>& layer_sizes, bool freeze) {
    check(!layer_sizes.empty(), "mlp_forward: empty layer list");
    Var h = input;
    for (size_t i = 0; i < layer_sizes.size(); ++i) {
        h = dense(tape, ps, prefix + ".l" + std::to_string(i), h, freeze);
        check(h.val().cols() == layer_sizes[i],
              "mlp_forward " + prefix + ": layer " + std::to_string(i) + " width " +
                  std::to_string(h.val().cols()) + " != expected " +
                  std::to_string(layer_sizes[i]));
        if (i + 1 < layer_sizes.size()) h = elu(h);
    }
    return h;
}

}  // namespace nmdr
