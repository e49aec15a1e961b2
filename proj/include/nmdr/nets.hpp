#pragma once

#include <string>
#include <vector>

#include "nmdr/param_set.hpp"
#include "nmdr/rng.hpp"
#include "nmdr/tape.hpp"

namespace nmdr {

// Truncated-normal weight init: std = 1/sqrt(fan_in), redrawn beyond 2 std.
Tensor trunc_normal_init(std::vector<int> shape, int fan_in, Rng& rng);

// Registers "<name>.w" [in,out] and "<name>.b" [out] (bias zero).
void init_dense(ParamSet& ps, const std::string& name, int in, int out, Rng& rng);

// Registers "<prefix>.w0/.b0", "<prefix>.w1/.b1", ... for the given layer
// widths, input width first: sizes = {in, h0, h1, ..., out}.
void init_mlp(ParamSet& ps, const std::string& prefix, const std::vector<int>& sizes, Rng& rng);

// x @ W + b. Rank-1 input is treated as a single row.
Var dense(Tape& tape, ParamSet& ps, const std::string& name, Var x, bool freeze = false);

// Alternating affine transform and ELU; the final layer stays affine so
// distribution heads can apply their own squashing.
Var mlp_forward(Tape& tape, ParamSet& ps, const std::string& prefix, Var input,
                const std::vector<int>& layer_sizes, bool freeze = false);

}  // namespace nmdr
