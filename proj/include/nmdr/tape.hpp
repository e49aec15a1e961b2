#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nmdr/tensor.hpp"

namespace nmdr {

class ParamSet;

// Recorded operations. The tape is rebuilt every forward pass (define-by-run),
// so nodes are appended in topological order by construction.
enum class Op : uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kAffine,     // c0 * x + c1
    kAddBias,    // [B,D] + [D]
    kMatmul,     // [M,K] x [K,N]
    kElu,
    kTanh,
    kSigmoid,
    kSoftplus,
    kExp,
    kLog,
    kSquare,
    kErf,
    kSumAll,
    kMeanAll,
    kRowSum,     // [B,D] -> [B]
    kConcatCols,
    kSliceCols,  // columns [i0, i1)
    kStackRows,  // variadic row concat
    kSliceRows,  // rows [i0, i1)
    kReshape,
    kStopGrad,
    kClipSt,     // clip with straight-through gradient
    kClamp,      // clip with zero gradient outside [c0, c1]
    kMaxConst,   // max(x, c0)
};

const char* op_name(Op op);

class Tape;

// Lightweight handle to a tape node.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& val() const;
};

using GradMap = std::vector<std::pair<std::string, Tensor>>;

class Tape {
public:
    struct Node {
        Op op = Op::kLeaf;
        int a = -1, b = -1;
        Tensor out;
        Tensor s0;          // saved forward value needed by backward
        int i0 = 0, i1 = 0;
        float c0 = 0.f, c1 = 0.f;
        bool no_grad = false;        // leaf excluded from gradient flow
        bool requires_grad = false;  // reachable from a trainable leaf
        int multi = -1;              // index into multi_inputs_ for kStackRows
    };

    // Differentiable input leaf (gradients are computed for it).
    Var leaf(Tensor t);
    // Data leaf: observations, targets, noise. No gradient is ever computed
    // for it, and backward work upstream of it is skipped.
    Var constant(Tensor t);
    // Trainable parameter leaf; repeated lookups on one tape return the same
    // node so gradient contributions accumulate.
    Var param(ParamSet& ps, const std::string& name);
    // Parameter recorded with gradient flow blocked (frozen module).
    Var frozen(ParamSet& ps, const std::string& name);

    int size() const { return static_cast<int>(nodes_.size()); }
    const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].out; }
    Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }

    // Reverse sweep from a scalar loss. Throws on non-scalar loss. When
    // check_finite is set, every propagated gradient is scanned and the first
    // non-finite one reported with its operation id.
    void backward(Var loss);

    // Gradient of the most recent backward w.r.t. any node (zeros if the node
    // was not reached).
    Tensor grad(Var v) const;

    // Gradients for every trainable parameter recorded on this tape, in
    // registration order. Parameters never reached get zero gradients.
    GradMap param_grads() const;

    bool check_finite = false;

    // -- op builders (free functions below call these) --
    Var make1(Op op, Var a, std::vector<int> shape);
    Var make2(Op op, Var a, Var b, std::vector<int> shape);
    Var stack_rows(const std::vector<Var>& parts);

    std::vector<std::vector<int>> multi_inputs_;

private:
    friend struct Var;
    Tensor& gslot(int id, const std::vector<int>& shape);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::map<std::pair<const void*, std::string>, int> param_cache_;
    std::vector<std::pair<std::string, int>> registered_;  // trainable (name, node)
};

inline const Tensor& Var::val() const { return tape->value(id); }

// ---- forward op builders ----
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var affine(Var a, float scale, float shift);
Var operator*(Var a, float c);
Var operator*(float c, Var a);
Var operator+(Var a, float c);
Var operator-(Var a, float c);
Var add_bias(Var x, Var bias);
Var matmul(Var a, Var b);
Var elu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
Var erf(Var x);
Var sum_all(Var x);
Var mean_all(Var x);
Var row_sum(Var x);
Var concat_cols(Var a, Var b);
Var slice_cols(Var x, int lo, int hi);
Var stack_rows(const std::vector<Var>& parts);
Var slice_rows(Var x, int lo, int hi);
Var reshape(Var x, std::vector<int> shape);
Var stop_grad(Var x);
Var clip_st(Var x, float lo, float hi);
Var clamp(Var x, float lo, float hi);
Var max_const(Var x, float c);

}  // namespace nmdr
