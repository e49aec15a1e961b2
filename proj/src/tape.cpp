#include "nmdr/tape.hpp"

#include <cmath>
#include <cstring>

#include "nmdr/kernels.hpp"
#include "nmdr/param_set.hpp"

namespace nmdr {

const char* op_name(Op op) {
    switch (op) {
        case Op::kLeaf: return "leaf";
        case Op::kAdd: return "add";
        case Op::kSub: return "sub";
        case Op::kMul: return "mul";
        case Op::kDiv: return "div";
        case Op::kAffine: return "affine";
        case Op::kAddBias: return "add_bias";
        case Op::kMatmul: return "matmul";
        case Op::kElu: return "elu";
        case Op::kTanh: return "tanh";
        case Op::kSigmoid: return "sigmoid";
        case Op::kSoftplus: return "softplus";
        case Op::kExp: return "exp";
        case Op::kLog: return "log";
        case Op::kSquare: return "square";
        case Op::kErf: return "erf";
        case Op::kSumAll: return "sum_all";
        case Op::kMeanAll: return "mean_all";
        case Op::kRowSum: return "row_sum";
        case Op::kConcatCols: return "concat_cols";
        case Op::kSliceCols: return "slice_cols";
        case Op::kStackRows: return "stack_rows";
        case Op::kSliceRows: return "slice_rows";
        case Op::kReshape: return "reshape";
        case Op::kStopGrad: return "stop_grad";
        case Op::kClipSt: return "clip_st";
        case Op::kClamp: return "clamp";
        case Op::kMaxConst: return "max_const";
    }
    return "?";
}

namespace {

inline float sigmoid_f(float x) { return kern::fast_sigmoid(x); }

inline float softplus_f(float x) {
    // max(x,0) + log1p(exp(-|x|)), stable in both tails
    const float m = x > 0.f ? x : 0.f;
    return m + std::log1p(kern::fast_expf(-std::fabs(x)));
}

template <typename F>
Tensor map1(const Tensor& x, F&& f) {
    Tensor y = Tensor::zeros(x.shape());
    const float* px = x.data();
    float* py = y.data();
    int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i) py[i] = f(px[i]);
    return y;
}

}  // namespace

Var Tape::leaf(Tensor t) {
    Node nd;
    nd.op = Op::kLeaf;
    nd.out = std::move(t);
    nd.requires_grad = true;
    nodes_.push_back(std::move(nd));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor t) {
    Var v = leaf(std::move(t));
    nodes_[static_cast<size_t>(v.id)].requires_grad = false;
    return v;
}

Var Tape::param(ParamSet& ps, const std::string& name) {
    auto key = std::make_pair(static_cast<const void*>(&ps), name);
    auto it = param_cache_.find(key);
    if (it != param_cache_.end()) {
        check(!nodes_[static_cast<size_t>(it->second)].no_grad,
              "tape: parameter " + name + " already recorded as frozen on this tape");
        return Var{this, it->second};
    }
    Var v = leaf(ps.value(name));
    param_cache_[key] = v.id;
    registered_.emplace_back(name, v.id);
    return v;
}

Var Tape::frozen(ParamSet& ps, const std::string& name) {
    auto key = std::make_pair(static_cast<const void*>(&ps), name);
    auto it = param_cache_.find(key);
    if (it != param_cache_.end()) return Var{this, it->second};
    Var v = leaf(ps.value(name));
    nodes_[static_cast<size_t>(v.id)].no_grad = true;
    nodes_[static_cast<size_t>(v.id)].requires_grad = false;
    param_cache_[key] = v.id;
    return v;
}

Var Tape::make1(Op op, Var a, std::vector<int> shape) {
    Node nd;
    nd.op = op;
    nd.a = a.id;
    nd.out = Tensor::uninit(std::move(shape));
    nd.requires_grad =
        op != Op::kStopGrad && nodes_[static_cast<size_t>(a.id)].requires_grad;
    nodes_.push_back(std::move(nd));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make2(Op op, Var a, Var b, std::vector<int> shape) {
    Node nd;
    nd.op = op;
    nd.a = a.id;
    nd.b = b.id;
    nd.out = Tensor::uninit(std::move(shape));
    nd.requires_grad = nodes_[static_cast<size_t>(a.id)].requires_grad ||
                       nodes_[static_cast<size_t>(b.id)].requires_grad;
    nodes_.push_back(std::move(nd));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::stack_rows(const std::vector<Var>& parts) {
    check(!parts.empty(), "stack_rows: empty input");
    int cols = parts[0].val().cols();
    int rows = 0;
    for (const Var& p : parts) {
        check(p.tape == this, "stack_rows: mixed tapes");
        check(p.val().rank() == 2 && p.val().cols() == cols, "stack_rows: column mismatch");
        rows += p.val().rows();
    }
    Node nd;
    nd.op = Op::kStackRows;
    nd.out = Tensor::uninit({rows, cols});
    for (const Var& p : parts)
        nd.requires_grad =
            nd.requires_grad || nodes_[static_cast<size_t>(p.id)].requires_grad;
    nd.multi = static_cast<int>(multi_inputs_.size());
    std::vector<int> ids;
    ids.reserve(parts.size());
    float* dst = nd.out.data();
    for (const Var& p : parts) {
        ids.push_back(p.id);
        const Tensor& t = p.val();
        std::memcpy(dst, t.data(), sizeof(float) * static_cast<size_t>(t.size()));
        dst += t.size();
    }
    multi_inputs_.push_back(std::move(ids));
    nodes_.push_back(std::move(nd));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::gslot(int id, const std::vector<int>& shape) {
    Tensor& g = grads_[static_cast<size_t>(id)];
    if (!g.defined()) g = Tensor::zeros(shape);
    return g;
}

void Tape::backward(Var loss) {
    check(loss.tape == this, "backward: loss from another tape");
    check(loss.val().size() == 1, "backward: loss must be scalar, got shape " +
                                      loss.val().shape_str());
    grads_.assign(nodes_.size(), Tensor{});
    grads_[static_cast<size_t>(loss.id)] = Tensor::full(loss.val().shape(), 1.0f);

    for (int i = loss.id; i >= 0; --i) {
        Tensor& g = grads_[static_cast<size_t>(i)];
        if (!g.defined()) continue;
        const Node& nd = nodes_[static_cast<size_t>(i)];
        if (check_finite && !g.all_finite())
            throw Error("NaN gradient at op " + std::to_string(i) + " (" +
                        op_name(nd.op) + ")");
        if (nd.op == Op::kLeaf || nd.op == Op::kStopGrad || !nd.requires_grad) {
            continue;  // stop_grad and data subgraphs: no flow into inputs
        }
        const float* pg = g.data();
        const int64_t n = g.size();
        auto in_val = [&](int id) -> const Tensor& { return nodes_[static_cast<size_t>(id)].out; };
        const bool wa = nd.a >= 0 && nodes_[static_cast<size_t>(nd.a)].requires_grad;
        const bool wb = nd.b >= 0 && nodes_[static_cast<size_t>(nd.b)].requires_grad;

        switch (nd.op) {
            case Op::kAdd: {
                if (wa) kern::axpy(gslot(nd.a, in_val(nd.a).shape()).data(), 1.f, pg,
                                   static_cast<size_t>(n));
                if (wb) kern::axpy(gslot(nd.b, in_val(nd.b).shape()).data(), 1.f, pg,
                                   static_cast<size_t>(n));
                break;
            }
            case Op::kSub: {
                if (wa) kern::axpy(gslot(nd.a, in_val(nd.a).shape()).data(), 1.f, pg,
                                   static_cast<size_t>(n));
                if (wb) kern::axpy(gslot(nd.b, in_val(nd.b).shape()).data(), -1.f, pg,
                                   static_cast<size_t>(n));
                break;
            }
            case Op::kMul: {
                const float* pa = in_val(nd.a).data();
                const float* pb = in_val(nd.b).data();
                if (wa) {
                    float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                    for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] * pb[j];
                }
                if (wb) {
                    float* gb = gslot(nd.b, in_val(nd.b).shape()).data();
                    for (int64_t j = 0; j < n; ++j) gb[j] += pg[j] * pa[j];
                }
                break;
            }
            case Op::kDiv: {
                const float* pa = in_val(nd.a).data();
                const float* pb = in_val(nd.b).data();
                if (wa) {
                    float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                    for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] / pb[j];
                }
                if (wb) {
                    float* gb = gslot(nd.b, in_val(nd.b).shape()).data();
                    for (int64_t j = 0; j < n; ++j) {
                        const float inv = 1.f / pb[j];
                        gb[j] -= pg[j] * pa[j] * inv * inv;
                    }
                }
                break;
            }
            case Op::kAffine: {
                if (wa)
                    kern::axpy(gslot(nd.a, in_val(nd.a).shape()).data(), nd.c0, pg,
                               static_cast<size_t>(n));
                break;
            }
            case Op::kAddBias: {
                const Tensor& x = in_val(nd.a);
                if (wa)
                    kern::axpy(gslot(nd.a, x.shape()).data(), 1.f, pg,
                               static_cast<size_t>(n));
                if (wb)
                    kern::col_sum(gslot(nd.b, in_val(nd.b).shape()).data(), pg, x.rows(),
                                  x.cols(), true);
                break;
            }
            case Op::kMatmul: {
                const Tensor& A = in_val(nd.a);
                const Tensor& B = in_val(nd.b);
                int M = A.rows(), K = A.cols(), N = B.cols();
                if (wa) {
                    // dA += g * B^T: transpose B once, then use the fast kernel.
                    Tensor bt = Tensor::uninit({N, K});
                    const float* pb = B.data();
                    float* pbt = bt.data();
                    for (int k = 0; k < K; ++k)
                        for (int c = 0; c < N; ++c)
                            pbt[static_cast<size_t>(c) * K + k] = pb[static_cast<size_t>(k) * N + c];
                    kern::gemm_nn(gslot(nd.a, A.shape()).data(), pg, pbt, M, N, K, true);
                }
                if (wb) {
                    // dB += A^T * g
                    kern::gemm_tn(gslot(nd.b, B.shape()).data(), A.data(), pg, M, K, N,
                                  true);
                }
                break;
            }
            case Op::kElu: {
                const float* px = in_val(nd.a).data();
                const float* py = nd.out.data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j)
                    ga[j] += pg[j] * (px[j] > 0.f ? 1.f : py[j] + 1.f);
                break;
            }
            case Op::kTanh: {
                const float* py = nd.out.data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] * (1.f - py[j] * py[j]);
                break;
            }
            case Op::kSigmoid: {
                const float* py = nd.out.data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] * py[j] * (1.f - py[j]);
                break;
            }
            case Op::kSoftplus: {
                const float* ps = nd.s0.data();  // sigmoid(x) saved in forward
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] * ps[j];
                break;
            }
            case Op::kExp: {
                const float* py = nd.out.data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] * py[j];
                break;
            }
            case Op::kLog: {
                const float* px = in_val(nd.a).data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j) ga[j] += pg[j] / px[j];
                break;
            }
            case Op::kSquare: {
                const float* px = in_val(nd.a).data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j) ga[j] += 2.f * pg[j] * px[j];
                break;
            }
            case Op::kErf: {
                const float* px = in_val(nd.a).data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                constexpr float k2_sqrtpi = 1.1283791670955126f;  // 2/sqrt(pi)
                for (int64_t j = 0; j < n; ++j)
                    ga[j] += pg[j] * k2_sqrtpi * kern::fast_expf(-px[j] * px[j]);
                break;
            }
            case Op::kSumAll: {
                const float g0 = pg[0];
                Tensor& ga = gslot(nd.a, in_val(nd.a).shape());
                float* p = ga.data();
                for (int64_t j = 0; j < ga.size(); ++j) p[j] += g0;
                break;
            }
            case Op::kMeanAll: {
                Tensor& ga = gslot(nd.a, in_val(nd.a).shape());
                const float g0 = pg[0] / static_cast<float>(ga.size());
                float* p = ga.data();
                for (int64_t j = 0; j < ga.size(); ++j) p[j] += g0;
                break;
            }
            case Op::kRowSum: {
                const Tensor& x = in_val(nd.a);
                Tensor& ga = gslot(nd.a, x.shape());
                float* p = ga.data();
                int B = x.rows(), D = x.cols();
                for (int r = 0; r < B; ++r) {
                    const float gr = pg[r];
                    float* row = p + static_cast<size_t>(r) * D;
                    for (int c = 0; c < D; ++c) row[c] += gr;
                }
                break;
            }
            case Op::kConcatCols: {
                const Tensor& xa = in_val(nd.a);
                const Tensor& xb = in_val(nd.b);
                int B = xa.rows(), Da = xa.cols(), Db = xb.cols();
                float* ga = wa ? gslot(nd.a, xa.shape()).data() : nullptr;
                float* gb = wb ? gslot(nd.b, xb.shape()).data() : nullptr;
                for (int r = 0; r < B; ++r) {
                    const float* grow = pg + static_cast<size_t>(r) * (Da + Db);
                    if (ga)
                        kern::axpy(ga + static_cast<size_t>(r) * Da, 1.f, grow,
                                   static_cast<size_t>(Da));
                    if (gb)
                        kern::axpy(gb + static_cast<size_t>(r) * Db, 1.f, grow + Da,
                                   static_cast<size_t>(Db));
                }
                break;
            }
            case Op::kSliceCols: {
                const Tensor& x = in_val(nd.a);
                int B = x.rows(), D = x.cols(), W = nd.i1 - nd.i0;
                float* ga = gslot(nd.a, x.shape()).data();
                for (int r = 0; r < B; ++r)
                    kern::axpy(ga + static_cast<size_t>(r) * D + nd.i0, 1.f,
                               pg + static_cast<size_t>(r) * W, static_cast<size_t>(W));
                break;
            }
            case Op::kStackRows: {
                const auto& ids = multi_inputs_[static_cast<size_t>(nd.multi)];
                const float* src = pg;
                for (int id : ids) {
                    const Tensor& t = in_val(id);
                    if (nodes_[static_cast<size_t>(id)].requires_grad)
                        kern::axpy(gslot(id, t.shape()).data(), 1.f, src,
                                   static_cast<size_t>(t.size()));
                    src += t.size();
                }
                break;
            }
            case Op::kSliceRows: {
                const Tensor& x = in_val(nd.a);
                int D = x.cols();
                float* ga = gslot(nd.a, x.shape()).data();
                kern::axpy(ga + static_cast<size_t>(nd.i0) * D, 1.f, pg,
                           static_cast<size_t>(n));
                break;
            }
            case Op::kReshape: {
                Tensor& ga = gslot(nd.a, in_val(nd.a).shape());
                kern::axpy(ga.data(), 1.f, pg, static_cast<size_t>(n));
                break;
            }
            case Op::kClipSt: {
                Tensor& ga = gslot(nd.a, in_val(nd.a).shape());
                kern::axpy(ga.data(), 1.f, pg, static_cast<size_t>(n));
                break;
            }
            case Op::kClamp: {
                const float* px = in_val(nd.a).data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j)
                    if (px[j] >= nd.c0 && px[j] <= nd.c1) ga[j] += pg[j];
                break;
            }
            case Op::kMaxConst: {
                const float* px = in_val(nd.a).data();
                float* ga = gslot(nd.a, in_val(nd.a).shape()).data();
                for (int64_t j = 0; j < n; ++j)
                    if (px[j] > nd.c0) ga[j] += pg[j];
                break;
            }
            case Op::kLeaf:
            case Op::kStopGrad:
                break;
        }
    }
}

Tensor Tape::grad(Var v) const {
    check(v.tape == this, "grad: var from another tape");
    if (grads_.empty()) throw Error("grad: backward has not run");
    const Tensor& g = grads_[static_cast<size_t>(v.id)];
    if (!g.defined()) return Tensor::zeros(nodes_[static_cast<size_t>(v.id)].out.shape());
    return g;
}

GradMap Tape::param_grads() const {
    GradMap out;
    out.reserve(registered_.size());
    for (const auto& [name, id] : registered_) out.emplace_back(name, grad(Var{const_cast<Tape*>(this), id}));
    return out;
}

// ---------- forward builders ----------

namespace {
void check_same_shape(Var a, Var b, const char* what) {
    check(a.val().same_shape(b.val()),
          std::string(what) + ": shape mismatch " + a.val().shape_str() + " vs " +
              b.val().shape_str());
}
Var binary_ew(Op op, Var a, Var b, const char* what) {
    check(a.tape == b.tape, "op inputs from different tapes");
    check_same_shape(a, b, what);
    Var y = a.tape->make2(op, a, b, a.val().shape());
    const float* pa = a.val().data();
    const float* pb = b.val().data();
    float* py = y.tape->node(y.id).out.data();
    int64_t n = a.val().size();
    switch (op) {
        case Op::kAdd: for (int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i]; break;
        case Op::kSub: for (int64_t i = 0; i < n; ++i) py[i] = pa[i] - pb[i]; break;
        case Op::kMul: for (int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i]; break;
        case Op::kDiv: for (int64_t i = 0; i < n; ++i) py[i] = pa[i] / pb[i]; break;
        default: throw Error("binary_ew: bad op");
    }
    return y;
}
template <typename F>
Var unary_ew(Op op, Var a, F&& f) {
    Var y = a.tape->make1(op, a, a.val().shape());
    const float* pa = a.val().data();
    float* py = y.tape->node(y.id).out.data();
    int64_t n = a.val().size();
    for (int64_t i = 0; i < n; ++i) py[i] = f(pa[i]);
    return y;
}
}  // namespace

Var operator+(Var a, Var b) { return binary_ew(Op::kAdd, a, b, "add"); }
Var operator-(Var a, Var b) { return binary_ew(Op::kSub, a, b, "sub"); }
Var operator*(Var a, Var b) { return binary_ew(Op::kMul, a, b, "mul"); }
Var operator/(Var a, Var b) { return binary_ew(Op::kDiv, a, b, "div"); }

Var affine(Var a, float scale, float shift) {
    Var y = unary_ew(Op::kAffine, a, [scale, shift](float x) { return scale * x + shift; });
    y.tape->node(y.id).c0 = scale;
    y.tape->node(y.id).c1 = shift;
    return y;
}
Var operator-(Var a) { return affine(a, -1.f, 0.f); }
Var operator*(Var a, float c) { return affine(a, c, 0.f); }
Var operator*(float c, Var a) { return affine(a, c, 0.f); }
Var operator+(Var a, float c) { return affine(a, 1.f, c); }
Var operator-(Var a, float c) { return affine(a, 1.f, -c); }

Var add_bias(Var x, Var bias) {
    check(x.tape == bias.tape, "add_bias: mixed tapes");
    const Tensor xv = x.val();  // shallow copy: node creation may reallocate
    const Tensor bv = bias.val();
    check(bv.rank() == 1 && bv.cols() == xv.cols(),
          "add_bias: bias shape " + bv.shape_str() + " does not match " + xv.shape_str());
    Var y = x.tape->make2(Op::kAddBias, x, bias, xv.shape());
    const float* px = xv.data();
    const float* pb = bv.data();
    float* py = y.tape->node(y.id).out.data();
    int B = xv.rows(), D = xv.cols();
    for (int r = 0; r < B; ++r) {
        const float* xr = px + static_cast<size_t>(r) * D;
        float* yr = py + static_cast<size_t>(r) * D;
        for (int c = 0; c < D; ++c) yr[c] = xr[c] + pb[c];
    }
    return y;
}

Var matmul(Var a, Var b) {
    check(a.tape == b.tape, "matmul: mixed tapes");
    const Tensor A = a.val();  // shallow copies: node creation may reallocate
    const Tensor B = b.val();
    check(A.rank() == 2 && B.rank() == 2 && A.cols() == B.rows(),
          "matmul: incompatible shapes " + A.shape_str() + " x " + B.shape_str());
    Var y = a.tape->make2(Op::kMatmul, a, b, {A.rows(), B.cols()});
    kern::gemm_nn(y.tape->node(y.id).out.data(), A.data(), B.data(), A.rows(), A.cols(),
                  B.cols(), false);
    return y;
}

Var elu(Var x) {
    Var y = x.tape->make1(Op::kElu, x, x.val().shape());
    auto& nd = y.tape->node(y.id);
    kern::ew_elu(nd.out.data(), x.val().data(), static_cast<size_t>(nd.out.size()));
    return y;
}
Var tanh(Var x) {
    return unary_ew(Op::kTanh, x, [](float v) { return std::tanh(v); });
}
Var sigmoid(Var x) {
    Var y = x.tape->make1(Op::kSigmoid, x, x.val().shape());
    auto& nd = y.tape->node(y.id);
    kern::ew_sigmoid(nd.out.data(), x.val().data(), static_cast<size_t>(nd.out.size()));
    return y;
}
Var softplus(Var x) {
    Var y = unary_ew(Op::kSoftplus, x, [](float v) { return softplus_f(v); });
    Tensor sig = Tensor::uninit(x.val().shape());
    kern::ew_sigmoid(sig.data(), x.val().data(), static_cast<size_t>(sig.size()));
    y.tape->node(y.id).s0 = std::move(sig);
    return y;
}
Var exp(Var x) {
    Var y = x.tape->make1(Op::kExp, x, x.val().shape());
    auto& nd = y.tape->node(y.id);
    kern::ew_exp(nd.out.data(), x.val().data(), static_cast<size_t>(nd.out.size()));
    return y;
}
Var log(Var x) {
    return unary_ew(Op::kLog, x, [](float v) { return std::log(v); });
}
Var square(Var x) {
    return unary_ew(Op::kSquare, x, [](float v) { return v * v; });
}
Var erf(Var x) {
    return unary_ew(Op::kErf, x, [](float v) { return std::erf(v); });
}

Var sum_all(Var x) {
    Var y = x.tape->make1(Op::kSumAll, x, {1});
    double s = 0.0;
    const float* p = x.val().data();
    for (int64_t i = 0; i < x.val().size(); ++i) s += p[i];
    y.tape->node(y.id).out.at(0) = static_cast<float>(s);
    return y;
}

Var mean_all(Var x) {
    Var y = x.tape->make1(Op::kMeanAll, x, {1});
    double s = 0.0;
    const float* p = x.val().data();
    for (int64_t i = 0; i < x.val().size(); ++i) s += p[i];
    y.tape->node(y.id).out.at(0) = static_cast<float>(s / static_cast<double>(x.val().size()));
    return y;
}

Var row_sum(Var x) {
    const Tensor xv = x.val();
    check(xv.rank() == 2, "row_sum: rank-2 input required");
    Var y = x.tape->make1(Op::kRowSum, x, {xv.rows()});
    const float* px = xv.data();
    float* py = y.tape->node(y.id).out.data();
    for (int r = 0; r < xv.rows(); ++r) {
        double s = 0.0;
        const float* row = px + static_cast<size_t>(r) * xv.cols();
        for (int c = 0; c < xv.cols(); ++c) s += row[c];
        py[r] = static_cast<float>(s);
    }
    return y;
}

Var concat_cols(Var a, Var b) {
    check(a.tape == b.tape, "concat_cols: mixed tapes");
    const Tensor xa = a.val();
    const Tensor xb = b.val();
    check(xa.rank() == 2 && xb.rank() == 2 && xa.rows() == xb.rows(),
          "concat_cols: row mismatch " + xa.shape_str() + " vs " + xb.shape_str());
    int B = xa.rows(), Da = xa.cols(), Db = xb.cols();
    Var y = a.tape->make2(Op::kConcatCols, a, b, {B, Da + Db});
    float* py = y.tape->node(y.id).out.data();
    const float* pa = xa.data();
    const float* pb = xb.data();
    for (int r = 0; r < B; ++r) {
        std::memcpy(py + static_cast<size_t>(r) * (Da + Db), pa + static_cast<size_t>(r) * Da,
                    sizeof(float) * static_cast<size_t>(Da));
        std::memcpy(py + static_cast<size_t>(r) * (Da + Db) + Da, pb + static_cast<size_t>(r) * Db,
                    sizeof(float) * static_cast<size_t>(Db));
    }
    return y;
}

Var slice_cols(Var x, int lo, int hi) {
    const Tensor xv = x.val();
    check(xv.rank() == 2 && 0 <= lo && lo < hi && hi <= xv.cols(), "slice_cols: bad range");
    Var y = x.tape->make1(Op::kSliceCols, x, {xv.rows(), hi - lo});
    auto& nd = y.tape->node(y.id);
    nd.i0 = lo;
    nd.i1 = hi;
    const float* px = xv.data();
    float* py = nd.out.data();
    int W = hi - lo;
    for (int r = 0; r < xv.rows(); ++r)
        std::memcpy(py + static_cast<size_t>(r) * W, px + static_cast<size_t>(r) * xv.cols() + lo,
                    sizeof(float) * static_cast<size_t>(W));
    return y;
}

Var stack_rows(const std::vector<Var>& parts) { return parts[0].tape->stack_rows(parts); }

Var slice_rows(Var x, int lo, int hi) {
    const Tensor xv = x.val();
    check(xv.rank() == 2 && 0 <= lo && lo < hi && hi <= xv.rows(), "slice_rows: bad range");
    Var y = x.tape->make1(Op::kSliceRows, x, {hi - lo, xv.cols()});
    auto& nd = y.tape->node(y.id);
    nd.i0 = lo;
    nd.i1 = hi;
    std::memcpy(nd.out.data(), xv.data() + static_cast<size_t>(lo) * xv.cols(),
                sizeof(float) * static_cast<size_t>(hi - lo) * xv.cols());
    return y;
}

Var reshape(Var x, std::vector<int> shape) {
    const Tensor xv = x.val();
    Var y = x.tape->make1(Op::kReshape, x, shape);
    y.tape->node(y.id).out = xv.reshaped(std::move(shape));
    return y;
}

Var stop_grad(Var x) {
    const Tensor xv = x.val();
    Var y = x.tape->make1(Op::kStopGrad, x, xv.shape());
    y.tape->node(y.id).out = xv;  // shares storage; identity forward
    return y;
}

Var clip_st(Var x, float lo, float hi) {
    Var y = unary_ew(Op::kClipSt, x, [lo, hi](float v) { return v < lo ? lo : (v > hi ? hi : v); });
    auto& nd = y.tape->node(y.id);
    nd.c0 = lo;
    nd.c1 = hi;
    return y;
}

Var clamp(Var x, float lo, float hi) {
    Var y = unary_ew(Op::kClamp, x, [lo, hi](float v) { return v < lo ? lo : (v > hi ? hi : v); });
    auto& nd = y.tape->node(y.id);
    nd.c0 = lo;
    nd.c1 = hi;
    return y;
}

Var max_const(Var x, float c) {
    Var y = unary_ew(Op::kMaxConst, x, [c](float v) { return v > c ? v : c; });
    y.tape->node(y.id).c0 = c;
    return y;
}

}  // namespace nmdr
