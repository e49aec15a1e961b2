// Microbenchmark for the matrix kernels at the shapes the trainer hits.
#include <chrono>
#include <cstdio>
#include <vector>

#include "nmdr/kernels.hpp"
#include "nmdr/rng.hpp"

using namespace nmdr;

static void bench(const char* name, int M, int K, int N, int iters) {
    Rng rng(1);
    std::vector<float> A(static_cast<size_t>(M) * K), B(static_cast<size_t>(K) * N),
        Bt(static_cast<size_t>(N) * K), C(static_cast<size_t>(M) * N);
    for (auto& x : A) x = rng.normal_f();
    for (auto& x : B) x = rng.normal_f();
    for (auto& x : Bt) x = rng.normal_f();

    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) kern::gemm_nn(C.data(), A.data(), B.data(), M, K, N, false);
    auto t1 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) kern::gemm_nt(C.data(), A.data(), Bt.data(), M, K, N, false);
    auto t2 = std::chrono::steady_clock::now();
    std::vector<float> Ct(static_cast<size_t>(K) * N);
    std::vector<float> Bm(static_cast<size_t>(M) * N);
    for (auto& x : Bm) x = rng.normal_f();
    for (int i = 0; i < iters; ++i) kern::gemm_tn(Ct.data(), A.data(), Bm.data(), M, K, N, false);
    auto t3 = std::chrono::steady_clock::now();

    double flops = 2.0 * M * K * N * iters;
    auto gf = [&](auto a, auto b) {
        double s = std::chrono::duration<double>(b - a).count();
        return flops / s * 1e-9;
    };
    std::printf("%-28s M=%4d K=%4d N=%4d   nn %7.2f GF/s   nt %7.2f GF/s   tn %7.2f GF/s\n", name,
                M, K, N, gf(t0, t1), gf(t1, t2), gf(t2, t3));
}

int main() {
    bench("wm gru (batch 16)", 16, 82, 192, 20000);
    bench("wm head (time-batched)", 800, 80, 128, 500);
    bench("rollout gru (48 starts)", 48, 82, 192, 10000);
    bench("rollout actor l1", 48, 128, 128, 10000);
    bench("head out", 800, 128, 8, 2000);
    bench("matvec (planner)", 1, 82, 192, 100000);
    return 0;
}
