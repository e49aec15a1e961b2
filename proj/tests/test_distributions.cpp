#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nmdr/distributions.hpp"
#include "nmdr/gradcheck.hpp"
#include "nmdr/rng.hpp"
#include "nmdr/tape.hpp"

using namespace nmdr;

namespace {

// f64 helpers used only as test oracles.
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Direct truncated-normal head from explicit mean/std values.
TruncNormal head_from(Tape& tape, const std::vector<float>& mean,
                      const std::vector<float>& stdv) {
    const int n = static_cast<int>(mean.size());
    Var m = tape.leaf(Tensor({1, n}, std::vector<float>(mean)));
    Var s = tape.leaf(Tensor({1, n}, std::vector<float>(stdv)));
    return TruncNormal{m, s};
}

double log_prob_at(double mean, double stdv, double a) {
    Tape tape;
    TruncNormal tn = head_from(tape, {static_cast<float>(mean)}, {static_cast<float>(stdv)});
    Var lp = trunc_normal_log_prob(tn, tape.leaf(Tensor({1, 1}, {static_cast<float>(a)})));
    return static_cast<double>(lp.val().item());
}

}  // namespace

TEST_CASE("trunc normal sample: tiny std concentrates at the mean") {
    Tape tape;
    TruncNormal tn = head_from(tape, {0.f}, {1e-4f});
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        Var a = trunc_normal_sample(tn, rng);
        CHECK(std::fabs(a.val().item()) < 1e-3f);
    }
}

TEST_CASE("trunc normal sample: support is [-1, 1] over 10k samples") {
    Tape tape;
    TruncNormal tn = head_from(tape, {0.8f, -0.9f}, {0.6f, 1.5f});
    Rng rng(11);
    for (int i = 0; i < 5000; ++i) {
        Var a = trunc_normal_sample(tn, rng);
        for (int j = 0; j < 2; ++j) {
            CHECK(a.val().at(j) >= -1.f);
            CHECK(a.val().at(j) <= 1.f);
        }
    }
}

TEST_CASE("trunc normal sample: empirical mean matches the analytic moment") {
    // Monte Carlo oracle against the closed-form truncated-normal mean.
    const double mu = 0.5, sd = 0.2;
    const double alpha = (-1.0 - mu) / sd, beta = (1.0 - mu) / sd;
    const double z = normal_cdf(beta) - normal_cdf(alpha);
    const double analytic = mu + sd * (normal_pdf(alpha) - normal_pdf(beta)) / z;

    Tape tape;
    TruncNormal tn = head_from(tape, {static_cast<float>(mu)}, {static_cast<float>(sd)});
    Rng rng(23);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        Var a = trunc_normal_sample(tn, rng);
        acc += static_cast<double>(a.val().item());
    }
    CHECK(std::fabs(acc / n - analytic) < 0.02);
}

TEST_CASE("trunc normal log prob: closed form via the standard normal cdf") {
    // Oracle: -0.5*ln(2*pi) - ln(Phi(1) - Phi(-1)); evaluated here in f64.
    const double expected =
        -0.5 * std::log(2.0 * M_PI) - std::log(normal_cdf(1) - normal_cdf(-1));
    CHECK(expected == doctest::Approx(-0.5372229).epsilon(1e-5));
    CHECK(log_prob_at(0.0, 1.0, 0.0) == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("trunc normal log prob: density integrates to one") {
    // Simpson quadrature of exp(log_prob) over [-1, 1].
    const double mu = 0.3, sd = 0.7;
    const int n = 2000;
    const double h = 2.0 / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = -1.0 + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * std::exp(log_prob_at(mu, sd, x));
    }
    acc *= h / 3.0;
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("trunc normal log prob: symmetric parameters give exact symmetry") {
    for (double a : {0.13, 0.5, 0.77, 0.999}) {
        const double lp = log_prob_at(0.0, 0.8, a);
        const double ln = log_prob_at(0.0, 0.8, -a);
        CHECK(lp == ln);  // bitwise
    }
}

TEST_CASE("trunc normal log prob rejects out-of-support actions") {
    Tape tape;
    TruncNormal tn = head_from(tape, {0.f}, {0.5f});
    CHECK_THROWS_AS(trunc_normal_log_prob(tn, tape.leaf(Tensor({1, 1}, {1.5f}))), Error);
}

TEST_CASE("trunc normal entropy decreases monotonically with std") {
    double prev = -1e9;
    for (float sd : {0.1f, 0.2f, 0.4f, 0.8f, 1.6f}) {
        Tape tape;
        TruncNormal tn = head_from(tape, {0.2f}, {sd});
        const double h = static_cast<double>(trunc_normal_entropy(tn).val().item());
        CHECK(h > prev);
        prev = h;
    }
}

TEST_CASE("trunc normal entropy has the analytic floor at the std floor") {
    // With std = std_floor = 0.1 and mean 0, entropy is this analytic value;
    // heads built through the softplus floor can never go below it.
    const double sd = 0.1;
    const double alpha = -1.0 / sd, beta = 1.0 / sd;
    const double z = normal_cdf(beta) - normal_cdf(alpha);
    const double floor_h = std::log(sd) + std::log(z) + 0.5 * std::log(2.0 * M_PI) + 0.5 +
                           (alpha * normal_pdf(alpha) - beta * normal_pdf(beta)) / (2.0 * z);
    Tape tape;
    TruncNormal tn = head_from(tape, {0.f}, {0.1f});
    CHECK(static_cast<double>(trunc_normal_entropy(tn).val().item()) ==
          doctest::Approx(floor_h).epsilon(1e-4));

    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Tensor r = Tensor::zeros({1, 4});
        for (int j = 0; j < 4; ++j) r.data()[j] = rng.normal_f();
        Tape t2;
        TruncNormal tn2 = make_trunc_normal(t2.leaf(r), 0.1f);
        CHECK(static_cast<double>(trunc_normal_entropy(tn2).val().item()) >= floor_h - 1e-4);
    }
}

TEST_CASE("diag gaussian kl: zero at equality, closed form, nonnegative") {
    {
        Tape tape;
        DiagGaussian q{tape.leaf(Tensor({1, 2}, {0.3f, -0.7f})),
                       tape.leaf(Tensor({1, 2}, {0.5f, 1.2f}))};
        DiagGaussian p{tape.leaf(Tensor({1, 2}, {0.3f, -0.7f})),
                       tape.leaf(Tensor({1, 2}, {0.5f, 1.2f}))};
        CHECK(diag_gaussian_kl(q, p).val().item() == doctest::Approx(0.0).epsilon(1e-7));
    }
    {
        Tape tape;
        DiagGaussian q{tape.leaf(Tensor({1, 1}, {1.f})), tape.leaf(Tensor({1, 1}, {1.f}))};
        DiagGaussian p{tape.leaf(Tensor({1, 1}, {0.f})), tape.leaf(Tensor({1, 1}, {1.f}))};
        CHECK(diag_gaussian_kl(q, p).val().item() == doctest::Approx(0.5).epsilon(1e-6));
    }
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        Tape tape;
        auto mk = [&] {
            Tensor m = Tensor::zeros({1, 3});
            Tensor s = Tensor::zeros({1, 3});
            for (int j = 0; j < 3; ++j) {
                m.data()[j] = rng.normal_f();
                s.data()[j] = 0.1f + std::fabs(rng.normal_f());
            }
            return DiagGaussian{tape.leaf(m), tape.leaf(s)};
        };
        DiagGaussian q = mk(), p = mk();
        CHECK(diag_gaussian_kl(q, p).val().item() >= -1e-7f);
    }
}

TEST_CASE("diag gaussian kl matches a Monte Carlo estimate") {
    const double mq = 0.4, sq = 0.8, mp = -0.3, sp = 1.3;
    Tape tape;
    DiagGaussian q{tape.leaf(Tensor({1, 1}, {static_cast<float>(mq)})),
                   tape.leaf(Tensor({1, 1}, {static_cast<float>(sq)}))};
    DiagGaussian p{tape.leaf(Tensor({1, 1}, {static_cast<float>(mp)})),
                   tape.leaf(Tensor({1, 1}, {static_cast<float>(sp)}))};
    const double kl = static_cast<double>(diag_gaussian_kl(q, p).val().item());

    Rng rng(31);
    const int n = 100000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = mq + sq * rng.normal();
        const double lq = -0.5 * std::pow((x - mq) / sq, 2) - std::log(sq);
        const double lp = -0.5 * std::pow((x - mp) / sp, 2) - std::log(sp);
        const double d = lq - lp;
        acc += d;
        acc2 += d * d;
    }
    const double mean = acc / n;
    const double se = std::sqrt((acc2 / n - mean * mean) / n);
    CHECK(std::fabs(kl - mean) < 3.0 * se + 1e-6);
}

TEST_CASE("bernoulli log prob examples and saturation") {
    {
        Tape tape;
        Var lp =
            bernoulli_log_prob(tape.leaf(Tensor({1}, {0.f})), tape.leaf(Tensor({1}, {1.f})));
        CHECK(lp.val().item() == doctest::Approx(std::log(0.5)).epsilon(1e-6));
    }
    {
        Tape tape;
        Var lp =
            bernoulli_log_prob(tape.leaf(Tensor({1}, {40.f})), tape.leaf(Tensor({1}, {1.f})));
        CHECK(std::isfinite(lp.val().item()));
        CHECK(lp.val().item() == doctest::Approx(0.0).epsilon(1e-6));
    }
    {
        Tape tape;
        Var lp =
            bernoulli_log_prob(tape.leaf(Tensor({1}, {80.f})), tape.leaf(Tensor({1}, {0.f})));
        CHECK(std::isfinite(lp.val().item()));
        CHECK(lp.val().item() == doctest::Approx(-80.0).epsilon(1e-4));
    }
    {
        Tape tape;
        CHECK_THROWS_AS(bernoulli_log_prob(tape.leaf(Tensor({1}, {0.f})),
                                           tape.leaf(Tensor({1}, {0.5f}))),
                        Error);
    }
}

TEST_CASE("bernoulli log prob matches the naive f64 formula where stable") {
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        const double logit = rng.uniform(-15.0, 15.0);
        const double target = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const double p = 1.0 / (1.0 + std::exp(-logit));
        const double naive = target * std::log(p) + (1.0 - target) * std::log(1.0 - p);
        Tape tape;
        Var lp = bernoulli_log_prob(tape.leaf(Tensor({1}, {static_cast<float>(logit)})),
                                    tape.leaf(Tensor({1}, {static_cast<float>(target)})));
        CHECK(std::fabs(static_cast<double>(lp.val().item()) - naive) <
              1e-6 * std::max(1.0, std::fabs(naive)) + 1e-6);
    }
}

TEST_CASE("sampling determinism: same seed, same sequence") {
    Tape tape;
    TruncNormal tn = head_from(tape, {0.1f, -0.4f}, {0.3f, 0.9f});
    auto draw = [&](uint64_t seed) {
        Rng rng(seed);
        std::vector<float> vals;
        for (int i = 0; i < 20; ++i) {
            Var a = trunc_normal_sample(tn, rng);
            vals.push_back(a.val().at(0));
            vals.push_back(a.val().at(1));
        }
        return vals;
    };
    CHECK(draw(99) == draw(99));
    CHECK(draw(99) != draw(100));
}

TEST_CASE("distribution gradients match finite differences") {
    auto r = gradcheck::check_distributions(20, 321);
    INFO(r.detail);
    CHECK(r.ok);
    CHECK(r.max_rel_err < 1e-3);
}
