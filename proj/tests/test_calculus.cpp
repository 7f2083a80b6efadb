#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <glauber/calculus.hpp>

#include "test_util.hpp"

using namespace glauber;
using glauber::testing::random_symfn;

namespace {

// Independent oracle: sum over subsets of prod f equals prod(1 + h f(x)).
double product_oracle(const std::vector<double>& f, double h) {
    double p = 1.0;
    for (double v : f) p *= 1.0 + h * v;
    return p;
}

}  // namespace

TEST(FiniteConfig, RejectsUnsortedOrRepeatedSites) {
    EXPECT_THROW((FiniteConfig{3, 1}), DomainError);
    EXPECT_THROW((FiniteConfig{2, 2}), DomainError);
    EXPECT_EQ((FiniteConfig{1, 4, 6}).sites(), (std::vector<Site>{1, 4, 6}));
}

TEST(FiniteConfig, ColexRankMatchesEnumerationOrder) {
    for (int n = 0; n <= 4; ++n) {
        std::uint64_t expected = 0;
        for_each_combination(9, n, [&](Mask m) { EXPECT_EQ(colex_rank(m), expected++); });
        EXPECT_EQ(expected, Binomial::table()(9, n));
    }
}

TEST(SymFn, ReadsAboveTruncationAreZero) {
    SymFn f(6, 2);
    f.set({1, 3}, 2.5);
    EXPECT_EQ(f({1, 3}), 2.5);
    EXPECT_EQ(f({1, 3, 4}), 0.0);
    EXPECT_THROW(f.set({1, 2, 3}, 1.0), DomainError);
    EXPECT_EQ(f.num_entries(), 1u + 6u + 15u);
}

TEST(Calculus, LpExponent) {
    std::vector<double> f(5, 2.0);
    EXPECT_EQ(lp_exponent(f, {}), 1.0);
    EXPECT_EQ(lp_exponent(std::vector<double>(5, 0.0), {2}), 0.0);
    EXPECT_EQ(lp_exponent(f, {0, 3}), 4.0);
}

TEST(Calculus, LpIntegralOfExponentMatchesProductOracle) {
    const int M = 10;
    const double h = 0.3;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.5, 2.0);
    std::vector<double> f(M);
    for (double& v : f) v = u(rng);
    SymFn e = SymFn::from_function(M, M, [&](FiniteConfig eta) { return lp_exponent(f, eta); });
    EXPECT_NEAR(lp_integral(e, PairingWeights(h)), product_oracle(f, h), 1e-13);

    // Constant f: binomial identity (1 + h c)^M.
    SymFn c = SymFn::from_function(M, M, [](FiniteConfig eta) { return std::pow(0.7, eta.size()); });
    EXPECT_NEAR(lp_integral(c, PairingWeights(h)), std::pow(1 + h * 0.7, M), 1e-13);

    EXPECT_EQ(lp_integral(SymFn::indicator_empty(M, 3), PairingWeights(h)), 1.0);
}

TEST(Calculus, LpExponentMeanApproachesExponential) {
    // h sum f fixed at 1 while h -> 0.
    double prev_err = 1.0;
    for (int M : {4, 8, 16}) {
        const double h = 1.0 / M;
        SymFn e = SymFn::from_function(M, M, [](FiniteConfig) { return 1.0; });
        const double err = std::abs(lp_integral(e, PairingWeights(h)) - std::exp(1.0));
        EXPECT_LT(err, prev_err);
        prev_err = err;
    }
}

TEST(Calculus, KTransformExamples) {
    const int M = 8;
    SymFn one = SymFn::indicator_empty(M, 3);
    EXPECT_EQ(k_transform(one, {1, 4, 6}), 1.0);
    SymFn single(M, 2);
    for (Site x = 0; x < M; ++x) single.set({x}, 0.5 * x);
    EXPECT_DOUBLE_EQ(k_transform(single, {1, 4, 6}), 0.5 * (1 + 4 + 6));
    SymFn g = random_symfn(M, 3, 11);
    EXPECT_EQ(k_transform(g, {}), g({}));
}

TEST(Calculus, KInverseExamples) {
    const FiniteConfig window{0, 2, 3, 5};
    SubsetTable ones(window, [](FiniteConfig) { return 1.0; });
    EXPECT_EQ(k_inverse(ones, {}), 1.0);
    EXPECT_EQ(k_inverse(ones, {2, 5}), 0.0);
    SubsetTable pow2(window, [](FiniteConfig s) { return std::pow(2.0, s.size()); });
    for_each_submask(window.mask(), [&](Mask m) { EXPECT_EQ(k_inverse(pow2, FiniteConfig::from_mask(m)), 1.0); });
    EXPECT_THROW(k_inverse(ones, {1}), DomainError);
    EXPECT_THROW(SubsetTable(FiniteConfig::from_mask(full_mask(21))), DomainError);
}

TEST(Calculus, MoebiusInversionExhaustive) {
    const int M = 12;
    for (int size = 0; size <= 12; ++size) {
        const FiniteConfig window = FiniteConfig::from_mask(full_mask(size));
        SymFn g = random_symfn(M, size, 100 + size);
        SubsetTable kg(window, [&](FiniteConfig s) { return k_transform(g, s); });
        for_each_submask(window.mask(), [&](Mask m) {
            EXPECT_NEAR(k_inverse(kg, FiniteConfig::from_mask(m)), g.value(m), 1e-12);
        });
    }
}

TEST(Calculus, KPositivityReconstruction) {
    const FiniteConfig window{1, 2, 4, 7, 8};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    SubsetTable F(window, [&](FiniteConfig) { return u(rng); });
    SymFn g(10, 5);
    for_each_submask(window.mask(), [&](Mask m) { g.set(FiniteConfig::from_mask(m), k_inverse(F, FiniteConfig::from_mask(m))); });
    for_each_submask(window.mask(), [&](Mask m) {
        const double kg = k_transform(g, FiniteConfig::from_mask(m));
        EXPECT_NEAR(kg, F(FiniteConfig::from_mask(m)), 1e-12);
        EXPECT_GE(kg, 0.0);
    });
}

TEST(Calculus, MinlosConstantAndPairCount) {
    const auto one = [](FiniteConfig, FiniteConfig, FiniteConfig) { return 1.0; };
    auto s = minlos_identity_check(one, 3, 2, PairingWeights(1.0));
    EXPECT_EQ(s.lhs, s.rhs);

    const int M = 7;
    const double h = 0.4;
    const auto pair = [](FiniteConfig a, FiniteConfig b, FiniteConfig) {
        return (a.size() == 1 && b.size() == 1) ? 1.0 : 0.0;
    };
    s = minlos_identity_check(pair, M, 3, PairingWeights(h));
    // Direct double-sum oracle: ordered pairs (x, y), x != y.
    double oracle = 0.0;
    for (int x = 0; x < M; ++x)
        for (int y = 0; y < M; ++y)
            if (x != y) oracle += h * h;
    EXPECT_NEAR(s.lhs, oracle, 1e-12);
    EXPECT_NEAR(s.rhs, oracle, 1e-12);
}

TEST(Calculus, NormExamples) {
    const int M = 6;
    const double C = 2.5, h = 0.5;
    EXPECT_EQ(norm_L_C(SymFn::indicator_empty(M, 3), C, PairingWeights(h)), 1.0);
    SymFn single(M, 2);
    for (Site x = 0; x < M; ++x) single.set({x}, 1.0);
    EXPECT_DOUBLE_EQ(norm_L_C(single, C, PairingWeights(h)), M * C * h);
    SymFn g = random_symfn(M, 3, 9);
    EXPECT_NEAR(norm_L_C(g * -3.0, C, PairingWeights(h)), 3.0 * norm_L_C(g, C, PairingWeights(h)), 1e-12);
    EXPECT_THROW(norm_L_C(g, 1.0, PairingWeights(h)), DomainError);

    EXPECT_DOUBLE_EQ(norm_K_C(SymFn::power(M, 3, C), C), 1.0);
    EXPECT_EQ(norm_K_C(SymFn(M, 3), C), 0.0);
    EXPECT_DOUBLE_EQ(norm_K_C(SymFn::power(M, 3, 0.8), C), 1.0);
}

TEST(Calculus, PairingExamplesAndDualityBound) {
    const int M = 7;
    const double h = 0.5;
    SymFn k = random_symfn(M, 3, 21);
    EXPECT_EQ(pairing(SymFn::indicator_empty(M, 3), k, PairingWeights(h)), k({}));

    SymFn g = random_symfn(M, 3, 22);
    SymFn gabs = SymFn::from_function(M, 3, [&](FiniteConfig e) { return std::abs(g(e)); });
    EXPECT_NEAR(pairing(gabs, SymFn::power(M, 3, 2.0), PairingWeights(h)), norm_L_C(gabs, 2.0, PairingWeights(h)),
                1e-12);

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SymFn a = random_symfn(M, 3, 1000 + seed, 1.7);
        SymFn b = random_symfn(M, 3, 2000 + seed, 1.3);
        for (double C : {1.5, 2.0, 4.0})
            EXPECT_LE(std::abs(pairing(a, b, PairingWeights(h))),
                      norm_L_C(a, C, PairingWeights(h)) * norm_K_C(b, C) * (1 + 1e-12));
    }
}
