#include <cmath>

#include <gtest/gtest.h>

#include <glauber/oracles.hpp>
#include <glauber/operators.hpp>

#include "test_util.hpp"

using namespace glauber;
using glauber::testing::random_symfn;

namespace {

const DomainSpec kDom(9, 0.5);
const Potential kStep = Potential::step(1.0, 1);

}  // namespace

TEST(Operators, ParamValidation) {
    EXPECT_THROW((OperatorParams{0.0, 0.05, 2}).validate(3), DomainError);
    EXPECT_THROW((OperatorParams{0.3, 1.0, 2}).validate(3), DomainError);
    EXPECT_THROW((OperatorParams{0.3, 0.05, 4}).validate(3), DomainError);
    EXPECT_EQ(OperatorParams::default_xi_cap(5), 3);
    EXPECT_EQ(OperatorParams::default_xi_cap(2), 2);
    EXPECT_DOUBLE_EQ(OperatorParams::default_delta(4), 0.05);
    EXPECT_DOUBLE_EQ(OperatorParams::default_delta(20), 0.025);
}

TEST(Operators, ShapeMismatchThrows) {
    SymFn k(7, 2);
    EXPECT_THROW(apply_L_hat_star(k, {0.3, 0.05, 2}, kStep, kDom), DomainError);
}

TEST(Operators, LHatStarAtEmptySetIsZero) {
    SymFn k = random_symfn(9, 3, 1);
    EXPECT_EQ(apply_L_hat_star(k, {0.3, 0.05, 3}, kStep, kDom)({}), 0.0);
}

TEST(Operators, FreeSingletonClosedForm) {
    // phi == 0: (L_hat_star k)({x}) = -k({x}) + z k(empty).
    SymFn k = random_symfn(9, 3, 2);
    SymFn out = apply_L_hat_star(k, {0.4, 0.05, 3}, Potential::zero(), kDom);
    for (Site x = 0; x < 9; ++x) EXPECT_NEAR(out({x}), -k({x}) + 0.4 * k({}), 1e-15);
}

TEST(Operators, SingletonWithNeighbourClosedForm) {
    // (L_hat_star k)({x}) = -k({x}) + z [k(empty) + h sum_{y ~ x} (e^{-a} - 1) k({y})].
    SymFn k = random_symfn(9, 2, 3);
    const double z = 0.3, h = kDom.spacing, f = std::expm1(-1.0);
    SymFn out = apply_L_hat_star(k, {z, 0.05, 1}, kStep, kDom);
    for (Site x = 0; x < 9; ++x) {
        double inner = k({});
        if (x > 0) inner += h * f * k({x - 1});
        if (x < 8) inner += h * f * k({x + 1});
        EXPECT_NEAR(out({x}), -k({x}) + z * inner, 1e-15);
    }
}

TEST(Operators, PoissonFixedPointAtZeroPotential) {
    for (double z : {0.2, 0.5})
        for (double delta : {0.1, 0.01}) {
            SymFn k = SymFn::power(9, 4, z);
            OperatorParams p{z, delta, 3};
            EXPECT_LE(norm_K_C(apply_L_hat_star(k, p, Potential::zero(), kDom), 2.0), 1e-12);
            EXPECT_LE(norm_K_C(apply_P_delta_star(k, p, Potential::zero(), kDom) - k, 2.0), 1e-12);
        }
}

TEST(Operators, DualityExact) {
    const PairingWeights w(kDom);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SymFn G = random_symfn(9, 3, 10 + seed);
        SymFn k = random_symfn(9, 3, 40 + seed, 1.5);
        for (int cap : {0, 1, 3}) {
            OperatorParams p{0.3, 0.05, cap};
            EXPECT_NEAR(pairing(apply_L_hat(G, p, kStep, kDom), k, w),
                        pairing(G, apply_L_hat_star(k, p, kStep, kDom), w), 1e-12);
            EXPECT_NEAR(pairing(apply_P_delta(G, p, kStep, kDom), k, w),
                        pairing(G, apply_P_delta_star(k, p, kStep, kDom), w), 1e-12);
        }
    }
}

TEST(Operators, PDeltaPreservesConstantObservable) {
    // P_delta maps 1{empty} to itself: the forward step of the constant functional.
    SymFn one = SymFn::indicator_empty(9, 3);
    SymFn out = apply_P_delta(one, {0.3, 0.05, 3}, kStep, kDom);
    EXPECT_NEAR(norm_L_C(out - one, 2.0, PairingWeights(kDom)), 0.0, 1e-15);
}

TEST(Operators, StarStepPreservesNormalisation) {
    SymFn k = random_symfn(9, 3, 7);
    EXPECT_NEAR(apply_P_delta_star(k, {0.3, 0.05, 3}, kStep, kDom)({}), k({}), 1e-15);
}

TEST(Operators, GeneratorResidualShrinksLinearlyInDelta) {
    SymFn k = random_symfn(9, 3, 8, 1.0);
    double prev = generator_residual(k, {0.3, 0.1, 3}, kStep, kDom, 2.0);
    for (double delta : {0.05, 0.025, 0.0125}) {
        const double r = generator_residual(k, {0.3, delta, 3}, kStep, kDom, 2.0);
        EXPECT_LT(r / prev, 0.6);
        prev = r;
    }
}

TEST(Operators, TruncationTail) {
    EXPECT_EQ(truncation_tail_bound(2.0, 0.0, 3), 0.0);
    // (1)^{2}/2! e^{1} at C c_phi = 1, N = 1.
    EXPECT_NEAR(truncation_tail_bound(2.0, 0.5, 1), 0.5 * std::exp(1.0), 1e-15);
    EXPECT_LT(truncation_tail_bound(2.0, 0.3, 4), truncation_tail_bound(2.0, 0.3, 3));
}

TEST(Operators, DeterministicAcrossThreadCounts) {
    SymFn k = random_symfn(9, 3, 9);
    OperatorParams p{0.3, 0.05, 3};
    set_num_threads(1);
    SymFn a = apply_P_delta_star(k, p, kStep, kDom);
    set_num_threads(4);
    SymFn b = apply_P_delta_star(k, p, kStep, kDom);
    set_num_threads(0);
    EXPECT_TRUE(a == b);
}
