#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <glauber/energy.hpp>
#include <glauber/lattice.hpp>

using namespace glauber;

TEST(Lattice, DomainValidation) {
    EXPECT_THROW(DomainSpec(1, 0.5), DomainError);
    EXPECT_THROW(DomainSpec(4, 0.0), DomainError);
    EXPECT_THROW(DomainSpec(4, 0.5, 2), DomainError);
    DomainSpec d(5, 0.5);
    EXPECT_DOUBLE_EQ(d.box_length(), 2.0);
    EXPECT_DOUBLE_EQ(d.coordinate(3), 1.5);
}

TEST(Lattice, PotentialRejectsNegativeValues) {
    EXPECT_THROW(Potential({1.0, -0.1}), DomainError);
    Potential p({2.0, 1.0});
    EXPECT_EQ(p(-1), 1.0);
    EXPECT_EQ(p(5), 0.0);
}

TEST(Lattice, RelativeEnergyExamples) {
    DomainSpec dom(8, 0.5);
    const auto step = Potential::step(0.7, 2);
    EXPECT_EQ(relative_energy(3, {}, step, dom), 0.0);
    EXPECT_DOUBLE_EQ(relative_energy(3, {5}, step, dom), 0.7);
    EXPECT_EQ(relative_energy(3, {6}, step, dom), 0.0);
    const FiniteConfig a{0, 1}, b{4, 6};
    EXPECT_DOUBLE_EQ(relative_energy(3, a | b, step, dom),
                     relative_energy(3, a, step, dom) + relative_energy(3, b, step, dom));
    EXPECT_THROW(relative_energy(8, {}, step, dom), DomainError);
    EXPECT_THROW(relative_energy(3, {3}, step, dom), DomainError);
}

TEST(Lattice, PairEnergyExamples) {
    DomainSpec dom(6, 1.0);
    Potential pot({5.0, 0.3, 0.2});
    EXPECT_EQ(pair_energy({}, pot, dom), 0.0);
    EXPECT_EQ(pair_energy({2}, pot, dom), 0.0);
    EXPECT_DOUBLE_EQ(pair_energy({0, 1, 2}, pot, dom), 2 * 0.3 + 0.2);
}

TEST(Lattice, CPhiExamples) {
    EXPECT_EQ(c_phi(Potential::zero(), DomainSpec(10, 0.5)), 0.0);
    // h (2R+1)(1 - e^{-a}) at h=0.5, R=2, a=1; mpmath value 1.5803013970713941960.
    EXPECT_NEAR(c_phi(Potential::step(1.0, 2), DomainSpec(10, 0.5)), 1.5803013970713942, 1e-15);
    // Independent of M, linear in h.
    const auto pot = Potential({0.4, 0.9, 0.1});
    EXPECT_DOUBLE_EQ(c_phi(pot, DomainSpec(4, 0.5)), c_phi(pot, DomainSpec(30, 0.5)));
    EXPECT_NEAR(c_phi(pot, DomainSpec(4, 0.25)) * 2, c_phi(pot, DomainSpec(4, 0.5)), 1e-15);
}

TEST(Lattice, BoltzmannFactor) {
    DomainSpec dom(6, 0.5);
    const auto step = Potential::step(1.0, 1);
    EXPECT_EQ(boltzmann_factor(2, {}, step, dom), 1.0);
    EXPECT_EQ(boltzmann_factor(2, {3, 5}, Potential::zero(), dom), 1.0);
    EXPECT_NEAR(boltzmann_factor(2, {3}, step, dom), 0.36787944117144232, 1e-16);
}

TEST(Lattice, RelativeEnergyMonotoneUnderInclusion) {
    DomainSpec dom(14, 0.5);
    Potential pot({0.0, 1.3, 0.4, 0.05});
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const Mask big = static_cast<Mask>(rng()) & full_mask(14);
        const Mask small = big & static_cast<Mask>(rng());
        const Site x = static_cast<Site>(rng() % 14);
        if ((big >> x) & 1u) continue;
        const double e_small = relative_energy(x, FiniteConfig::from_mask(small), pot, dom);
        const double e_big = relative_energy(x, FiniteConfig::from_mask(big), pot, dom);
        EXPECT_LE(e_small, e_big);
        const double b = boltzmann_factor(x, FiniteConfig::from_mask(big), pot, dom);
        EXPECT_GT(b, 0.0);
        EXPECT_LE(b, 1.0);
    }
}
