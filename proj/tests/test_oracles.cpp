#include <cmath>

#include <gtest/gtest.h>

#include <glauber/energy.hpp>
#include <glauber/evolution.hpp>
#include <glauber/oracles.hpp>

using namespace glauber;

namespace {

// Direct sum over all configurations for P(eta subset gamma), no superset transform.
double direct_inclusion(const GibbsSpec& spec, FiniteConfig eta) {
    const int M = spec.dom.num_sites;
    const double w = spec.site_weight();
    double num = 0.0, den = 0.0;
    for (Mask g = 0; g < (Mask{1} << M); ++g) {
        const FiniteConfig gamma = FiniteConfig::from_mask(g);
        const double weight = std::pow(w, gamma.size()) * std::exp(-pair_energy(gamma, spec.pot, spec.dom));
        den += weight;
        if (eta.subset_of(gamma)) num += weight;
    }
    return num / den;
}

}  // namespace

TEST(Gibbs, FreeClosedForms) {
    const DomainSpec dom(10, 0.5);
    const double z = 0.5, h = 0.5;
    auto lat = exact_gibbs_correlations({z, Potential::zero(), dom, SiteWeight::lattice}, 3);
    auto cm = exact_gibbs_correlations({z, Potential::zero(), dom, SiteWeight::continuum_matched}, 3);
    const double p = z * h / (1 + z * h);
    for (int n = 0; n <= 3; ++n)
        for (Mask m : lat.masks(n)) {
            EXPECT_NEAR(lat.value(m), std::pow(p / h, n), 1e-13);
            EXPECT_NEAR(cm.value(m), std::pow(z, n), 1e-13);
        }
}

TEST(Gibbs, SupersetSumsMatchDirectEnumeration) {
    const DomainSpec dom(8, 0.5);
    const GibbsSpec spec{0.4, Potential({0.0, 1.0, 0.4}), dom, SiteWeight::lattice};
    auto k = exact_gibbs_correlations(spec, 3);
    const double h = dom.spacing;
    for (FiniteConfig eta : {FiniteConfig{}, FiniteConfig{3}, FiniteConfig{0, 1}, FiniteConfig{2, 4}, FiniteConfig{1, 4, 7}})
        EXPECT_NEAR(k(eta), direct_inclusion(spec, eta) / std::pow(h, eta.size()), 1e-13);
}

TEST(Gibbs, SmallActivityLimit) {
    // k^(1) -> z as z -> 0 under the matched weight.
    const DomainSpec dom(10, 0.5);
    for (double z : {1e-3, 1e-4}) {
        auto k = exact_gibbs_correlations({z, Potential::step(1.0, 1), dom, SiteWeight::continuum_matched}, 1);
        EXPECT_NEAR(k({5}) / z, 1.0, 10 * z);
    }
}

TEST(Gibbs, RepulsionLowersPairCorrelation) {
    const DomainSpec dom(10, 0.5);
    auto k = exact_gibbs_correlations({0.4, Potential::step(1.0, 1), dom, SiteWeight::lattice}, 2);
    EXPECT_LT(k({4, 5}), k({4}) * k({5}));
    EXPECT_NEAR(k({2, 7}), k({2}) * k({7}), 0.05 * k({2}) * k({7}));
}

TEST(Gibbs, LimitsAndErrors) {
    EXPECT_THROW(exact_gibbs_correlations({0.3, Potential::zero(), DomainSpec(17, 0.5), SiteWeight::lattice}, 2),
                 DomainError);
    EXPECT_THROW(GibbsSpec({5.0, Potential::zero(), DomainSpec(4, 0.5), SiteWeight::continuum_matched}).site_weight(),
                 DomainError);
}

TEST(Gibbs, FixedPointResidualAndNXiMonotone) {
    const DomainSpec dom(10, 0.5);
    const Potential pot = Potential::step(0.3, 1);
    auto k = exact_gibbs_correlations({0.3, pot, dom, SiteWeight::continuum_matched}, 3);
    auto r1 = gibbs_fixed_point_residual(k, {0.3, 0.05, 1}, pot, dom, 2.0);
    auto r0 = gibbs_fixed_point_residual(k, {0.3, 0.05, 0}, pot, dom, 2.0);
    EXPECT_LT(r1.residual, r0.residual);
    EXPECT_LE(r1.residual, 5 * r1.tolerance);
    auto free = exact_gibbs_correlations({0.3, Potential::zero(), dom, SiteWeight::continuum_matched}, 3);
    EXPECT_LE(gibbs_fixed_point_residual(free, {0.3, 0.05, 3}, Potential::zero(), dom, 2.0).residual, 1e-13);
}

TEST(MonteCarlo, FreeOccupationIsBernoulli) {
    McConfig cfg{DomainSpec(6, 0.5), Potential::zero(), 0.8, 4000.0, 20.0, 17, 2, 32};
    auto res = mc_birth_death(cfg, 1);
    const double target = (0.4 / 1.4) / 0.5;
    for (Site x = 0; x < 6; ++x)
        EXPECT_LT(std::abs(res.estimate({x}) - target), 4 * res.std_error({x}));
    EXPECT_NEAR(res.estimate({}), 1.0, 1e-12);
    EXPECT_GT(res.events_after_burn_in, 10000);
    EXPECT_EQ(res.births + res.deaths, res.events_total);
}

TEST(MonteCarlo, Reproducible) {
    McConfig cfg{DomainSpec(5, 0.5), Potential::step(1.0, 1), 0.6, 200.0, 5.0, 99, 3, 8};
    auto a = mc_birth_death(cfg, 2);
    auto b = mc_birth_death(cfg, 2);
    EXPECT_TRUE(a.estimate == b.estimate);
    EXPECT_TRUE(a.std_error == b.std_error);
    cfg.seed = 100;
    EXPECT_FALSE(mc_birth_death(cfg, 2).estimate == a.estimate);
}

TEST(MonteCarlo, AgreesWithEnumeration) {
    const DomainSpec dom(10, 0.5);
    const Potential pot = Potential::step(1.0, 1);
    McConfig cfg{dom, pot, 0.4, 3000.0, 20.0, 5, 4, 32};
    auto res = mc_birth_death(cfg, 2);
    auto k = exact_gibbs_correlations({0.4, pot, dom, SiteWeight::lattice}, 2);
    for (FiniteConfig eta : {FiniteConfig{5}, FiniteConfig{4, 5}, FiniteConfig{4, 6}})
        EXPECT_LT(std::abs(res.estimate(eta) - k(eta)), 4 * res.std_error(eta)) << eta.sites()[0];
}

TEST(MonteCarlo, ConfigValidation) {
    McConfig cfg{DomainSpec(5, 0.5), Potential::zero(), 0.6, 10.0, 10.0, 1, 1, 8};
    EXPECT_THROW(mc_birth_death(cfg), DomainError);
    cfg.burn_in = 1.0;
    cfg.replicas = 0;
    EXPECT_THROW(mc_birth_death(cfg), DomainError);
}

TEST(Positivity, GibbsPatternsAreProbabilities) {
    const DomainSpec dom(10, 0.5);
    const GibbsSpec spec{0.4, Potential::step(1.0, 1), dom, SiteWeight::lattice};
    const FiniteConfig window{3, 4, 5, 6};
    auto k = exact_gibbs_correlations(spec, 4);
    auto r = positivity_probe(k, window, PairingWeights(dom));
    EXPECT_EQ(r.patterns.size(), 16u);
    EXPECT_NEAR(r.sum, 1.0, 1e-12);
    EXPECT_GT(r.min_value, 0.0);
    EXPECT_NEAR(r.tolerance, 1e-9, 1e-15);
    // Pattern "all four occupied" equals P(window subset gamma).
    for (std::size_t i = 0; i < r.patterns.size(); ++i)
        if (r.patterns[i] == window) {
            EXPECT_NEAR(r.values[i], k(window) * std::pow(0.5, 4), 1e-14);
        }
}

TEST(Positivity, DetectsNonCorrelationFunction) {
    const DomainSpec dom(8, 0.5);
    SymFn k = SymFn::power(8, 2, 0.3);
    k.set({2, 3}, 3.0);  // pair density far above what the singlets allow
    auto r = positivity_probe(k, FiniteConfig{2, 3}, PairingWeights(dom));
    EXPECT_LT(r.min_value, -r.tolerance);
    EXPECT_THROW(positivity_probe(SymFn::power(12, 2, 0.3), FiniteConfig::from_mask(full_mask(11)),
                                  PairingWeights(dom)),
                 DomainError);
}

TEST(Positivity, EvolvedGibbsStaysPositive) {
    const DomainSpec dom(10, 0.5);
    const Potential pot = Potential::step(0.3, 1);
    auto k0 = exact_gibbs_correlations({0.15, pot, dom, SiteWeight::lattice}, 4);
    auto tr = evolve_star(k0, 1.0, {0.3, 0.05, 3}, pot, dom, 10);
    for (const auto& k : tr.states) {
        auto r = positivity_probe(k, FiniteConfig{3, 4, 5, 6}, PairingWeights(dom));
        EXPECT_GE(r.min_value, -r.tolerance);
        EXPECT_NEAR(r.sum, 1.0, 5 * r.tolerance);
    }
}
