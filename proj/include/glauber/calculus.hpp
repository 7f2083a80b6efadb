#pragma once

/**
 * @file
 *
 * @brief Lebesgue-Poisson calculus on the truncated lattice configuration space.
 *
 * Integration against the Lebesgue-Poisson measure is a sum over sets with
 * weight (h^d)^|eta|; the 1/n! of the continuum measure cancels the n!
 * orderings of each set.
 */

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "config.hpp"
#include "detail/neumaier.hpp"
#include "lattice.hpp"
#include "symfn.hpp"

namespace glauber {

struct PairingWeights {
    double weight_per_point = 1.0;

    PairingWeights() = default;
    explicit PairingWeights(double w) : weight_per_point(w) {
        if (!(w > 0.0)) throw DomainError("pairing weight must be positive");
    }
    explicit PairingWeights(const DomainSpec& dom) : PairingWeights(dom.point_weight()) {}
};

/// e_lambda(f, eta) = prod_{x in eta} f(x); 1 on the empty set.
inline double lp_exponent(std::span<const double> f, FiniteConfig eta) {
    double p = 1.0;
    for (Mask m = eta.mask(); m; m &= m - 1) {
        const auto x = static_cast<std::size_t>(std::countr_zero(m));
        if (x >= f.size()) throw DomainError("lp_exponent: site outside the function table");
        p *= f[x];
    }
    return p;
}

/// Sum over stored sets of F(eta) * w^|eta|.
inline double lp_integral(const SymFn& F, PairingWeights weights) {
    detail::CompensatedSum acc;
    double wn = 1.0;
    for (int n = 0; n <= F.max_order(); ++n, wn *= weights.weight_per_point)
        for (double v : F.component(n)) acc += v * wn;
    const double r = acc.value();
    if (!std::isfinite(r)) throw std::overflow_error("lp_integral: non-finite result");
    return r;
}

/// (KG)(gamma) = sum over all subsets eta of gamma of G(eta). Orders above
/// G.max_order() contribute 0.
inline double k_transform(const SymFn& G, FiniteConfig gamma) {
    if (gamma.size() > 30) throw DomainError("k_transform: |gamma| > 30");
    detail::CompensatedSum acc;
    for_each_submask(gamma.mask(), [&](Mask s) { acc += G.value(s); });
    return acc.value();
}

/// A function given by its values on every subset of a window.
class SubsetTable {
public:
    static constexpr int kMaxWindow = 20;

    explicit SubsetTable(FiniteConfig window) : window_(window), sites_(window.sites()) {
        if (window.size() > kMaxWindow)
            throw DomainError("window of " + std::to_string(window.size()) + " sites exceeds " +
                              std::to_string(kMaxWindow));
        values_.assign(std::size_t{1} << sites_.size(), 0.0);
    }

    template <class F>
    SubsetTable(FiniteConfig window, F&& f) : SubsetTable(window) {
        for (std::size_t local = 0; local < values_.size(); ++local) values_[local] = f(expand(local));
    }

    FiniteConfig window() const { return window_; }
    std::size_t size() const { return values_.size(); }

    double operator()(FiniteConfig sub) const { return values_[local_index(sub)]; }
    double& operator[](FiniteConfig sub) { return values_[local_index(sub)]; }

    FiniteConfig expand(std::size_t local) const {
        Mask m = 0;
        for (std::size_t i = 0; i < sites_.size(); ++i)
            if ((local >> i) & 1u) m |= Mask{1} << sites_[i];
        return FiniteConfig::from_mask(m);
    }

    std::size_t local_index(FiniteConfig sub) const {
        if (!sub.subset_of(window_)) throw DomainError("configuration not inside the window");
        std::size_t local = 0;
        for (std::size_t i = 0; i < sites_.size(); ++i)
            if (sub.contains(sites_[i])) local |= std::size_t{1} << i;
        return local;
    }

private:
    FiniteConfig window_;
    std::vector<Site> sites_;
    std::vector<double> values_;
};

/// (K^{-1}F)(eta) = sum_{xi subset eta} (-1)^{|eta \ xi|} F(xi).
inline double k_inverse(const SubsetTable& F, FiniteConfig eta) {
    if (!eta.subset_of(F.window())) throw DomainError("k_inverse: eta not inside the window");
    detail::CompensatedSum acc;
    const int n = eta.size();
    for_each_submask(eta.mask(), [&](Mask s) {
        const double v = F(FiniteConfig::from_mask(s));
        acc += ((n - std::popcount(s)) & 1) ? -v : v;
    });
    return acc.value();
}

struct MinlosSides {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Both sides of the Minlos summation identity on an M-site box with total
/// order capped at `cap`:
///   lhs = sum_eta w^|eta| sum_{xi subset eta} H(xi, eta \ xi, eta)
///   rhs = sum over disjoint (xi, eta) of w^{|xi|+|eta|} H(xi, eta, xi u eta)
/// H is called as H(FiniteConfig, FiniteConfig, FiniteConfig).
template <class H>
MinlosSides minlos_identity_check(H&& h, int num_sites, int cap, PairingWeights weights) {
    const double w = weights.weight_per_point;
    MinlosSides out;
    detail::CompensatedSum lhs, rhs;
    for (int n = 0; n <= cap; ++n) {
        const double wn = std::pow(w, n);
        for_each_combination(num_sites, n, [&](Mask eta) {
            for_each_submask(eta, [&](Mask xi) {
                lhs += wn * h(FiniteConfig::from_mask(xi), FiniteConfig::from_mask(eta & ~xi),
                              FiniteConfig::from_mask(eta));
            });
        });
    }
    for (int a = 0; a <= cap; ++a)
        for_each_combination(num_sites, a, [&](Mask xi) {
            for (int b = 0; a + b <= cap; ++b) {
                const double wn = std::pow(w, a + b);
                for_each_combination(num_sites, b, [&](Mask eta) {
                    if (xi & eta) return;
                    rhs += wn * h(FiniteConfig::from_mask(xi), FiniteConfig::from_mask(eta),
                                  FiniteConfig::from_mask(xi | eta));
                });
            }
        });
    out.lhs = lhs.value();
    out.rhs = rhs.value();
    return out;
}

/// ||G||_C = sum_eta |G(eta)| C^|eta| w^|eta|.
inline double norm_L_C(const SymFn& G, double C, PairingWeights weights) {
    if (!(C > 1.0)) throw DomainError("norm_L_C requires C > 1");
    detail::CompensatedSum acc;
    const double cw = C * weights.weight_per_point;
    double f = 1.0;
    for (int n = 0; n <= G.max_order(); ++n, f *= cw)
        for (double v : G.component(n)) acc += std::abs(v) * f;
    return acc.value();
}

/// ||k||_{K_C} = max over stored eta of |k(eta)| C^{-|eta|}.
inline double norm_K_C(const SymFn& k, double C) {
    if (!(C > 1.0)) throw DomainError("norm_K_C requires C > 1");
    double best = 0.0;
    double f = 1.0;
    for (int n = 0; n <= k.max_order(); ++n, f /= C)
        for (double v : k.component(n)) best = std::max(best, std::abs(v) * f);
    return best;
}

/// <<G, k>> = sum_eta G(eta) k(eta) w^|eta| over the common truncation.
inline double pairing(const SymFn& G, const SymFn& k, PairingWeights weights) {
    if (G.num_sites() != k.num_sites()) throw DomainError("pairing: different boxes");
    const int top = std::min(G.max_order(), k.max_order());
    detail::CompensatedSum acc;
    double wn = 1.0;
    for (int n = 0; n <= top; ++n, wn *= weights.weight_per_point) {
        auto g = G.component(n);
        auto kk = k.component(n);
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * kk[i] * wn;
    }
    return acc.value();
}

}  // namespace glauber
