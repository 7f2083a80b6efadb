#pragma once

/**
 * @file
 *
 * @brief Hierarchy operators for Glauber birth-and-death dynamics.
 *
 * L_hat acts on quasi-observables G, L_hat_star on correlation functions k;
 * P_delta and P_delta_star are the one-step approximations whose iterates
 * converge to the corresponding semigroups.
 *
 * Lattice conventions shared by all four operators:
 *  - no two particles on one site: every inner configuration (the birth
 *    site x, the omega and xi sets) is disjoint from the argument eta;
 *  - inner xi sums of the dual operators run over |xi| <= xi_cap, which in
 *    the forward operators is the matching cap |eta \ xi| <= xi_cap;
 *  - reads above max_order are 0.
 * With identical caps the pairs (L_hat, L_hat_star) and (P_delta,
 * P_delta_star) are exactly dual under pairing().
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "calculus.hpp"
#include "config.hpp"
#include "detail/neumaier.hpp"
#include "detail/parallel.hpp"
#include "lattice.hpp"
#include "symfn.hpp"

namespace glauber {

struct OperatorParams {
    double z = 1.0;
    double delta = 0.05;
    int xi_cap = 3;

    /// Default inner cap min(N_max, 3).
    static int default_xi_cap(int max_order) { return std::min(max_order, 3); }
    /// Default step min(0.05, 0.5 / N_max).
    static double default_delta(int max_order) {
        return max_order > 0 ? std::min(0.05, 0.5 / max_order) : 0.05;
    }

    void validate(int max_order) const {
        if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("activity z must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
        if (xi_cap < 0 || xi_cap > max_order)
            throw DomainError("xi_cap must lie in [0, N_max]");
    }
};

namespace detail {

// Pair kernel tables and relative-energy helpers bound to one box and potential.
class KernelTables {
public:
    KernelTables(const DomainSpec& dom, const Potential& pot)
        : num_sites_(dom.num_sites), h_(dom.point_weight()), phi_(dom.num_sites), mayer_(dom.num_sites) {
        dom.validate();
        for (int d = 0; d < num_sites_; ++d) {
            phi_[d] = pot(d);
            mayer_[d] = std::expm1(-phi_[d]);
        }
    }

    int num_sites() const { return num_sites_; }
    double h() const { return h_; }
    Mask all() const { return full_mask(num_sites_); }

    double energy(Site y, Mask omega) const {
        double e = 0.0;
        for (Mask m = omega; m; m &= m - 1) e += phi_[std::abs(y - std::countr_zero(m))];
        return e;
    }
    /// exp(-E(y, omega)).
    double boltzmann(Site y, Mask omega) const { return std::exp(-energy(y, omega)); }
    /// exp(-E(y, omega)) - 1, accurate for small energies.
    double boltzmann_minus_one(Site y, Mask omega) const { return std::expm1(-energy(y, omega)); }
    /// exp(-phi(x - y)) - 1.
    double mayer(Site x, Site y) const { return mayer_[std::abs(x - y)]; }

private:
    int num_sites_;
    double h_;
    std::vector<double> phi_;
    std::vector<double> mayer_;
};

// Sites of `candidates` with nonzero factor, collected for weighted subset sums.
struct FactorList {
    std::array<Site, kMaxSites> sites{};
    std::array<double, kMaxSites> factors{};
    int count = 0;

    template <class F>
    void collect(Mask candidates, F&& factor) {
        count = 0;
        for (Mask m = candidates; m; m &= m - 1) {
            const Site y = std::countr_zero(m);
            const double f = factor(y);
            if (f != 0.0) {
                sites[count] = y;
                factors[count] = f;
                ++count;
            }
        }
    }
};

inline void check_shape(const SymFn& f, const DomainSpec& dom) {
    if (f.num_sites() != dom.num_sites) throw DomainError("SymFn box does not match the domain");
}

// out(eta) = entry(mask, order) for every stored eta, evaluated in parallel.
template <class Entry>
SymFn map_entries(const SymFn& shape, Entry&& entry) {
    SymFn out(shape.num_sites(), shape.max_order());
    for (int n = 0; n <= out.max_order(); ++n) {
        const auto& ms = out.masks(n);
        auto dst = out.component(n);
        parallel_for(ms.size(), [&](std::size_t i) { dst[i] = entry(ms[i], n); });
    }
    return out;
}

// sum over xi subset of `sites` (|xi| <= cap) of h^|xi| prod(factors) k(base u xi).
inline double xi_integral(const SymFn& k, Mask base, const FactorList& list, int cap, double h) {
    CompensatedSum acc;
    std::array<double, kMaxSites + 1> hp{};
    hp[0] = 1.0;
    for (int j = 1; j <= std::max(cap, 0); ++j) hp[j] = hp[j - 1] * h;
    for_each_weighted_subset(list.sites.data(), list.factors.data(), list.count, cap,
                             [&](Mask xi, double w, int depth) {
                                 const double v = k.value(base | xi);
                                 if (v != 0.0) acc += hp[depth] * w * v;
                             });
    return acc.value();
}

}  // namespace detail

/// (L_hat G)(eta) = -|eta| G(eta)
///   + z h sum_{xi subset eta, |eta\xi| <= xi_cap} sum_{x not in eta}
///       exp(-E(x, xi)) G(xi u x) prod_{y in eta\xi} (exp(-phi(x-y)) - 1).
inline SymFn apply_L_hat(const SymFn& G, const OperatorParams& p, const Potential& pot,
                         const DomainSpec& dom) {
    detail::check_shape(G, dom);
    p.validate(G.max_order());
    const detail::KernelTables kt(dom, pot);
    const int top = G.max_order();
    const Mask all = kt.all();
    return detail::map_entries(G, [&](Mask eta, int n) {
        detail::CompensatedSum acc;
        acc += -n * G.value(eta);
        const Mask outside = all & ~eta;
        for_each_submask(eta, [&](Mask xi) {
            const Mask rest = eta & ~xi;
            if (std::popcount(rest) > p.xi_cap || std::popcount(xi) + 1 > top) return;
            for (Mask m = outside; m; m &= m - 1) {
                const Site x = std::countr_zero(m);
                double w = 1.0;
                for (Mask r = rest; r && w != 0.0; r &= r - 1) w *= kt.mayer(x, std::countr_zero(r));
                if (w == 0.0) continue;
                const double g = G.value(xi | (Mask{1} << x));
                if (g == 0.0) continue;
                acc += p.z * kt.h() * kt.boltzmann(x, xi) * g * w;
            }
        });
        return acc.value();
    });
}

/// (L_hat_star k)(eta) = -|eta| k(eta)
///   + z sum_{x in eta} exp(-E(x, eta\x))
///       sum_{xi disjoint from eta, |xi| <= xi_cap} h^|xi| prod_{y in xi}(exp(-phi(x-y)) - 1) k((eta\x) u xi).
inline SymFn apply_L_hat_star(const SymFn& k, const OperatorParams& p, const Potential& pot,
                              const DomainSpec& dom) {
    detail::check_shape(k, dom);
    p.validate(k.max_order());
    const detail::KernelTables kt(dom, pot);
    const int top = k.max_order();
    const Mask all = kt.all();
    return detail::map_entries(k, [&](Mask eta, int n) {
        if (n == 0) return 0.0;
        detail::CompensatedSum acc;
        acc += -n * k.value(eta);
        const Mask outside = all & ~eta;
        const int cap = std::min(p.xi_cap, top - (n - 1));
        detail::FactorList list;
        for (Mask m = eta; m; m &= m - 1) {
            const Site x = std::countr_zero(m);
            const Mask base = eta & ~(Mask{1} << x);
            list.collect(outside, [&](Site y) { return kt.mayer(x, y); });
            acc += p.z * kt.boltzmann(x, base) * detail::xi_integral(k, base, list, cap, kt.h());
        }
        return acc.value();
    });
}

/// (P_delta G)(eta) = sum_{xi subset eta, |eta\xi| <= xi_cap} (1-delta)^|xi|
///   sum_{omega disjoint from eta} (z delta h)^|omega| G(xi u omega)
///     prod_{y in xi} exp(-E(y, omega)) prod_{y in eta\xi} (exp(-E(y, omega)) - 1).
inline SymFn apply_P_delta(const SymFn& G, const OperatorParams& p, const Potential& pot,
                           const DomainSpec& dom) {
    detail::check_shape(G, dom);
    p.validate(G.max_order());
    const detail::KernelTables kt(dom, pot);
    const int top = G.max_order();
    const Mask all = kt.all();
    const double zdh = p.z * p.delta * kt.h();
    return detail::map_entries(G, [&](Mask eta, int n) {
        detail::CompensatedSum acc;
        detail::FactorList outside;
        outside.collect(all & ~eta, [](Site) { return 1.0; });
        for_each_submask(eta, [&](Mask xi) {
            const Mask rest = eta & ~xi;
            const int s = std::popcount(xi);
            if (n - s > p.xi_cap) return;
            const double keep = std::pow(1.0 - p.delta, s);
            for_each_weighted_subset(outside.sites.data(), outside.factors.data(), outside.count, top - s,
                                     [&](Mask omega, double, int m) {
                                         if (rest && !omega) return;
                                         const double g = G.value(xi | omega);
                                         if (g == 0.0) return;
                                         double w = std::pow(zdh, m);
                                         for (Mask r = xi; r; r &= r - 1)
                                             w *= kt.boltzmann(std::countr_zero(r), omega);
                                         for (Mask r = rest; r && w != 0.0; r &= r - 1)
                                             w *= kt.boltzmann_minus_one(std::countr_zero(r), omega);
                                         acc += keep * w * g;
                                     });
        });
        return acc.value();
    });
}

/// (P_delta_star k)(eta) = sum_{omega subset eta} (1-delta)^{|eta\omega|} (z delta)^|omega|
///   prod_{y in eta\omega} exp(-E(y, omega))
///   sum_{xi disjoint from eta, |xi| <= xi_cap} h^|xi| prod_{y in xi} (exp(-E(y, omega)) - 1) k(xi u eta\omega).
inline SymFn apply_P_delta_star(const SymFn& k, const OperatorParams& p, const Potential& pot,
                                const DomainSpec& dom) {
    detail::check_shape(k, dom);
    p.validate(k.max_order());
    const detail::KernelTables kt(dom, pot);
    const int top = k.max_order();
    const Mask all = kt.all();
    const double zd = p.z * p.delta;
    return detail::map_entries(k, [&](Mask eta, int n) {
        detail::CompensatedSum acc;
        const Mask outside = all & ~eta;
        detail::FactorList list;
        for_each_submask(eta, [&](Mask omega) {
            const Mask rest = eta & ~omega;
            const int m = std::popcount(omega);
            const double coef = std::pow(1.0 - p.delta, n - m) * std::pow(zd, m);
            if (omega == 0) {
                acc += coef * k.value(eta);
                return;
            }
            double prod = 1.0;
            for (Mask r = rest; r; r &= r - 1) prod *= kt.boltzmann(std::countr_zero(r), omega);
            const int cap = std::min(p.xi_cap, top - (n - m));
            list.collect(outside, [&](Site y) { return kt.boltzmann_minus_one(y, omega); });
            acc += coef * prod * detail::xi_integral(k, rest, list, cap, kt.h());
        });
        return acc.value();
    });
}

/// ||delta^{-1}(P_delta_star k - k) - L_hat_star k||_{K_C}.
inline double generator_residual(const SymFn& k, const OperatorParams& p, const Potential& pot,
                                 const DomainSpec& dom, double C) {
    SymFn diff = apply_P_delta_star(k, p, pot, dom);
    diff -= k;
    diff *= 1.0 / p.delta;
    diff -= apply_L_hat_star(k, p, pot, dom);
    return norm_K_C(diff, C);
}

/// Relative truncation-tail bound (C c_phi)^{N+1}/(N+1)! * exp(C c_phi) for
/// inner Lebesgue-Poisson sums cut at order N; multiply by ||k||_{K_C}.
inline double truncation_tail_bound(double C, double cphi, int order_cap) {
    const double a = C * cphi;
    if (a == 0.0) return 0.0;
    return std::exp((order_cap + 1) * std::log(a) - std::lgamma(order_cap + 2.0) + a);
}

}  // namespace glauber
