#pragma once

/**
 * @file
 *
 * @brief Finite configurations on the lattice and subset combinatorics.
 *
 * A FiniteConfig is a set of distinct sites. It is stored as a bitmask over
 * at most 32 sites; sites() yields the strictly increasing list view.
 */

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace glauber {

using Mask = std::uint32_t;

class FiniteConfig {
public:
    constexpr FiniteConfig() = default;

    /// Sites must be strictly increasing.
    FiniteConfig(std::initializer_list<Site> sites) { assign(sites.begin(), sites.end()); }
    explicit FiniteConfig(const std::vector<Site>& sites) { assign(sites.begin(), sites.end()); }

    static constexpr FiniteConfig from_mask(Mask m) {
        FiniteConfig c;
        c.mask_ = m;
        return c;
    }

    constexpr Mask mask() const { return mask_; }
    constexpr int size() const { return std::popcount(mask_); }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr bool contains(Site x) const { return (mask_ >> x) & 1u; }
    /// Largest site index + 1, 0 for the empty configuration.
    constexpr int extent() const { return 32 - std::countl_zero(mask_); }

    std::vector<Site> sites() const {
        std::vector<Site> out;
        out.reserve(size());
        for (Mask m = mask_; m; m &= m - 1) out.push_back(std::countr_zero(m));
        return out;
    }

    constexpr FiniteConfig with(Site x) const { return from_mask(mask_ | (Mask{1} << x)); }
    constexpr FiniteConfig without(Site x) const { return from_mask(mask_ & ~(Mask{1} << x)); }
    constexpr bool subset_of(FiniteConfig o) const { return (mask_ & ~o.mask_) == 0; }
    constexpr bool disjoint(FiniteConfig o) const { return (mask_ & o.mask_) == 0; }

    friend constexpr FiniteConfig operator|(FiniteConfig a, FiniteConfig b) { return from_mask(a.mask_ | b.mask_); }
    friend constexpr FiniteConfig operator&(FiniteConfig a, FiniteConfig b) { return from_mask(a.mask_ & b.mask_); }
    friend constexpr FiniteConfig operator-(FiniteConfig a, FiniteConfig b) { return from_mask(a.mask_ & ~b.mask_); }
    friend constexpr bool operator==(FiniteConfig, FiniteConfig) = default;
    friend constexpr auto operator<=>(FiniteConfig, FiniteConfig) = default;

    void check_within(const DomainSpec& dom) const {
        if (extent() > dom.num_sites)
            throw DomainError("configuration has a site outside the box (site " +
                              std::to_string(extent() - 1) + ")");
    }

private:
    template <class It>
    void assign(It first, It last) {
        Site prev = -1;
        for (; first != last; ++first) {
            Site x = *first;
            if (x < 0 || x >= kMaxSites)
                throw DomainError("site index " + std::to_string(x) + " out of range");
            if (x <= prev)
                throw DomainError("configuration sites must be strictly increasing");
            mask_ |= Mask{1} << x;
            prev = x;
        }
    }

    Mask mask_ = 0;
};

inline constexpr Mask full_mask(int num_sites) {
    return num_sites >= 32 ? ~Mask{0} : (Mask{1} << num_sites) - 1;
}

/// Binomial coefficients C(n, k) for n, k <= 32.
class Binomial {
public:
    static const Binomial& table() {
        static const Binomial t;
        return t;
    }
    std::uint64_t operator()(int n, int k) const {
        if (k < 0 || n < 0 || k > n) return 0;
        return c_[n][k];
    }

private:
    Binomial() {
        for (int n = 0; n <= 32; ++n) {
            c_[n][0] = 1;
            for (int k = 1; k <= n; ++k) c_[n][k] = c_[n - 1][k - 1] + (k <= n - 1 ? c_[n - 1][k] : 0);
        }
    }
    std::array<std::array<std::uint64_t, 33>, 33> c_{};
};

/// Colexicographic rank of a set among sets of the same size.
/// Equals the position of the mask in increasing numeric order of equal-popcount masks.
inline std::uint64_t colex_rank(Mask m) {
    const auto& binom = Binomial::table();
    std::uint64_t r = 0;
    int i = 1;
    for (; m; m &= m - 1, ++i) r += binom(std::countr_zero(m), i);
    return r;
}

/// Next mask with the same popcount (Gosper's hack). Caller bounds the range.
inline std::uint64_t next_same_popcount(std::uint64_t v) {
    std::uint64_t t = v | (v - 1);
    return (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
}

/// Calls f(sub) for every submask of m, including 0 and m.
template <class F>
void for_each_submask(Mask m, F&& f) {
    Mask s = m;
    while (true) {
        f(s);
        if (s == 0) break;
        s = (s - 1) & m;
    }
}

/// Calls f(mask) for all n-subsets of {0..num_sites-1} in colex order.
template <class F>
void for_each_combination(int num_sites, int n, F&& f) {
    if (n < 0 || n > num_sites) return;
    if (n == 0) {
        f(Mask{0});
        return;
    }
    const std::uint64_t limit = std::uint64_t{1} << num_sites;
    for (std::uint64_t v = (std::uint64_t{1} << n) - 1; v < limit; v = next_same_popcount(v))
        f(static_cast<Mask>(v));
}

namespace detail {
template <class Visit>
void weighted_subsets_from(const Site* sites, const double* factors, int count, int cap, int next,
                           Mask mask, double weight, int depth, Visit& visit) {
    visit(mask, weight, depth);
    if (depth == cap) return;
    for (int i = next; i < count; ++i)
        weighted_subsets_from(sites, factors, count, cap, i + 1, mask | (Mask{1} << sites[i]),
                              weight * factors[i], depth + 1, visit);
}
}  // namespace detail

/// Visits every subset xi of the given sites with |xi| <= cap, passing
/// (mask, product of per-site factors over xi, |xi|). Sites whose factor is
/// zero contribute nothing and should be filtered out by the caller.
template <class Visit>
void for_each_weighted_subset(const Site* sites, const double* factors, int count, int cap,
                              Visit&& visit) {
    if (cap < 0) return;
    detail::weighted_subsets_from(sites, factors, count, cap, 0, Mask{0}, 1.0, 0, visit);
}

}  // namespace glauber
