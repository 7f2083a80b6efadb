#pragma once

#include <cmath>

#include "config.hpp"
#include "lattice.hpp"

namespace glauber {

/// E(x, eta) = sum_{y in eta} phi(x - y). Requires x not in eta.
inline double relative_energy(Site x, FiniteConfig eta, const Potential& pot, const DomainSpec& dom) {
    dom.check_site(x);
    eta.check_within(dom);
    if (eta.contains(x))
        throw DomainError("relative_energy: site " + std::to_string(x) +
                          " belongs to the configuration; remove it first");
    double e = 0.0;
    for (Mask m = eta.mask(); m; m &= m - 1) e += pot(x - std::countr_zero(m));
    return e;
}

/// Sum of phi over unordered pairs of eta.
inline double pair_energy(FiniteConfig eta, const Potential& pot, const DomainSpec& dom) {
    eta.check_within(dom);
    double e = 0.0;
    for (Mask m = eta.mask(); m; m &= m - 1) {
        const Site x = std::countr_zero(m);
        for (Mask r = m & (m - 1); r; r &= r - 1) e += pot(std::countr_zero(r) - x);
    }
    return e;
}

inline double boltzmann_factor(Site x, FiniteConfig eta, const Potential& pot, const DomainSpec& dom) {
    return std::exp(-relative_energy(x, eta, pot, dom));
}

}  // namespace glauber
