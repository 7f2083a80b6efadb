#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <glauber/symfn.hpp>

namespace glauber::testing {

/// Uniform entries in [-1, 1] scaled by scale^|eta|.
inline SymFn random_symfn(int num_sites, int max_order, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return SymFn::from_function(num_sites, max_order,
                                [&](FiniteConfig e) { return u(rng) * std::pow(scale, e.size()); });
}

/// Same, with the empty-set entry forced to zero.
inline SymFn random_symfn_k0(int num_sites, int max_order, std::uint64_t seed, double scale = 1.0) {
    SymFn k = random_symfn(num_sites, max_order, seed, scale);
    k.set(FiniteConfig{}, 0.0);
    return k;
}

}  // namespace glauber::testing
