#pragma once

/**
 * @file
 *
 * @brief Discretized 1-D box and tabulated pair potential.
 *
 * Integrals over space become h * (sum over the M lattice sites), free
 * boundary. The pair potential is an even, nonnegative, finite-range table
 * phi(r), r = 0..R, with phi(r) = 0 beyond R.
 */

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace glauber {

/// Thrown for out-of-range sites, bad geometry, or enumeration guards.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using Site = int;

/// Largest box the mask-based configuration type can hold.
inline constexpr int kMaxSites = 32;

struct DomainSpec {
    int dimension = 1;
    int num_sites = 2;
    double spacing = 1.0;

    DomainSpec() = default;
    DomainSpec(int sites, double h, int dim = 1)
        : dimension(dim), num_sites(sites), spacing(h) {
        validate();
    }

    void validate() const {
        if (dimension != 1)
            throw DomainError("only dimension 1 is supported");
        if (num_sites < 2 || num_sites > kMaxSites)
            throw DomainError("num_sites must lie in [2, 32], got " +
                              std::to_string(num_sites));
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw DomainError("spacing must be positive");
    }

    double coordinate(Site i) const { return i * spacing; }
    double box_length() const { return (num_sites - 1) * spacing; }
    /// LP volume element per point, h^d.
    double point_weight() const { return std::pow(spacing, dimension); }

    void check_site(Site x) const {
        if (x < 0 || x >= num_sites)
            throw DomainError("site index " + std::to_string(x) +
                              " outside [0, " + std::to_string(num_sites) +
                              ")");
    }
};

class Potential {
public:
    Potential() = default;

    /// values[r] = phi(r) for r = 0..R.
    explicit Potential(std::vector<double> values) : values_(std::move(values)) {
        for (double v : values_)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DomainError("potential values must be finite and >= 0");
    }

    static Potential zero() { return Potential({0.0}); }

    /// phi = height on |r| <= range.
    static Potential step(double height, int range) {
        if (range < 0) throw DomainError("negative potential range");
        return Potential(std::vector<double>(range + 1, height));
    }

    int range_sites() const { return static_cast<int>(values_.size()) - 1; }
    const std::vector<double>& values() const { return values_; }

    /// phi at a lattice distance (sign ignored).
    double operator()(int distance) const {
        int r = distance < 0 ? -distance : distance;
        return r < static_cast<int>(values_.size()) ? values_[r] : 0.0;
    }

    bool is_zero() const {
        for (double v : values_)
            if (v != 0.0) return false;
        return true;
    }

private:
    std::vector<double> values_{0.0};
};

/// C_phi = h * sum_{j=-R}^{R} (1 - exp(-phi(|j|))), whole support of phi.
inline double c_phi(const Potential& pot, const DomainSpec& dom) {
    double acc = 0.0;
    const int R = pot.range_sites();
    for (int j = -R; j <= R; ++j) acc += -std::expm1(-pot(j));
    return dom.point_weight() * acc;
}

}  // namespace glauber
