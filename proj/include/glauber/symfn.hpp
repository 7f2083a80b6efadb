#pragma once

/**
 * @file
 *
 * @brief Truncated symmetric functions on finite configurations.
 *
 * SymFn stores one value per set eta with |eta| <= max_order. Sets of each
 * order are laid out in colex order, so the slot of eta is its colex rank.
 * Reads above max_order return 0.
 */

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "config.hpp"

namespace glauber {

/// Shared, immutable index of all sets of order <= max_order in an M-site box.
class SymFnLayout {
public:
    static std::shared_ptr<const SymFnLayout> get(int num_sites, int max_order) {
        static std::mutex mutex;
        static std::map<std::pair<int, int>, std::shared_ptr<const SymFnLayout>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[{num_sites, max_order}];
        if (!slot) slot.reset(new SymFnLayout(num_sites, max_order));
        return slot;
    }

    int num_sites() const { return num_sites_; }
    int max_order() const { return max_order_; }
    const std::vector<Mask>& masks(int n) const { return masks_[n]; }
    std::size_t total() const { return total_; }

private:
    static constexpr std::size_t kMaxEntries = std::size_t{1} << 26;

    SymFnLayout(int num_sites, int max_order) : num_sites_(num_sites), max_order_(max_order) {
        const auto& binom = Binomial::table();
        for (int n = 0; n <= max_order; ++n) total_ += binom(num_sites, n);
        if (total_ > kMaxEntries)
            throw DomainError("SymFn too large: " + std::to_string(total_) + " entries");
        masks_.resize(max_order + 1);
        for (int n = 0; n <= max_order; ++n) {
            masks_[n].reserve(binom(num_sites, n));
            for_each_combination(num_sites, n, [&](Mask m) { masks_[n].push_back(m); });
        }
    }

    int num_sites_;
    int max_order_;
    std::size_t total_ = 0;
    std::vector<std::vector<Mask>> masks_;
};

class SymFn {
public:
    SymFn() : SymFn(2, 0) {}

    SymFn(int num_sites, int max_order) {
        if (num_sites < 1 || num_sites > kMaxSites) throw DomainError("SymFn: bad site count");
        if (max_order < 0) throw DomainError("SymFn: negative max_order");
        if (max_order > num_sites) max_order = num_sites;
        layout_ = SymFnLayout::get(num_sites, max_order);
        values_.resize(max_order + 1);
        for (int n = 0; n <= max_order; ++n) values_[n].assign(layout_->masks(n).size(), 0.0);
    }

    SymFn(const DomainSpec& dom, int max_order) : SymFn(dom.num_sites, max_order) {}

    template <class F>
    static SymFn from_function(int num_sites, int max_order, F&& f) {
        SymFn out(num_sites, max_order);
        for (int n = 0; n <= out.max_order(); ++n) {
            const auto& ms = out.masks(n);
            for (std::size_t i = 0; i < ms.size(); ++i) out.values_[n][i] = f(FiniteConfig::from_mask(ms[i]));
        }
        return out;
    }

    /// 1 at the empty configuration, 0 elsewhere.
    static SymFn indicator_empty(int num_sites, int max_order) {
        SymFn out(num_sites, max_order);
        out.values_[0][0] = 1.0;
        return out;
    }

    /// c^|eta| (Poisson correlation function at activity c).
    static SymFn power(int num_sites, int max_order, double c) {
        return from_function(num_sites, max_order, [c](FiniteConfig e) { return std::pow(c, e.size()); });
    }

    int num_sites() const { return layout_->num_sites(); }
    int max_order() const { return layout_->max_order(); }
    std::size_t num_entries() const { return layout_->total(); }
    const std::vector<Mask>& masks(int n) const { return layout_->masks(n); }
    const SymFnLayout& layout() const { return *layout_; }

    double value(Mask m) const {
        const int n = std::popcount(m);
        if (n > max_order()) return 0.0;
        return values_[n][colex_rank(m)];
    }
    double operator()(FiniteConfig eta) const { return value(eta.mask()); }

    void set(FiniteConfig eta, double v) { slot(eta) = v; }
    double& slot(FiniteConfig eta) {
        const int n = eta.size();
        if (n > max_order())
            throw DomainError("SymFn: order " + std::to_string(n) + " above max_order " +
                              std::to_string(max_order()));
        if (eta.extent() > num_sites()) throw DomainError("SymFn: site outside the box");
        return values_[n][colex_rank(eta.mask())];
    }

    std::span<const double> component(int n) const { return values_[n]; }
    std::span<double> component(int n) { return values_[n]; }

    /// f(FiniteConfig, double) for every stored entry, by order then colex.
    template <class F>
    void for_each(F&& f) const {
        for (int n = 0; n <= max_order(); ++n) {
            const auto& ms = masks(n);
            for (std::size_t i = 0; i < ms.size(); ++i) f(FiniteConfig::from_mask(ms[i]), values_[n][i]);
        }
    }

    bool all_finite() const {
        for (const auto& c : values_)
            for (double v : c)
                if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const SymFn& o) const { return layout_ == o.layout_; }

    SymFn& operator+=(const SymFn& o) { return combine(o, 1.0); }
    SymFn& operator-=(const SymFn& o) { return combine(o, -1.0); }
    SymFn& operator*=(double s) {
        for (auto& c : values_)
            for (double& v : c) v *= s;
        return *this;
    }
    friend SymFn operator+(SymFn a, const SymFn& b) { return a += b; }
    friend SymFn operator-(SymFn a, const SymFn& b) { return a -= b; }
    friend SymFn operator*(SymFn a, double s) { return a *= s; }
    friend SymFn operator*(double s, SymFn a) { return a *= s; }

    friend bool operator==(const SymFn& a, const SymFn& b) {
        return a.num_sites() == b.num_sites() && a.max_order() == b.max_order() && a.values_ == b.values_;
    }

private:
    SymFn& combine(const SymFn& o, double sign) {
        if (!same_shape(o)) throw std::invalid_argument("SymFn shapes differ");
        for (std::size_t n = 0; n < values_.size(); ++n)
            for (std::size_t i = 0; i < values_[n].size(); ++i) values_[n][i] += sign * o.values_[n][i];
        return *this;
    }

    std::shared_ptr<const SymFnLayout> layout_;
    std::vector<std::vector<double>> values_;
};

}  // namespace glauber
