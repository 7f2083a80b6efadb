#pragma once

/**
 * @file
 *
 * @brief Independent ground truth for the hierarchy: exact finite-volume Gibbs
 * correlations, a Gillespie simulation of the lattice birth-death chain, and a
 * positive-definiteness probe on local occupation patterns.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "config.hpp"
#include "detail/parallel.hpp"
#include "lattice.hpp"
#include "operators.hpp"
#include "regime.hpp"
#include "symfn.hpp"

namespace glauber {

/// Per-site weight of the lattice Gibbs measure.
///  - lattice: w = z h, the stationary law of the chain with birth rate
///    z h e^{-E} per empty site and unit death rate.
///  - continuum_matched: w = z h / (1 - z h); reduces to k(eta) = z^|eta| at
///    phi == 0, the fixed point of the excluded-diagonal hierarchy operators.
enum class SiteWeight { lattice, continuum_matched };

struct GibbsSpec {
    static constexpr int kMaxSites = 16;

    double z = 0.0;
    Potential pot;
    DomainSpec dom;
    SiteWeight convention = SiteWeight::lattice;

    double site_weight() const {
        const double zh = z * dom.point_weight();
        if (convention == SiteWeight::lattice) return zh;
        if (!(zh < 1.0)) throw DomainError("continuum_matched weight needs z h < 1");
        return zh / (1.0 - zh);
    }
};

/// k_mu(eta) = P(eta subset gamma) / h^|eta| under the finite-volume measure
/// proportional to w^|gamma| exp(-E(gamma)), by full enumeration.
inline SymFn exact_gibbs_correlations(const GibbsSpec& spec, int max_order) {
    const int M = spec.dom.num_sites;
    if (M > GibbsSpec::kMaxSites) throw DomainError("Gibbs enumeration limited to 16 sites");
    if (!(spec.z > 0.0)) throw DomainError("activity must be positive");
    const double w = spec.site_weight();
    const double h = spec.dom.point_weight();
    const std::size_t count = std::size_t{1} << M;

    // Unnormalized weights; E(gamma) = E(gamma \ x) + E(x, gamma \ x) with x the lowest site.
    std::vector<double> energy(count, 0.0), weight(count, 0.0);
    weight[0] = 1.0;
    for (std::size_t g = 1; g < count; ++g) {
        const Site x = std::countr_zero(g);
        const std::size_t rest = g & (g - 1);
        double e = energy[rest];
        for (std::size_t m = rest; m; m &= m - 1) e += spec.pot(x - std::countr_zero(m));
        energy[g] = e;
        weight[g] = std::pow(w, std::popcount(g)) * std::exp(-e);
    }
    detail::CompensatedSum xi;
    for (double v : weight) xi += v;
    const double partition = xi.value();

    // Superset sums: S(eta) = sum_{gamma >= eta} weight(gamma).
    std::vector<double> sup = weight;
    for (int bit = 0; bit < M; ++bit)
        for (std::size_t g = 0; g < count; ++g)
            if (!((g >> bit) & 1u)) sup[g] += sup[g | (std::size_t{1} << bit)];

    return SymFn::from_function(M, max_order, [&](FiniteConfig eta) {
        return sup[eta.mask()] / partition / std::pow(h, eta.size());
    });
}

struct FixedPointResidual {
    double residual = 0.0;   // ||L_hat_star k_mu||_{K_C}
    double tolerance = 0.0;  // truncation bound tau_residual
};

/// ||L_hat_star k_mu||_{K_C} with the truncation bound
/// tau = (z/C) ||k_mu|| max_n n T(min(xi_cap, N_max - n + 1)).
inline FixedPointResidual gibbs_fixed_point_residual(const SymFn& k_mu, const OperatorParams& p, const Potential& pot,
                                                     const DomainSpec& dom, double C) {
    FixedPointResidual r;
    r.residual = norm_K_C(apply_L_hat_star(k_mu, p, pot, dom), C);
    const double cphi = c_phi(pot, dom);
    const double nk = norm_K_C(k_mu, C);
    double worst = 0.0;
    for (int n = 1; n <= k_mu.max_order(); ++n) {
        const int cap = std::min(p.xi_cap, k_mu.max_order() - n + 1);
        worst = std::max(worst, n * truncation_tail_bound(C, cphi, cap));
    }
    r.tolerance = p.z / C * nk * worst;
    return r;
}

struct McConfig {
    DomainSpec dom;
    Potential pot;
    double z = 0.0;
    double t_end = 0.0;
    double burn_in = 0.0;
    std::uint64_t seed = 0;
    int replicas = 1;
    int batches = 32;  // batch-means blocks per replica

    void validate() const {
        dom.validate();
        if (!(z >= 0.0)) throw DomainError("activity must be nonnegative");
        if (!(burn_in >= 0.0 && t_end > burn_in)) throw DomainError("need t_end > burn_in >= 0");
        if (replicas < 1) throw DomainError("replicas must be >= 1");
        if (batches < 2) throw DomainError("batches must be >= 2");
    }
};

struct McResult {
    SymFn estimate;
    SymFn std_error;
    long events_after_burn_in = 0;
    long events_total = 0;
    long births = 0;
    long deaths = 0;
    bool absorbed = false;
};

namespace detail {

// 53-bit uniform in [0, 1) from a 64-bit engine; independent of the standard
// library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct ReplicaTally {
    std::vector<std::vector<double>> batch_time;  // [batch][flat entry]
    long events_after = 0, events_total = 0, births = 0, deaths = 0;
    bool absorbed = false;
};

inline ReplicaTally run_replica(const McConfig& cfg, int max_order, std::uint64_t seed, const SymFn& shape) {
    const int M = cfg.dom.num_sites;
    const double zh = cfg.z * cfg.dom.point_weight();
    std::mt19937_64 rng(seed);
    std::vector<double> energy(M, 0.0);
    Mask gamma = 0;

    // Flat offset per order, for indexing tallies.
    std::vector<std::size_t> offset(max_order + 2, 0);
    for (int n = 0; n <= max_order; ++n) offset[n + 1] = offset[n] + shape.masks(n).size();

    ReplicaTally tally;
    tally.batch_time.assign(cfg.batches, std::vector<double>(offset.back(), 0.0));
    const double span = cfg.t_end - cfg.burn_in;
    const double block = span / cfg.batches;

    auto accumulate = [&](double a, double b) {
        a = std::max(a, cfg.burn_in);
        if (b <= a) return;
        while (a < b) {
            int batch = static_cast<int>((a - cfg.burn_in) / block);
            if (batch >= cfg.batches) batch = cfg.batches - 1;
            const double batch_end = batch == cfg.batches - 1 ? cfg.t_end : cfg.burn_in + (batch + 1) * block;
            const double e = std::min(b, batch_end);
            const double dt = e - a;
            auto& row = tally.batch_time[batch];
            for_each_submask(gamma, [&](Mask s) {
                const int n = std::popcount(s);
                if (n <= max_order) row[offset[n] + colex_rank(s)] += dt;
            });
            if (e <= a) break;
            a = e;
        }
    };

    std::vector<double> birth(M, 0.0);
    double t = 0.0;
    while (true) {
        const int n = std::popcount(gamma);
        double birth_total = 0.0;
        for (int x = 0; x < M; ++x) {
            birth[x] = ((gamma >> x) & 1u) ? 0.0 : zh * std::exp(-energy[x]);
            birth_total += birth[x];
        }
        const double total = n + birth_total;
        if (!std::isfinite(total)) throw std::overflow_error("mc_birth_death: rate overflow");
        if (total == 0.0) {
            tally.absorbed = true;
            accumulate(t, cfg.t_end);
            break;
        }
        const double dt = -std::log1p(-uniform01(rng)) / total;
        const double t_next = t + dt;
        accumulate(t, std::min(t_next, cfg.t_end));
        if (t_next >= cfg.t_end) break;
        t = t_next;
        double u = uniform01(rng) * total;
        Site target = -1;
        bool is_death = false;
        if (u < n) {
            // Death: the floor(u)-th particle.
            int idx = std::min(static_cast<int>(u), n - 1);
            Mask m = gamma;
            for (int i = 0; i < idx; ++i) m &= m - 1;
            target = std::countr_zero(m);
            is_death = true;
        } else {
            u -= n;
            for (int x = 0; x < M; ++x) {
                if (birth[x] == 0.0) continue;
                target = x;
                if (u < birth[x]) break;
                u -= birth[x];
            }
        }
        const double sign = is_death ? -1.0 : 1.0;
        for (int x = 0; x < M; ++x)
            if (x != target) energy[x] += sign * cfg.pot(x - target);
        gamma ^= Mask{1} << target;
        ++tally.events_total;
        if (t >= cfg.burn_in) ++tally.events_after;
        (is_death ? tally.deaths : tally.births)++;
    }
    return tally;
}

}  // namespace detail

/// Gillespie simulation of the lattice birth-death chain (unit death rate per
/// particle, birth rate z h e^{-E(x, gamma)} per empty site x) from the empty
/// configuration. k^(n) is estimated by time-averaged occupation of each set
/// divided by h^n, with batch-means standard errors over all replica batches.
inline McResult mc_birth_death(const McConfig& cfg, int n_est = 2) {
    cfg.validate();
    const int M = cfg.dom.num_sites;
    const int top = std::min(n_est, M);
    McResult res;
    res.estimate = SymFn(M, top);
    res.std_error = SymFn(M, top);

    std::vector<detail::ReplicaTally> tallies(cfg.replicas);
    parallel_for(
        cfg.replicas,
        [&](std::size_t r) {
            tallies[r] = detail::run_replica(cfg, top, cfg.seed ^ static_cast<std::uint64_t>(r), res.estimate);
        },
        1);

    const double block = (cfg.t_end - cfg.burn_in) / cfg.batches;
    const double h = cfg.dom.point_weight();
    const std::size_t nb = static_cast<std::size_t>(cfg.replicas) * cfg.batches;
    std::size_t flat = 0;
    for (int n = 0; n <= top; ++n) {
        auto est = res.estimate.component(n);
        auto se = res.std_error.component(n);
        const double scale = 1.0 / (block * std::pow(h, n));
        for (std::size_t i = 0; i < est.size(); ++i, ++flat) {
            double mean = 0.0;
            for (const auto& t : tallies)
                for (const auto& row : t.batch_time) mean += row[flat] * scale;
            mean /= nb;
            double var = 0.0;
            for (const auto& t : tallies)
                for (const auto& row : t.batch_time) {
                    const double d = row[flat] * scale - mean;
                    var += d * d;
                }
            var /= (nb - 1);
            est[i] = mean;
            se[i] = std::sqrt(var / nb);
        }
    }
    for (const auto& t : tallies) {
        res.events_after_burn_in += t.events_after;
        res.events_total += t.events_total;
        res.births += t.births;
        res.deaths += t.deaths;
        res.absorbed = res.absorbed || t.absorbed;
    }
    return res;
}

struct PositivityResult {
    std::vector<FiniteConfig> patterns;  // xi subset Lambda
    std::vector<double> values;          // <<G_xi, k>>, G_xi = K^{-1} 1{gamma n Lambda = xi}
    double min_value = 0.0;
    double sum = 0.0;
    double tolerance = 0.0;  // tau_pos
};

/// Pairs k with G_xi = K^{-1}F_xi for every indicator F_xi(gamma) = 1{gamma n Lambda = xi}.
/// For a correlation function these are the local occupation-pattern
/// probabilities. tau_pos = ||k||_{K_C} sum_{n > N_max} C(|Lambda|, n) (C h)^n + 1e-9.
inline PositivityResult positivity_probe(const SymFn& k, FiniteConfig window, PairingWeights weights,
                                         double C = 2.0) {
    constexpr int kMaxWindow = 10;
    if (window.size() > kMaxWindow) throw DomainError("positivity window limited to 10 sites");
    if (window.extent() > k.num_sites()) throw DomainError("positivity window outside the box");
    const int top = k.max_order();
    const double w = weights.weight_per_point;

    PositivityResult r;
    std::vector<Mask> support;  // eta subset Lambda, |eta| <= N_max
    for_each_submask(window.mask(), [&](Mask s) {
        if (std::popcount(s) <= top) support.push_back(s);
    });
    const std::size_t count = std::size_t{1} << window.size();
    r.patterns.reserve(count);
    r.values.reserve(count);
    for_each_submask(window.mask(), [&](Mask xi) {
        const FiniteConfig pattern = FiniteConfig::from_mask(xi);
        const SubsetTable indicator(window, [&](FiniteConfig s) { return s == pattern ? 1.0 : 0.0; });
        detail::CompensatedSum acc;
        for (Mask eta : support) {
            if ((eta & xi) != xi) continue;  // G_xi vanishes unless xi subset eta
            const FiniteConfig e = FiniteConfig::from_mask(eta);
            acc += k_inverse(indicator, e) * k(e) * std::pow(w, e.size());
        }
        r.patterns.push_back(pattern);
        r.values.push_back(acc.value());
    });
    detail::CompensatedSum total;
    r.min_value = std::numeric_limits<double>::infinity();
    for (double v : r.values) {
        total += v;
        r.min_value = std::min(r.min_value, v);
    }
    r.sum = total.value();
    const auto& binom = Binomial::table();
    double tail = 0.0;
    for (int n = top + 1; n <= window.size(); ++n) tail += binom(window.size(), n) * std::pow(C * w, n);
    r.tolerance = norm_K_C(k, C) * tail + 1e-9;
    return r;
}

}  // namespace glauber
