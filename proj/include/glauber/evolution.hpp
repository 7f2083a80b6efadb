#pragma once

/**
 * @file
 *
 * @brief Time evolution by iterating P_delta_star (dual) or P_delta (forward),
 * with contraction, invariance and ergodic-decay audits.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "lattice.hpp"
#include "operators.hpp"
#include "symfn.hpp"

namespace glauber {

class EvolutionError : public std::runtime_error {
public:
    EvolutionError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// [t / delta], robust to t being an exact multiple of delta in decimal.
inline long step_count(double t_end, double delta) {
    if (t_end < 0.0) throw DomainError("t_end must be nonnegative");
    return static_cast<long>(std::floor(t_end / delta + 1e-9));
}

/// Norms recorded by evolve_star.
struct NormAudit {
    double C = 2.0;
    double alpha = 1.0;
    std::optional<SymFn> reference;  // k_ref for the distance column
};

struct NormRecord {
    double t = 0.0;
    double norm_C = 0.0;
    double norm_alphaC = 0.0;
    double dist_ref = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
    std::vector<double> times;   // snapshot times
    std::vector<SymFn> states;   // snapshots
    std::vector<NormRecord> norm_log;  // every step, including t = 0
    long steps = 0;
};

/// Applies P_delta_star [t_end / delta] times to k0. Snapshots every `stride`
/// steps (and the final state); norms every step.
inline Trajectory evolve_star(const SymFn& k0, double t_end, const OperatorParams& p, const Potential& pot,
                              const DomainSpec& dom, long stride = 1, const NormAudit& audit = {}) {
    if (stride < 1) throw DomainError("stride must be >= 1");
    if (!k0.all_finite()) throw EvolutionError("initial condition has non-finite entries", 0);
    const long steps = step_count(t_end, p.delta);
    Trajectory tr;
    tr.steps = steps;
    auto record = [&](long j, const SymFn& k) {
        NormRecord r;
        r.t = j * p.delta;
        r.norm_C = norm_K_C(k, audit.C);
        r.norm_alphaC = norm_K_C(k, audit.alpha * audit.C);
        if (audit.reference) r.dist_ref = norm_K_C(k - *audit.reference, audit.C);
        tr.norm_log.push_back(r);
    };
    SymFn k = k0;
    tr.times.push_back(0.0);
    tr.states.push_back(k);
    record(0, k);
    for (long j = 1; j <= steps; ++j) {
        k = apply_P_delta_star(k, p, pot, dom);
        if (!k.all_finite()) throw EvolutionError("non-finite value at step " + std::to_string(j), j);
        record(j, k);
        if (j % stride == 0 || j == steps) {
            tr.times.push_back(j * p.delta);
            tr.states.push_back(k);
        }
    }
    return tr;
}

/// (P_delta)^{[t_end / delta]} G0.
inline SymFn evolve_forward(const SymFn& G0, double t_end, const OperatorParams& p, const Potential& pot,
                            const DomainSpec& dom) {
    const long steps = step_count(t_end, p.delta);
    SymFn G = G0;
    for (long j = 1; j <= steps; ++j) {
        G = apply_P_delta(G, p, pot, dom);
        if (!G.all_finite()) throw EvolutionError("non-finite value at step " + std::to_string(j), j);
    }
    return G;
}

/// Per-unit-norm truncation tolerance: tail bound of the inner xi sums plus
/// 10 machine epsilons per floating operation of one step.
inline double audit_tolerance(const SymFn& shape, const OperatorParams& p, double C, double cphi) {
    const auto& binom = Binomial::table();
    double inner = 0.0;
    for (int j = 0; j <= p.xi_cap; ++j) inner += static_cast<double>(binom(shape.num_sites(), j));
    const double ops = static_cast<double>(shape.num_entries()) * std::pow(2.0, shape.max_order()) * inner;
    return truncation_tail_bound(C, cphi, p.xi_cap) + 10.0 * std::numeric_limits<double>::epsilon() * ops;
}

struct ContractionAudit {
    double max_ratio = 0.0;
    double bound = 0.0;      // 1 - (1 - nu*) delta
    double tolerance = 0.0;  // tau
    bool pass = false;
    bool pass_strict = false;  // without tau
};

/// max over samples of ||P_delta_star k||_{K_C} / ||k||_{K_C} for k with k(empty) = 0.
inline ContractionAudit contraction_audit(const std::vector<SymFn>& samples, const OperatorParams& p,
                                          const Potential& pot, const DomainSpec& dom, double C) {
    const double cphi = c_phi(pot, dom);
    ContractionAudit a;
    a.bound = 1.0 - (1.0 - p.z * std::exp(C * cphi) / C) * p.delta;
    for (const SymFn& k : samples) {
        if (k.value(0) != 0.0) throw DomainError("contraction_audit: sample with k(empty) != 0");
        const double nk = norm_K_C(k, C);
        if (nk == 0.0) continue;
        a.max_ratio = std::max(a.max_ratio, norm_K_C(apply_P_delta_star(k, p, pot, dom), C) / nk);
        a.tolerance = std::max(a.tolerance, audit_tolerance(k, p, C, cphi));
    }
    a.pass = a.max_ratio <= a.bound + a.tolerance;
    a.pass_strict = a.max_ratio <= a.bound;
    return a;
}

/// Least-squares slope of log(values) against times.
inline double fit_log_slope(const std::vector<double>& times, const std::vector<double>& values) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(values[i] > 0.0)) continue;
        const double y = std::log(values[i]);
        st += times[i];
        sy += y;
        stt += times[i] * times[i];
        sty += times[i] * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = n * stt - st * st;
    return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sty - st * sy) / den;
}

struct DecayReport {
    std::vector<double> times;
    std::vector<double> errors;  // e(t) = ||k_t - k_mu||_{K_C}
    double e0 = 0.0;
    double rate = 0.0;       // guaranteed rate 1 - nu*
    double tolerance = 0.0;  // tau, absolute
    double max_excess = 0.0;  // max_t e(t) - e^{-rate t} e(0)
    bool bound_holds = false; // e(t) <= e^{-rate t} e(0) + 10 tau everywhere
    double fitted_slope = std::numeric_limits<double>::quiet_NaN();
    double fit_t0 = 0.0;
    double fit_t1 = 0.0;
    bool slope_holds = false;  // fitted_slope <= -rate + slope_tolerance
    bool trivially_converged = false;
    Trajectory trajectory;
};

/// Evolves k0 and measures e(t) against k_mu. The slope is fitted on the
/// middle third of [0, t_end], keeping only points with e(t) > 100 tau when
/// any exist.
inline DecayReport ergodic_decay_report(const SymFn& k0, const SymFn& k_mu, double t_end, const OperatorParams& p,
                                        const Potential& pot, const DomainSpec& dom, double C,
                                        double slope_tolerance = 0.05, long stride = 0) {
    const double cphi = c_phi(pot, dom);
    DecayReport r;
    r.rate = 1.0 - p.z * std::exp(C * cphi) / C;
    r.e0 = norm_K_C(k0 - k_mu, C);
    if (r.e0 == 0.0) {
        r.trivially_converged = true;
        r.bound_holds = r.slope_holds = true;
        return r;
    }
    NormAudit audit;
    audit.C = C;
    audit.reference = k_mu;
    const long steps = step_count(t_end, p.delta);
    r.trajectory = evolve_star(k0, t_end, p, pot, dom, stride > 0 ? stride : std::max(1L, steps), audit);
    r.tolerance = audit_tolerance(k0, p, C, cphi) * r.e0;
    for (const auto& rec : r.trajectory.norm_log) {
        r.times.push_back(rec.t);
        r.errors.push_back(rec.dist_ref);
        const double excess = rec.dist_ref - std::exp(-r.rate * rec.t) * r.e0;
        r.max_excess = std::max(r.max_excess, excess);
    }
    r.bound_holds = r.max_excess <= 10.0 * r.tolerance;

    r.fit_t0 = t_end / 3.0;
    r.fit_t1 = 2.0 * t_end / 3.0;
    std::vector<double> ft, fe, ft_all, fe_all;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (r.times[i] < r.fit_t0 - 1e-12 || r.times[i] > r.fit_t1 + 1e-12) continue;
        ft_all.push_back(r.times[i]);
        fe_all.push_back(r.errors[i]);
        if (r.errors[i] > 100.0 * r.tolerance) {
            ft.push_back(r.times[i]);
            fe.push_back(r.errors[i]);
        }
    }
    r.fitted_slope = ft.size() >= 2 ? fit_log_slope(ft, fe) : fit_log_slope(ft_all, fe_all);
    r.slope_holds = std::isfinite(r.fitted_slope) && r.fitted_slope <= -r.rate + slope_tolerance;
    return r;
}

/// max over snapshots of ||k_t||_{K_{alpha C}}.
inline double invariance_audit(const Trajectory& tr, double alpha, double C) {
    double m = 0.0;
    for (const SymFn& k : tr.states) m = std::max(m, norm_K_C(k, alpha * C));
    return m;
}

}  // namespace glauber
