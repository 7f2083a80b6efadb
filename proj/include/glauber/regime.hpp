#pragma once

/**
 * @file
 *
 * @brief Parameter-regime conditions for the correlation-function evolution.
 *
 * All quantities are closed-form in (z, C, C_phi) except the two roots of
 * x exp(-x) = z C_phi, which are bracketed by bisection.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace glauber {

/// A violated regime inequality; the message names the inequality and its margin.
class RegimeError : public std::runtime_error {
public:
    RegimeError(std::string inequality, double margin)
        : std::runtime_error(describe(inequality, margin)), inequality_(std::move(inequality)), margin_(margin) {}

    const std::string& inequality() const { return inequality_; }
    double margin() const { return margin_; }

private:
    static std::string describe(const std::string& what, double margin) {
        std::ostringstream os;
        os.precision(10);
        os << "regime violated: " << what << " (margin " << margin << ")";
        return os.str();
    }
    std::string inequality_;
    double margin_;
};

struct ContractionCheck {
    bool pass = false;
    double bound_single = 0.0;  // C exp(-C c_phi)
    double bound_double = 0.0;  // 2C exp(-2 C c_phi)
    double margin = 0.0;        // min(bounds) - z
};

/// z <= min{C e^{-C c_phi}, 2C e^{-2C c_phi}}.
inline ContractionCheck check_contraction_condition(double z, double C, double cphi) {
    if (!(C > 1.0)) throw std::domain_error("contraction condition requires C > 1");
    ContractionCheck r;
    r.bound_single = C * std::exp(-C * cphi);
    r.bound_double = 2.0 * C * std::exp(-2.0 * C * cphi);
    r.margin = std::min(r.bound_single, r.bound_double) - z;
    r.pass = r.margin >= 0.0;
    return r;
}

struct NewZCheck {
    bool pass = true;
    bool applies = false;  // C c_phi <= ln 2
    double bound = 0.0;    // C e^{-C c_phi}
    double margin = 0.0;
};

/// If C c_phi <= ln 2, require z < C e^{-C c_phi} strictly.
inline NewZCheck check_new_z(double z, double C, double cphi) {
    NewZCheck r;
    r.bound = C * std::exp(-C * cphi);
    r.margin = r.bound - z;
    r.applies = C * cphi <= std::numbers::ln2;
    r.pass = !r.applies || z < r.bound;
    return r;
}

struct XexpRoots {
    double x1 = 0.0;
    double x2 = 0.0;
};

/// The two roots 0 < x1 < 1 < x2 of x e^{-x} = c, for 0 < c < 1/e.
inline XexpRoots roots_xexp(double c) {
    const double peak = std::exp(-1.0);
    if (!(c > 0.0) || !(c < peak))
        throw std::domain_error("roots_xexp requires 0 < c < 1/e");
    auto f = [c](double x) { return x * std::exp(-x) - c; };
    auto bisect = [&](double lo, double hi, bool increasing) {
        for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const bool below = f(mid) < 0.0;
            if (below == increasing)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    XexpRoots r;
    r.x1 = bisect(0.0, 1.0, true);
    double upper = 2.0;
    while (f(upper) >= 0.0) upper *= 2.0;
    r.x2 = bisect(1.0, upper, false);
    return r;
}

/// x1 < a C c_phi < C c_phi < 2 a C c_phi < 2 C c_phi <= x2.
inline bool alpha_chain_holds(double alpha, double C, double cphi, const XexpRoots& roots) {
    const double a = C * cphi;
    return roots.x1 < alpha * a && alpha * a < a && a < 2.0 * alpha * a && 2.0 * alpha * a < 2.0 * a &&
           2.0 * a <= roots.x2;
}

/// The alpha_0 case formula without checking the contraction hypotheses.
/// c_phi == 0 gives max{1/2, 1/C}.
inline double alpha0_formula(double z, double C, double cphi) {
    if (cphi == 0.0) return std::max(0.5, 1.0 / C);
    const double a = C * cphi;
    if (a > 1.0) return std::max({0.5, 1.0 / a, 1.0 / C});
    const XexpRoots roots = roots_xexp(z * cphi);
    if (a <= roots.x1) throw RegimeError("x1 < C*c_phi", a - roots.x1);
    return std::max({0.5, roots.x1 / a, 1.0 / C});
}

/// alpha_0 such that K_{alpha C} is invariant for every alpha in (alpha_0, 1).
inline double alpha0(double z, double C, double cphi) {
    const auto cc = check_contraction_condition(z, C, cphi);
    if (!cc.pass) throw RegimeError("z <= min{C e^{-C c_phi}, 2C e^{-2C c_phi}}", cc.margin);
    const auto nz = check_new_z(z, C, cphi);
    if (!nz.pass) throw RegimeError("z < C e^{-C c_phi} when C c_phi <= ln 2", nz.margin);
    const double a0 = alpha0_formula(z, C, cphi);
    if (!(a0 < 1.0)) throw RegimeError("alpha_0 < 1", 1.0 - a0);
    if (cphi > 0.0) {
        const XexpRoots roots = roots_xexp(z * cphi);
        const double probe = a0 + 0.5 * (1.0 - a0) * 1e-6;
        if (!alpha_chain_holds(probe, C, cphi, roots))
            throw RegimeError("x1 < aCc < Cc < 2aCc < 2Cc <= x2", roots.x2 - 2.0 * C * cphi);
    }
    return a0;
}

/// nu* = z e^{C c_phi} / C, the smallest admissible strict-contraction parameter.
inline double nu_star(double z, double C, double cphi) {
    const double nu = z * std::exp(C * cphi) / C;
    if (!(nu < 1.0)) throw RegimeError("nu* = z e^{C c_phi}/C < 1", 1.0 - nu);
    return nu;
}

struct LowActivityCheck {
    bool pass = false;
    double value = 0.0;      // z c_phi
    double threshold = 0.0;  // 1/(2e)
};

/// z c_phi < (2e)^{-1}.
inline LowActivityCheck check_low_activity(double z, double cphi) {
    LowActivityCheck r;
    r.value = z * cphi;
    r.threshold = 0.5 / std::numbers::e;
    r.pass = r.value < r.threshold;
    return r;
}

/// Everything the theorems need, derived once.
struct RegimeReport {
    double z = 0.0;
    double C = 0.0;
    double cphi = 0.0;
    ContractionCheck contraction;
    NewZCheck new_z;
    LowActivityCheck low_activity;
    std::optional<XexpRoots> roots;    // present when 0 < z c_phi < 1/e
    std::optional<double> alpha0;      // set when the contraction hypotheses hold
    double alpha0_unchecked = 0.0;     // case formula regardless of hypotheses (NaN if undefined)
    double nu = 0.0;                   // nu* (may be >= 1)
    bool nu_valid = false;             // nu* < 1 and z <= 2C e^{-2C c_phi}
    double rate = 0.0;                 // 1 - nu*

    bool evolution_valid() const { return contraction.pass && new_z.pass && alpha0.has_value(); }
    bool ergodicity_valid() const { return nu_valid && low_activity.pass; }
};

inline RegimeReport derive_regime(double z, double C, double cphi) {
    RegimeReport r;
    r.z = z;
    r.C = C;
    r.cphi = cphi;
    r.contraction = check_contraction_condition(z, C, cphi);
    r.new_z = check_new_z(z, C, cphi);
    r.low_activity = check_low_activity(z, cphi);
    const double c = z * cphi;
    if (c > 0.0 && c < std::exp(-1.0)) r.roots = roots_xexp(c);
    try {
        r.alpha0_unchecked = alpha0_formula(z, C, cphi);
    } catch (const std::exception&) {
        r.alpha0_unchecked = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        r.alpha0 = glauber::alpha0(z, C, cphi);
    } catch (const std::exception&) {
    }
    r.nu = z * std::exp(C * cphi) / C;
    r.nu_valid = r.nu < 1.0 && z <= r.contraction.bound_double;
    r.rate = 1.0 - r.nu;
    return r;
}

}  // namespace glauber
