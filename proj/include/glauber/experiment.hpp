#pragma once

/**
 * @file
 *
 * @brief Experiment configuration, scenario runner and bundle comparison.
 *
 * A run writes a result bundle directory:
 *  - config.json    the resolved configuration without the output path
 *  - manifest.json  config echo, derived parameters, tolerances, audit verdicts
 *  - audits.csv     name,value,bound,margin,pass
 *  - regime.csv     quantity,value,bound,margin,pass
 * plus scenario-specific tables documented in the README. Every file is a
 * pure function of the configuration and seed.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "calculus.hpp"
#include "evolution.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "operators.hpp"
#include "oracles.hpp"
#include "regime.hpp"
#include "symfn.hpp"

namespace glauber {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scenario { evolve, ergodicity, fixed_point, mc_compare, positivity, regime_report };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::evolve: return "evolve";
        case Scenario::ergodicity: return "ergodicity";
        case Scenario::fixed_point: return "fixed-point";
        case Scenario::mc_compare: return "mc-compare";
        case Scenario::positivity: return "positivity";
        case Scenario::regime_report: return "regime-report";
    }
    return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
    for (Scenario v : {Scenario::evolve, Scenario::ergodicity, Scenario::fixed_point, Scenario::mc_compare,
                       Scenario::positivity, Scenario::regime_report})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown scenario '" + s + "'");
}

inline const char* to_string(SiteWeight w) { return w == SiteWeight::lattice ? "lattice" : "continuum_matched"; }

inline SiteWeight site_weight_from_string(const std::string& s) {
    if (s == "lattice") return SiteWeight::lattice;
    if (s == "continuum_matched") return SiteWeight::continuum_matched;
    throw ConfigError("unknown Gibbs weight '" + s + "' (expected lattice or continuum_matched)");
}

struct InitialCondition {
    enum class Kind { poisson, gibbs, file };
    Kind kind = Kind::poisson;
    double z0 = 0.0;
    SiteWeight weight = SiteWeight::lattice;  // gibbs only
    std::string path;                         // file only
};

struct McSection {
    double t_end = 0.0;
    double burn_in = 0.0;
    int replicas = 1;
    int batches = 32;
    int n_est = 2;
    long min_events = 0;
};

struct PositivitySection {
    std::vector<Site> window;
    std::vector<double> times;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::regime_report;
    DomainSpec domain;
    Potential potential;
    double z = 0.0;
    double C = 0.0;
    std::optional<double> alpha;  // nullopt: auto
    std::optional<double> delta;  // nullopt: auto
    int n_max = 0;
    std::optional<int> n_xi;  // nullopt: auto
    double t_end = 0.0;
    long stride = 1;
    InitialCondition initial;
    SiteWeight reference = SiteWeight::continuum_matched;
    int contraction_samples = 20;
    std::optional<McSection> mc;
    std::optional<PositivitySection> positivity;
    std::string output;
    std::uint64_t seed = 0;

    static ExperimentConfig from_json(const Json& j);
    static ExperimentConfig load(const std::string& path);
    Json to_json() const;
};

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    return obj.at(key);
}

inline double number(const Json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    return v.get<double>();
}

inline long integer(const Json& v, const std::string& what) {
    if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
    return v.get<long>();
}

inline std::string text(const Json& v, const std::string& what) {
    if (!v.is_string()) throw ConfigError(what + " must be a string");
    return v.get<std::string>();
}

// "auto" or a number.
inline std::optional<double> auto_number(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
    return number(v, where + "." + key);
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    using namespace detail;
    check_keys(j, {"scenario", "seed", "output", "domain", "potential", "params", "initial", "reference", "contraction",
                   "mc", "positivity"},
               "config");
    ExperimentConfig c;
    try {
        if (j.contains("scenario")) c.scenario = scenario_from_string(text(j.at("scenario"), "scenario"));
        if (j.contains("seed")) {
            const Json& s = j.at("seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
                throw ConfigError("seed must be a nonnegative integer");
            c.seed = s.get<std::uint64_t>();
        }
        if (j.contains("output")) c.output = text(j.at("output"), "output");

        const Json& d = require(j, "domain", "config");
        check_keys(d, {"num_sites", "spacing", "dimension"}, "domain");
        c.domain.num_sites = static_cast<int>(integer(require(d, "num_sites", "domain"), "domain.num_sites"));
        c.domain.spacing = number(require(d, "spacing", "domain"), "domain.spacing");
        if (d.contains("dimension")) c.domain.dimension = static_cast<int>(integer(d.at("dimension"), "domain.dimension"));
        c.domain.validate();

        const Json& p = require(j, "potential", "config");
        check_keys(p, {"range_sites", "values"}, "potential");
        const Json& vals = require(p, "values", "potential");
        if (!vals.is_array() || vals.empty()) throw ConfigError("potential.values must be a nonempty array");
        std::vector<double> table;
        for (const auto& v : vals) table.push_back(number(v, "potential.values[]"));
        if (p.contains("range_sites")) {
            const long R = integer(p.at("range_sites"), "potential.range_sites");
            if (R + 1 != static_cast<long>(table.size()))
                throw ConfigError("potential.range_sites must equal len(values) - 1");
        }
        c.potential = Potential(std::move(table));

        const Json& q = require(j, "params", "config");
        check_keys(q, {"z", "C", "alpha", "delta", "n_max", "n_xi", "t_end", "stride"}, "params");
        c.z = number(require(q, "z", "params"), "params.z");
        c.C = number(require(q, "C", "params"), "params.C");
        c.n_max = static_cast<int>(integer(require(q, "n_max", "params"), "params.n_max"));
        c.alpha = auto_number(q, "alpha", "params");
        c.delta = auto_number(q, "delta", "params");
        if (auto nx = auto_number(q, "n_xi", "params")) {
            if (*nx != std::floor(*nx)) throw ConfigError("params.n_xi must be an integer or \"auto\"");
            c.n_xi = static_cast<int>(*nx);
        }
        if (q.contains("t_end")) c.t_end = number(q.at("t_end"), "params.t_end");
        if (q.contains("stride")) c.stride = integer(q.at("stride"), "params.stride");
        if (!(c.z > 0.0)) throw ConfigError("params.z must be positive");
        if (!(c.C > 1.0)) throw ConfigError("params.C must exceed 1");
        if (c.n_max < 1 || c.n_max > c.domain.num_sites) throw ConfigError("params.n_max must lie in [1, num_sites]");
        if (c.alpha && !(*c.alpha > 0.0 && *c.alpha < 1.0)) throw ConfigError("params.alpha must lie in (0, 1)");
        if (c.delta && !(*c.delta > 0.0 && *c.delta < 1.0)) throw ConfigError("params.delta must lie in (0, 1)");
        if (c.n_xi && (*c.n_xi < 0 || *c.n_xi > c.n_max)) throw ConfigError("params.n_xi must lie in [0, n_max]");
        if (!(c.t_end >= 0.0)) throw ConfigError("params.t_end must be nonnegative");
        if (c.stride < 1) throw ConfigError("params.stride must be >= 1");

        if (j.contains("initial")) {
            const Json& ic = j.at("initial");
            check_keys(ic, {"kind", "z0", "weight", "path"}, "initial");
            const std::string kind = text(require(ic, "kind", "initial"), "initial.kind");
            if (kind == "poisson" || kind == "gibbs") {
                c.initial.kind = kind == "poisson" ? InitialCondition::Kind::poisson : InitialCondition::Kind::gibbs;
                c.initial.z0 = number(require(ic, "z0", "initial"), "initial.z0");
                if (!(c.initial.z0 > 0.0)) throw ConfigError("initial.z0 must be positive");
                if (ic.contains("path")) throw ConfigError("initial.path only applies to kind \"file\"");
                if (ic.contains("weight")) {
                    if (kind == "poisson") throw ConfigError("initial.weight only applies to kind \"gibbs\"");
                    c.initial.weight = site_weight_from_string(text(ic.at("weight"), "initial.weight"));
                }
            } else if (kind == "file") {
                c.initial.kind = InitialCondition::Kind::file;
                c.initial.path = text(require(ic, "path", "initial"), "initial.path");
                if (ic.contains("z0") || ic.contains("weight"))
                    throw ConfigError("initial kind \"file\" takes only a path");
            } else {
                throw ConfigError("unknown initial.kind '" + kind + "'");
            }
        } else if (c.scenario == Scenario::evolve || c.scenario == Scenario::ergodicity ||
                   c.scenario == Scenario::positivity) {
            throw ConfigError("missing key 'initial' in config");
        }
        if (j.contains("reference")) c.reference = site_weight_from_string(text(j.at("reference"), "reference"));

        if (j.contains("contraction")) {
            const Json& ct = j.at("contraction");
            check_keys(ct, {"samples"}, "contraction");
            c.contraction_samples = static_cast<int>(integer(require(ct, "samples", "contraction"), "contraction.samples"));
            if (c.contraction_samples < 0) throw ConfigError("contraction.samples must be >= 0");
        }

        if (j.contains("mc")) {
            const Json& m = j.at("mc");
            check_keys(m, {"t_end", "burn_in", "replicas", "batches", "n_est", "min_events"}, "mc");
            McSection s;
            s.t_end = number(require(m, "t_end", "mc"), "mc.t_end");
            if (m.contains("burn_in")) s.burn_in = number(m.at("burn_in"), "mc.burn_in");
            if (m.contains("replicas")) s.replicas = static_cast<int>(integer(m.at("replicas"), "mc.replicas"));
            if (m.contains("batches")) s.batches = static_cast<int>(integer(m.at("batches"), "mc.batches"));
            if (m.contains("n_est")) s.n_est = static_cast<int>(integer(m.at("n_est"), "mc.n_est"));
            if (m.contains("min_events")) s.min_events = integer(m.at("min_events"), "mc.min_events");
            if (s.n_est < 0 || s.n_est > c.domain.num_sites) throw ConfigError("mc.n_est out of range");
            c.mc = s;
        } else if (c.scenario == Scenario::mc_compare) {
            throw ConfigError("missing key 'mc' in config");
        }

        if (j.contains("positivity")) {
            const Json& ps = j.at("positivity");
            check_keys(ps, {"window", "times"}, "positivity");
            PositivitySection s;
            const Json& w = require(ps, "window", "positivity");
            if (!w.is_array()) throw ConfigError("positivity.window must be an array of sites");
            for (const auto& x : w) s.window.push_back(static_cast<Site>(integer(x, "positivity.window[]")));
            const Json& t = require(ps, "times", "positivity");
            if (!t.is_array() || t.empty()) throw ConfigError("positivity.times must be a nonempty array");
            for (const auto& x : t) s.times.push_back(number(x, "positivity.times[]"));
            if (!std::is_sorted(s.times.begin(), s.times.end()) || s.times.front() < 0.0)
                throw ConfigError("positivity.times must be nonnegative and increasing");
            FiniteConfig(s.window).check_within(c.domain);
            c.positivity = s;
        } else if (c.scenario == Scenario::positivity) {
            throw ConfigError("missing key 'positivity' in config");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    Json j;
    try {
        j = Json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return from_json(j);
}

inline Json ExperimentConfig::to_json() const {
    Json j;
    j["scenario"] = to_string(scenario);
    j["seed"] = seed;
    j["domain"] = {{"num_sites", domain.num_sites}, {"spacing", domain.spacing}, {"dimension", domain.dimension}};
    Json vals = Json::array();
    for (int r = 0; r <= potential.range_sites(); ++r) vals.push_back(potential(r));
    j["potential"] = {{"range_sites", potential.range_sites()}, {"values", vals}};
    Json q;
    q["z"] = z;
    q["C"] = C;
    q["alpha"] = alpha ? Json(*alpha) : Json("auto");
    q["delta"] = delta ? Json(*delta) : Json("auto");
    q["n_max"] = n_max;
    q["n_xi"] = n_xi ? Json(*n_xi) : Json("auto");
    q["t_end"] = t_end;
    q["stride"] = stride;
    j["params"] = q;
    Json ic;
    switch (initial.kind) {
        case InitialCondition::Kind::poisson: ic = {{"kind", "poisson"}, {"z0", initial.z0}}; break;
        case InitialCondition::Kind::gibbs:
            ic = {{"kind", "gibbs"}, {"z0", initial.z0}, {"weight", to_string(initial.weight)}};
            break;
        case InitialCondition::Kind::file: ic = {{"kind", "file"}, {"path", initial.path}}; break;
    }
    if (initial.z0 > 0.0 || initial.kind == InitialCondition::Kind::file) j["initial"] = ic;
    j["reference"] = to_string(reference);
    j["contraction"] = {{"samples", contraction_samples}};
    if (mc)
        j["mc"] = {{"t_end", mc->t_end},       {"burn_in", mc->burn_in}, {"replicas", mc->replicas},
                   {"batches", mc->batches},   {"n_est", mc->n_est},     {"min_events", mc->min_events}};
    if (positivity) j["positivity"] = {{"window", positivity->window}, {"times", positivity->times}};
    return j;
}

/// Parameters fixed by the configuration plus the regime analysis.
struct ResolvedParams {
    double cphi = 0.0;
    RegimeReport regime;
    double alpha0 = 0.0;  // the case formula; NaN when undefined
    double alpha = 1.0;
    OperatorParams op;
};

inline ResolvedParams resolve(const ExperimentConfig& c) {
    ResolvedParams r;
    r.cphi = c_phi(c.potential, c.domain);
    r.regime = derive_regime(c.z, c.C, r.cphi);
    r.alpha0 = r.regime.alpha0 ? *r.regime.alpha0 : r.regime.alpha0_unchecked;
    if (c.alpha)
        r.alpha = *c.alpha;
    else
        r.alpha = std::isfinite(r.alpha0) ? 0.5 * (r.alpha0 + 1.0) : 1.0;
    r.op.z = c.z;
    r.op.delta = c.delta ? *c.delta : OperatorParams::default_delta(c.n_max);
    r.op.xi_cap = c.n_xi ? *c.n_xi : OperatorParams::default_xi_cap(c.n_max);
    return r;
}

struct Audit {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
    double margin() const { return bound - value; }
};

struct ResultBundle {
    std::filesystem::path dir;
    Json manifest;
    std::vector<Audit> audits;
    std::vector<std::string> warnings;

    bool all_pass() const {
        return std::all_of(audits.begin(), audits.end(), [](const Audit& a) { return a.pass; });
    }
};

namespace detail {

inline Audit at_most(std::string name, double value, double bound) {
    return Audit{std::move(name), value, bound, value <= bound};
}

inline std::string sites_cell(FiniteConfig eta) {
    std::string s;
    for (Site x : eta.sites()) s += (s.empty() ? "" : " ") + std::to_string(x);
    return s;
}

inline std::string flag(bool b) { return b ? "true" : "false"; }

// Seeded samples with k(empty) = 0, entries uniform in [-1, 1) scaled by C^n;
// built from raw engine output so they do not depend on the standard library.
inline std::vector<SymFn> contraction_samples(int M, int N, int count, double C, std::uint64_t seed) {
    std::vector<SymFn> out;
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
        SymFn k(M, N);
        for (int n = 1; n <= N; ++n)
            for (double& v : k.component(n)) v = (2.0 * uniform01(rng) - 1.0) * std::pow(C, n);
        out.push_back(std::move(k));
    }
    return out;
}

inline SymFn initial_condition(const ExperimentConfig& c) {
    const int M = c.domain.num_sites;
    switch (c.initial.kind) {
        case InitialCondition::Kind::poisson: return SymFn::power(M, c.n_max, c.initial.z0);
        case InitialCondition::Kind::gibbs:
            return exact_gibbs_correlations({c.initial.z0, c.potential, c.domain, c.initial.weight}, c.n_max);
        case InitialCondition::Kind::file: {
            SymFn f = load_symfn(c.initial.path);
            if (f.num_sites() != M) throw ConfigError("initial file has a different number of sites");
            if (f.max_order() == c.n_max) return f;
            return SymFn::from_function(M, c.n_max, [&](FiniteConfig eta) { return f(eta); });
        }
    }
    throw ConfigError("bad initial condition");
}

inline void write_regime_csv(const std::filesystem::path& path, const ExperimentConfig& c, const ResolvedParams& r) {
    const RegimeReport& g = r.regime;
    CsvTable t;
    t.header = {"quantity", "value", "bound", "margin", "pass"};
    auto row = [&](const std::string& name, double value, double bound, double margin, const std::string& pass) {
        t.rows.push_back({name, format_double(value), format_double(bound), format_double(margin), pass});
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row("c_phi", r.cphi, nan, nan, "");
    row("contraction_single", c.z, g.contraction.bound_single, g.contraction.bound_single - c.z,
        flag(c.z <= g.contraction.bound_single));
    row("contraction_double", c.z, g.contraction.bound_double, g.contraction.bound_double - c.z,
        flag(c.z <= g.contraction.bound_double));
    row("new_z", c.z, g.new_z.bound, g.new_z.margin, g.new_z.applies ? flag(g.new_z.pass) : "vacuous");
    row("low_activity", g.low_activity.value, g.low_activity.threshold, g.low_activity.threshold - g.low_activity.value,
        flag(g.low_activity.pass));
    row("nu_star", g.nu, 1.0, 1.0 - g.nu, flag(g.nu_valid));
    row("rate", g.rate, nan, nan, "");
    row("x1", g.roots ? g.roots->x1 : nan, nan, nan, "");
    row("x2", g.roots ? g.roots->x2 : nan, nan, nan, "");
    row("alpha0", r.alpha0, 1.0, 1.0 - r.alpha0, flag(g.alpha0.has_value()));
    row("alpha", r.alpha, 1.0, 1.0 - r.alpha, flag(std::isfinite(r.alpha0) && r.alpha > r.alpha0 && r.alpha < 1.0));
    t.save(path.string());
}

inline void write_audits_csv(const std::filesystem::path& path, const std::vector<Audit>& audits) {
    CsvTable t;
    t.header = {"name", "value", "bound", "margin", "pass"};
    for (const Audit& a : audits)
        t.rows.push_back({a.name, format_double(a.value), format_double(a.bound), format_double(a.margin()),
                          flag(a.pass)});
    t.save(path.string());
}

inline Json derived_json(const ResolvedParams& r) {
    const RegimeReport& g = r.regime;
    Json d;
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    d["c_phi"] = r.cphi;
    d["contraction_bounds"] = {g.contraction.bound_single, g.contraction.bound_double};
    d["x1"] = g.roots ? Json(g.roots->x1) : Json(nullptr);
    d["x2"] = g.roots ? Json(g.roots->x2) : Json(nullptr);
    d["alpha0"] = num(r.alpha0);
    d["alpha"] = r.alpha;
    d["nu_star"] = g.nu;
    d["rate"] = g.rate;
    d["delta"] = r.op.delta;
    d["n_xi"] = r.op.xi_cap;
    d["evolution_regime"] = g.evolution_valid();
    d["ergodicity_regime"] = g.ergodicity_valid();
    return d;
}

inline void require_evolution_regime(const RegimeReport& g) {
    if (!g.contraction.pass)
        throw RegimeError("z <= min{C e^{-C c_phi}, 2C e^{-2C c_phi}}", g.contraction.margin);
    if (!g.new_z.pass) throw RegimeError("z < C e^{-C c_phi} when C c_phi <= ln 2", g.new_z.margin);
    if (!g.alpha0) throw RegimeError("alpha_0 case analysis", std::numeric_limits<double>::quiet_NaN());
}

inline void require_ergodicity_regime(const RegimeReport& g) {
    if (!(g.nu < 1.0)) throw RegimeError("nu* = z e^{C c_phi}/C < 1", 1.0 - g.nu);
    if (!(g.z <= g.contraction.bound_double))
        throw RegimeError("z <= 2C e^{-2C c_phi}", g.contraction.bound_double - g.z);
    if (!g.low_activity.pass)
        throw RegimeError("z c_phi < 1/(2e)", g.low_activity.threshold - g.low_activity.value);
}

inline void write_norms(const std::filesystem::path& path, const Trajectory& tr) {
    CsvTable t;
    t.header = {"t", "norm_C", "norm_alphaC", "dist_ref"};
    for (const auto& r : tr.norm_log)
        t.rows.push_back({format_double(r.t), format_double(r.norm_C), format_double(r.norm_alphaC),
                          format_double(r.dist_ref)});
    t.save(path.string());
}

inline void write_snapshots(const std::filesystem::path& dir, const Trajectory& tr, double delta, Json& files) {
    std::filesystem::create_directories(dir / "snapshots");
    CsvTable index;
    index.header = {"step", "t", "file"};
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const long step = std::lround(tr.times[i] / delta);
        char name[64];
        std::snprintf(name, sizeof name, "snapshots/k_%06ld.csv", step);
        save_symfn((dir / name).string(), tr.states[i]);
        index.rows.push_back({std::to_string(step), format_double(tr.times[i]), name});
        files.push_back(name);
    }
    index.save((dir / "snapshots.csv").string());
    files.push_back("snapshots.csv");
}

inline std::optional<SymFn> gibbs_reference(const ExperimentConfig& c, ResultBundle& b) {
    if (c.domain.num_sites > GibbsSpec::kMaxSites) {
        b.warnings.push_back("box exceeds 16 sites: no Gibbs reference computed");
        return std::nullopt;
    }
    return exact_gibbs_correlations({c.z, c.potential, c.domain, c.reference}, c.n_max);
}

inline void run_evolve(const ExperimentConfig& c, const ResolvedParams& r, ResultBundle& b, Json& files) {
    require_evolution_regime(r.regime);
    const SymFn k0 = initial_condition(c);
    NormAudit na;
    na.C = c.C;
    na.alpha = r.alpha;
    na.reference = gibbs_reference(c, b);
    const Trajectory tr = evolve_star(k0, c.t_end, r.op, c.potential, c.domain, c.stride, na);
    write_norms(b.dir / "norms.csv", tr);
    files.push_back("norms.csv");
    write_snapshots(b.dir, tr, r.op.delta, files);

    const double tau = audit_tolerance(k0, r.op, c.C, r.cphi);
    double drift = 0.0, rise = 0.0;
    for (const SymFn& s : tr.states) drift = std::max(drift, std::abs(s.value(0) - k0.value(0)));
    for (std::size_t i = 1; i < tr.norm_log.size(); ++i)
        rise = std::max(rise, (tr.norm_log[i].norm_C - tr.norm_log[i - 1].norm_C) / tr.norm_log[i - 1].norm_C);
    b.audits.push_back(at_most("k_empty_constant", drift, 1e-14 * std::max(1.0, std::abs(k0.value(0)))));
    b.audits.push_back(at_most("norm_C_step_increase_relative", rise, tau));
    const double a0 = norm_K_C(k0, r.alpha * c.C);
    b.audits.push_back(at_most("alpha_norm_max", invariance_audit(tr, r.alpha, c.C), a0 * (1.0 + tau)));
    if (c.contraction_samples > 0) {
        const auto samples = contraction_samples(c.domain.num_sites, c.n_max, c.contraction_samples, c.C, c.seed);
        const ContractionAudit ca = contraction_audit(samples, r.op, c.potential, c.domain, c.C);
        b.audits.push_back(at_most("contraction_ratio", ca.max_ratio, ca.bound + ca.tolerance));
        b.manifest["tolerances"]["contraction"] = ca.tolerance;
    }
    b.manifest["tolerances"]["step"] = tau;
    b.manifest["steps"] = tr.steps;
}

inline void run_fixed_point(const ExperimentConfig& c, const ResolvedParams& r, ResultBundle& b, Json& files) {
    if (c.domain.num_sites > GibbsSpec::kMaxSites) throw ConfigError("fixed-point needs num_sites <= 16");
    const SymFn k_mu = exact_gibbs_correlations({c.z, c.potential, c.domain, c.reference}, c.n_max);
    save_symfn((b.dir / "k_mu.csv").string(), k_mu);
    files.push_back("k_mu.csv");
    CsvTable t;
    t.header = {"n_xi", "residual", "tolerance"};
    std::vector<FixedPointResidual> sweep;
    for (int cap = 0; cap <= r.op.xi_cap; ++cap) {
        OperatorParams p = r.op;
        p.xi_cap = cap;
        sweep.push_back(gibbs_fixed_point_residual(k_mu, p, c.potential, c.domain, c.C));
        t.rows.push_back({std::to_string(cap), format_double(sweep.back().residual),
                          format_double(sweep.back().tolerance)});
    }
    t.save((b.dir / "residuals.csv").string());
    files.push_back("residuals.csv");
    const auto& last = sweep.back();
    b.audits.push_back(at_most("residual", last.residual, 5.0 * last.tolerance));
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sweep.size(); ++i)
        worst_rise = std::max(worst_rise, sweep[i].residual - sweep[i - 1].residual);
    if (sweep.size() > 1) b.audits.push_back(at_most("residual_n_xi_increase", worst_rise, 0.0));
    b.manifest["tolerances"]["residual"] = last.tolerance;
}

inline void run_ergodicity(const ExperimentConfig& c, const ResolvedParams& r, ResultBundle& b, Json& files) {
    require_ergodicity_regime(r.regime);
    if (c.domain.num_sites > GibbsSpec::kMaxSites) throw ConfigError("ergodicity needs num_sites <= 16");
    const SymFn k0 = initial_condition(c);
    const SymFn k_mu = exact_gibbs_correlations({c.z, c.potential, c.domain, c.reference}, c.n_max);
    const DecayReport d = ergodic_decay_report(k0, k_mu, c.t_end, r.op, c.potential, c.domain, c.C, 0.05, c.stride);
    CsvTable t;
    t.header = {"t", "error", "bound"};
    for (std::size_t i = 0; i < d.times.size(); ++i)
        t.rows.push_back({format_double(d.times[i]), format_double(d.errors[i]),
                          format_double(std::exp(-d.rate * d.times[i]) * d.e0)});
    t.save((b.dir / "decay.csv").string());
    files.push_back("decay.csv");
    b.audits.push_back(at_most("decay_bound_excess", d.max_excess, 10.0 * d.tolerance));
    if (!d.trivially_converged) b.audits.push_back(at_most("fitted_slope", d.fitted_slope, -d.rate + 0.05));
    b.manifest["tolerances"]["decay"] = d.tolerance;
    b.manifest["decay"] = {{"e0", d.e0},
                           {"fitted_slope", std::isfinite(d.fitted_slope) ? Json(d.fitted_slope) : Json(nullptr)},
                           {"fit_window", {d.fit_t0, d.fit_t1}},
                           {"trivially_converged", d.trivially_converged}};
}

inline void run_mc(const ExperimentConfig& c, const ResolvedParams& r, ResultBundle& b, Json& files) {
    if (!r.regime.evolution_valid()) b.warnings.push_back("activity outside the contraction regime");
    const McSection& s = *c.mc;
    McConfig mc{c.domain, c.potential, c.z, s.t_end, s.burn_in, c.seed, s.replicas, s.batches};
    const McResult res = mc_birth_death(mc, s.n_est);
    std::optional<SymFn> exact;
    if (c.domain.num_sites <= GibbsSpec::kMaxSites)
        exact = exact_gibbs_correlations({c.z, c.potential, c.domain, SiteWeight::lattice}, res.estimate.max_order());
    CsvTable t;
    t.header = {"order", "sites", "estimate", "std_error", "exact", "z_score"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.estimate.for_each([&](FiniteConfig eta, double v) {
        const double se = res.std_error(eta);
        const double ex = exact ? (*exact)(eta) : nan;
        t.rows.push_back({std::to_string(eta.size()), sites_cell(eta), format_double(v), format_double(se),
                          format_double(ex), format_double(se > 0.0 ? (v - ex) / se : nan)});
    });
    t.save((b.dir / "estimates.csv").string());
    files.push_back("estimates.csv");
    CsvTable summary;
    summary.header = {"events_total", "events_after_burn_in", "births", "deaths", "absorbed"};
    summary.rows.push_back({std::to_string(res.events_total), std::to_string(res.events_after_burn_in),
                            std::to_string(res.births), std::to_string(res.deaths), flag(res.absorbed)});
    summary.save((b.dir / "mc_summary.csv").string());
    files.push_back("mc_summary.csv");

    b.audits.push_back(Audit{"events_after_burn_in", static_cast<double>(res.events_after_burn_in),
                             static_cast<double>(s.min_events), res.events_after_burn_in >= s.min_events});
    if (exact) {
        // Center tuples: the middle site, its nearest and next-nearest pairs.
        const Site mid = c.domain.num_sites / 2;
        std::vector<FiniteConfig> center{FiniteConfig{mid}};
        if (res.estimate.max_order() >= 2) {
            center.push_back(FiniteConfig{mid - 1, mid});
            if (mid + 1 < c.domain.num_sites) center.push_back(FiniteConfig{mid - 1, mid + 1});
        }
        for (FiniteConfig eta : center) {
            if (eta.size() > res.estimate.max_order()) continue;
            const double se = res.std_error(eta);
            const double dev = std::abs(res.estimate(eta) - (*exact)(eta));
            b.audits.push_back(at_most("mc_vs_exact_" + sites_cell(eta), dev, 3.0 * se));
        }
    }
    b.manifest["mc"] = {{"events_total", res.events_total}, {"events_after_burn_in", res.events_after_burn_in},
                        {"births", res.births}, {"deaths", res.deaths}, {"absorbed", res.absorbed}};
}

inline void run_positivity(const ExperimentConfig& c, const ResolvedParams& r, ResultBundle& b, Json& files) {
    if (!r.regime.evolution_valid()) b.warnings.push_back("activity outside the contraction regime");
    const PositivitySection& s = *c.positivity;
    const FiniteConfig window(s.window);
    SymFn k = initial_condition(c);
    const PairingWeights w(c.domain);
    CsvTable values, summary;
    values.header = {"t", "pattern", "value"};
    summary.header = {"t", "min_value", "sum", "tolerance"};
    long step = 0;
    double worst_min = std::numeric_limits<double>::infinity(), worst_sum = 0.0, tau_max = 0.0;
    for (double t : s.times) {
        const long target = step_count(t, r.op.delta);
        for (; step < target; ++step) {
            k = apply_P_delta_star(k, r.op, c.potential, c.domain);
            if (!k.all_finite()) throw EvolutionError("non-finite value at step " + std::to_string(step + 1), step + 1);
        }
        const PositivityResult p = positivity_probe(k, window, w, c.C);
        const double tt = step * r.op.delta;
        for (std::size_t i = 0; i < p.patterns.size(); ++i)
            values.rows.push_back({format_double(tt), sites_cell(p.patterns[i]), format_double(p.values[i])});
        summary.rows.push_back({format_double(tt), format_double(p.min_value), format_double(p.sum),
                                format_double(p.tolerance)});
        b.audits.push_back(at_most("min_pattern_t" + format_double(tt), 0.0 - p.min_value, p.tolerance));
        if (std::abs(k.value(0) - 1.0) <= 1e-12)
            b.audits.push_back(at_most("pattern_sum_t" + format_double(tt), std::abs(p.sum - 1.0), 5.0 * p.tolerance));
        worst_min = std::min(worst_min, p.min_value);
        worst_sum = std::max(worst_sum, std::abs(p.sum - 1.0));
        tau_max = std::max(tau_max, p.tolerance);
    }
    values.save((b.dir / "positivity.csv").string());
    summary.save((b.dir / "positivity_summary.csv").string());
    files.push_back("positivity.csv");
    files.push_back("positivity_summary.csv");
    b.manifest["tolerances"]["positivity"] = tau_max;
}

inline void run_regime_report(const ResolvedParams& r, ResultBundle& b) {
    const RegimeReport& g = r.regime;
    b.audits.push_back(at_most("contraction", g.z, std::min(g.contraction.bound_single, g.contraction.bound_double)));
    b.audits.push_back(Audit{"new_z", g.z, g.new_z.bound, g.new_z.pass});
    b.audits.push_back(Audit{"nu_star", g.nu, 1.0, g.nu_valid});
    b.audits.push_back(Audit{"low_activity", g.low_activity.value, g.low_activity.threshold, g.low_activity.pass});
}

}  // namespace detail

/// Executes the configured scenario and writes the bundle into `out`.
/// Throws RegimeError when the scenario's hypotheses fail, ConfigError for
/// invalid input.
inline ResultBundle run(const ExperimentConfig& c, const std::filesystem::path& out) {
    ResultBundle b;
    b.dir = out;
    std::filesystem::create_directories(out);
    const ResolvedParams r = resolve(c);
    r.op.validate(c.n_max);

    b.manifest["scenario"] = to_string(c.scenario);
    b.manifest["config"] = c.to_json();
    b.manifest["derived"] = detail::derived_json(r);
    b.manifest["tolerances"] = Json::object();
    Json files = Json::array({"config.json", "manifest.json", "audits.csv", "regime.csv"});

    {
        std::ofstream os(out / "config.json");
        os << c.to_json().dump(2) << '\n';
    }
    detail::write_regime_csv(out / "regime.csv", c, r);

    switch (c.scenario) {
        case Scenario::evolve: detail::run_evolve(c, r, b, files); break;
        case Scenario::fixed_point: detail::run_fixed_point(c, r, b, files); break;
        case Scenario::ergodicity: detail::run_ergodicity(c, r, b, files); break;
        case Scenario::mc_compare: detail::run_mc(c, r, b, files); break;
        case Scenario::positivity: detail::run_positivity(c, r, b, files); break;
        case Scenario::regime_report: detail::run_regime_report(r, b); break;
    }

    detail::write_audits_csv(out / "audits.csv", b.audits);
    Json audits = Json::array();
    for (const Audit& a : b.audits)
        audits.push_back({{"name", a.name}, {"value", a.value}, {"bound", a.bound}, {"margin", a.margin()},
                          {"pass", a.pass}});
    b.manifest["audits"] = audits;
    b.manifest["warnings"] = b.warnings;
    b.manifest["all_pass"] = b.all_pass();
    b.manifest["files"] = files;
    std::ofstream os(out / "manifest.json");
    os << b.manifest.dump(2) << '\n';
    return b;
}

struct CompareRow {
    std::string column;
    std::size_t matched = 0;
    double max_abs_diff = 0.0;
    double max_z = 0.0;  // MC only: max |a - b| / sqrt(se_a^2 + se_b^2)
};

struct CompareReport {
    std::string scenario;
    std::string table;
    std::vector<CompareRow> rows;
    double tolerance = 0.0;
    bool pass = false;
};

namespace detail {

struct TableSpec {
    std::string file;
    std::vector<std::string> keys;
    std::vector<std::string> values;
};

inline TableSpec table_spec(Scenario s) {
    switch (s) {
        case Scenario::evolve: return {"norms.csv", {"t"}, {"norm_C", "norm_alphaC", "dist_ref"}};
        case Scenario::ergodicity: return {"decay.csv", {"t"}, {"error"}};
        case Scenario::fixed_point: return {"residuals.csv", {"n_xi"}, {"residual"}};
        case Scenario::mc_compare: return {"estimates.csv", {"order", "sites"}, {"estimate"}};
        case Scenario::positivity: return {"positivity.csv", {"t", "pattern"}, {"value"}};
        case Scenario::regime_report: return {"regime.csv", {"quantity"}, {"value"}};
    }
    return {};
}

// Numeric keys are matched after rounding to 1e-9 so that t = j delta agrees
// across step sizes.
inline std::string key_of(const CsvTable& t, const std::vector<int>& cols, const std::vector<std::string>& row) {
    std::string k;
    for (int c : cols) {
        const std::string& cell = row.at(c);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() && *end == '\0' && t.header[c] == "t")
            k += std::to_string(std::llround(v * 1e9));
        else
            k += cell;
        k += '|';
    }
    return k;
}

inline Scenario bundle_scenario(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw ConfigError("no manifest.json in " + dir.string());
    const Json m = Json::parse(is);
    return scenario_from_string(m.at("scenario").get<std::string>());
}

}  // namespace detail

/// Compares two bundles of the same scenario on their common grid. Norm-like
/// tables pass when every matched difference is at most `tolerance`; MC
/// estimates pass when every matched difference lies within 3 combined
/// standard errors (`tolerance` is ignored).
inline CompareReport compare(const std::filesystem::path& a, const std::filesystem::path& b, double tolerance) {
    const Scenario sa = detail::bundle_scenario(a), sb = detail::bundle_scenario(b);
    if (sa != sb) throw ConfigError(std::string("bundles differ in scenario: ") + to_string(sa) + " vs " + to_string(sb));
    const detail::TableSpec spec = detail::table_spec(sa);
    const CsvTable ta = CsvTable::load((a / spec.file).string());
    const CsvTable tb = CsvTable::load((b / spec.file).string());
    if (ta.header != tb.header) throw ConfigError("incompatible tables: headers differ in " + spec.file);
    std::vector<int> keys;
    for (const auto& k : spec.keys) keys.push_back(ta.column(k));
    std::map<std::string, const std::vector<std::string>*> index;
    for (const auto& row : tb.rows) index[detail::key_of(tb, keys, row)] = &row;

    CompareReport rep;
    rep.scenario = to_string(sa);
    rep.table = spec.file;
    rep.tolerance = tolerance;
    rep.pass = true;
    const bool mc = sa == Scenario::mc_compare;
    const int se_col = mc ? ta.column("std_error") : -1;
    for (const auto& name : spec.values) {
        const int col = ta.column(name);
        CompareRow r;
        r.column = name;
        for (const auto& row : ta.rows) {
            auto it = index.find(detail::key_of(ta, keys, row));
            if (it == index.end()) continue;
            const double va = std::strtod(row[col].c_str(), nullptr);
            const double vb = std::strtod((*it->second)[col].c_str(), nullptr);
            if (std::isnan(va) && std::isnan(vb)) {
                ++r.matched;
                continue;
            }
            const double d = std::abs(va - vb);
            r.max_abs_diff = std::max(r.max_abs_diff, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
            if (mc) {
                const double sea = std::strtod(row[se_col].c_str(), nullptr);
                const double seb = std::strtod((*it->second)[se_col].c_str(), nullptr);
                const double se = std::hypot(sea, seb);
                const double zs = se > 0.0 ? d / se : (d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
                r.max_z = std::max(r.max_z, zs);
            }
            ++r.matched;
        }
        if (r.matched == 0) throw ConfigError("incompatible grids: no common rows in " + spec.file);
        rep.pass = rep.pass && (mc ? r.max_z <= 3.0 : r.max_abs_diff <= tolerance);
        rep.rows.push_back(r);
    }
    return rep;
}

}  // namespace glauber
