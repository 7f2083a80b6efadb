// Command-line front end: one scenario per invocation, results written as a
// bundle directory. Exit status 0 iff every audit passes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <glauber/experiment.hpp>

namespace {

constexpr int kAuditFailed = 1;
constexpr int kBadInput = 2;
constexpr int kRegimeViolated = 3;

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "bundle directory (overrides the config's output)");
    cmd->add_option("--seed", f.seed, "RNG seed (overrides the config's seed)");
    cmd->add_flag("--quiet", f.quiet, "print nothing on success");
}

void print_regime(const std::filesystem::path& dir) {
    const auto t = glauber::CsvTable::load((dir / "regime.csv").string());
    std::printf("%-20s %24s %24s %24s  %s\n", "quantity", "value", "bound", "margin", "pass");
    for (const auto& r : t.rows)
        std::printf("%-20s %24s %24s %24s  %s\n", r[0].c_str(), r[1].c_str(), r[2].c_str(), r[3].c_str(),
                    r[4].c_str());
}

void print_audits(const glauber::ResultBundle& b) {
    for (const auto& w : b.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("%-36s %24s %24s  %s\n", "audit", "value", "bound", "verdict");
    for (const auto& a : b.audits)
        std::printf("%-36s %24s %24s  %s\n", a.name.c_str(), glauber::format_double(a.value).c_str(),
                    glauber::format_double(a.bound).c_str(), a.pass ? "PASS" : "FAIL");
    std::printf("bundle: %s\n", b.dir.string().c_str());
}

int run_scenario(glauber::Scenario scenario, const CommonFlags& f) {
    using namespace glauber;
    try {
        std::ifstream is(f.config);
        Json j = Json::parse(is);
        if (j.contains("scenario") && j.at("scenario").is_string() &&
            j.at("scenario").get<std::string>() != to_string(scenario))
            throw ConfigError("config scenario '" + j.at("scenario").get<std::string>() +
                              "' does not match subcommand (expected '" + to_string(scenario) + "')");
        j["scenario"] = to_string(scenario);
        ExperimentConfig cfg = ExperimentConfig::from_json(j);
        if (f.seed) cfg.seed = *f.seed;
        if (!f.out.empty()) cfg.output = f.out;
        if (cfg.output.empty()) throw ConfigError("no output directory: pass --out or set 'output'");

        const ResultBundle b = run(cfg, cfg.output);
        if (!f.quiet) {
            if (scenario == Scenario::regime_report) {
                std::ifstream csv(std::filesystem::path(cfg.output) / "regime.csv");
                std::cout << csv.rdbuf() << '\n';
                print_regime(cfg.output);
            }
            print_audits(b);
        }
        if (!b.all_pass()) {
            for (const auto& a : b.audits)
                if (!a.pass)
                    std::fprintf(stderr, "audit failed: %s value=%s bound=%s\n", a.name.c_str(),
                                 format_double(a.value).c_str(), format_double(a.bound).c_str());
            return kAuditFailed;
        }
        return 0;
    } catch (const RegimeError& e) {
        std::fprintf(stderr, "error: %s\n  inequality: %s\n  margin: %s\n", e.what(), e.inequality().c_str(),
                     format_double(e.margin()).c_str());
        return kRegimeViolated;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: malformed config: %s\n", e.what());
        return kBadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kBadInput;
    }
}

int run_compare(const std::string& a, const std::string& b, double tol, const std::string& out, bool quiet) {
    using namespace glauber;
    try {
        const CompareReport rep = compare(a, b, tol);
        if (!out.empty()) {
            std::filesystem::create_directories(out);
            CsvTable t;
            t.header = {"column", "matched", "max_abs_diff", "max_z"};
            for (const auto& r : rep.rows)
                t.rows.push_back({r.column, std::to_string(r.matched), format_double(r.max_abs_diff),
                                  format_double(r.max_z)});
            t.save((std::filesystem::path(out) / "compare.csv").string());
        }
        if (!quiet) {
            std::printf("scenario %s, table %s\n", rep.scenario.c_str(), rep.table.c_str());
            for (const auto& r : rep.rows)
                std::printf("  %-14s matched %6zu  max |diff| %s  max z %s\n", r.column.c_str(), r.matched,
                            format_double(r.max_abs_diff).c_str(), format_double(r.max_z).c_str());
            std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
        }
        return rep.pass ? 0 : kAuditFailed;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kBadInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Glauber birth-death dynamics on a 1-D lattice: hierarchy evolution, oracles and audits"};
    app.require_subcommand(1);

    struct Entry {
        const char* name;
        const char* help;
        glauber::Scenario scenario;
        CommonFlags flags;
    };
    Entry entries[] = {
        {"validate-regime", "check the parameter conditions and print bounds, alpha0, nu* and the rate",
         glauber::Scenario::regime_report, {}},
        {"evolve", "iterate the dual one-step operator and audit norms", glauber::Scenario::evolve, {}},
        {"fixed-point", "residual of the generator at the exact Gibbs correlations", glauber::Scenario::fixed_point, {}},
        {"mc-sim", "Gillespie simulation compared with exact enumeration", glauber::Scenario::mc_compare, {}},
        {"check-positivity", "local occupation-pattern probabilities along an evolution",
         glauber::Scenario::positivity, {}},
        {"ergodicity", "decay towards the Gibbs correlations against the guaranteed rate",
         glauber::Scenario::ergodicity, {}},
    };
    std::vector<CLI::App*> cmds;
    for (auto& e : entries) {
        cmds.push_back(app.add_subcommand(e.name, e.help));
        add_common(cmds.back(), e.flags);
    }

    std::string bundle_a, bundle_b, cmp_out;
    double tol = 1e-12;
    bool cmp_quiet = false;
    auto* cmp = app.add_subcommand("compare", "compare two result bundles of the same scenario");
    cmp->add_option("bundle_a", bundle_a, "first bundle directory")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("bundle_b", bundle_b, "second bundle directory")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("--tol", tol, "absolute tolerance for norm-like tables");
    cmp->add_option("--out", cmp_out, "write compare.csv into this directory");
    cmp->add_flag("--quiet", cmp_quiet, "print nothing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kBadInput;
    }

    for (std::size_t i = 0; i < cmds.size(); ++i)
        if (cmds[i]->parsed()) return run_scenario(entries[i].scenario, entries[i].flags);
    return run_compare(bundle_a, bundle_b, tol, cmp_out, cmp_quiet);
}
