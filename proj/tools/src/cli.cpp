#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinlab/counting.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/gadget.hpp"
#include "spinlab/graphs.hpp"
#include "spinlab/hub.hpp"
#include "spinlab/meanfield.hpp"
#include "spinlab/model_json.hpp"
#include "spinlab/potts_reduction.hpp"

namespace spinlab::cli {
namespace {

using nlohmann::json;

class UsageError : public Error {
public:
    using Error::Error;
};

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    int budget_bits = EnumerationBudget::kDefaultBits;
    std::string out_path;
    std::string format = "json";
    bool timing = false;

    EnumerationBudget budget() const { return {budget_bits}; }

    std::uint64_t require_seed(const std::string& command) const {
        if (!seed) throw UsageError(command + " is randomized and needs --seed");
        return *seed;
    }
};

struct ExactArgs {
    std::string model;
    bool dump = false;
};

struct SweepArgs {
    int q = 3;
    std::vector<int> m;
    std::optional<double> R;
    double delta = 0.1;
};

struct ReduceArgs {
    std::string variant;
    std::string graph;
    std::optional<double> log_zhat;
    std::optional<double> zhat_shift;
    double epsilon = 0.9;
    int L = 2;
    std::string tester = "oracle";
    int trials = 1;
    std::optional<int> m;
    std::optional<double> beta_override;
    bool no_guard = false;
    bool no_family_check = false;
    std::string dump_instance;
};

struct BlowupArgs {
    std::string graph;
    int d = 3;
    int b = 4;
    std::optional<double> rho;
    double alpha = 0.25;
    double beta_hat = 1.0;
};

struct GraphArgs {
    std::string kind = "random-regular";
    int q = 2;
    int n = 10;
    int d = 3;
    double beta = 1.0;
};

// Serializes a report and checks that it parses back to the same document.
std::string serialize(const json& doc) {
    std::string text = doc.dump();
    if (parse_json_text(text) != doc) throw Error("report failed its JSON round trip");
    return text;
}

void check_model_doc(const json& doc, const std::string& where) {
    auto problems = validate_model_json(doc);
    if (!problems.empty()) throw Error(where + " does not satisfy the model schema: " + problems.front());
}

class Sink {
public:
    Sink(const GlobalOptions& g, std::ostream& fallback) {
        if (!g.out_path.empty()) {
            file_.open(g.out_path);
            if (!file_) throw Error("cannot open output file " + g.out_path);
        }
        stream_ = g.out_path.empty() ? &fallback : &file_;
        *stream_ << std::setprecision(17);
    }
    std::ostream& stream() { return *stream_; }
    void line(const json& doc) { *stream_ << serialize(doc) << '\n'; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void cmd_exact(const GlobalOptions& g, const ExactArgs& a, std::ostream& out) {
    auto start = std::chrono::steady_clock::now();
    SpinSystem model = load_model(a.model);
    Sink sink(g, out);
    if (g.format == "csv") {
        ExactDistribution dist(model, g.budget());
        dist.write_csv(sink.stream());
        return;
    }
    json report = {{"command", "exact"}, {"q", model.q()}, {"n", model.n()}, {"edges", model.edge_count()}};
    if (a.dump) {
        ExactDistribution dist(model, g.budget());
        report["log_Z"] = dist.log_Z();
        report["log_probabilities"] = dist.log_probabilities();
    } else {
        report["log_Z"] = partition_log(model, g.budget());
    }
    if (g.timing) report["runtime_ms"] = elapsed_ms(start);
    sink.line(report);
}

void cmd_sweep(const GlobalOptions& g, const SweepArgs& a, std::ostream& out) {
    auto start = std::chrono::steady_clock::now();
    CriticalPoint cp = find_critical_Bo(a.q);
    Sink sink(g, out);
    json rows = json::array();
    if (g.format == "csv") sink.stream() << "m,q,beta_H,log_ZM,log_ZD,log_ZS,g,gap\n";
    for (int m : a.m) {
        if (m < 1) throw InvalidModel("sweep sizes must be positive");
        double beta_H = cp.Bo / m;
        if (a.R) {
            if (!(*a.R > 0)) throw InvalidModel("R must be positive");
            beta_H = solve_beta_H(m, cp, std::log(*a.R), a.delta).beta_H;
        }
        MetastabilityReport rep = metastability_report(m, a.q, cp.alpha_hat, beta_H);
        const PhaseSplit& s = rep.split;
        double g_ratio = s.log_ZM - s.log_ZD;
        double gap = rep.gap;
        if (g.format == "csv") {
            sink.stream() << m << ',' << a.q << ',' << fmt(beta_H) << ',' << fmt(s.log_ZM) << ',' << fmt(s.log_ZD)
                          << ',' << fmt(s.log_ZS) << ',' << fmt(g_ratio) << ',' << fmt(gap) << '\n';
        } else {
            rows.push_back({{"m", m},
                            {"q", a.q},
                            {"beta_H", beta_H},
                            {"log_ZM", number_or_null(s.log_ZM)},
                            {"log_ZD", number_or_null(s.log_ZD)},
                            {"log_ZS", number_or_null(s.log_ZS)},
                            {"g", number_or_null(g_ratio)},
                            {"gap", number_or_null(gap)}});
        }
    }
    if (g.format == "json") {
        json report = {{"command", "meanfield-sweep"}, {"Bo", cp.Bo}, {"alpha_hat", cp.alpha_hat}, {"rows", rows}};
        if (g.timing) report["runtime_ms"] = elapsed_ms(start);
        sink.line(report);
    }
}

void cmd_reduce(const GlobalOptions& g, const ReduceArgs& a, std::ostream& out) {
    const std::uint64_t seed = g.require_seed("reduce");
    if (a.log_zhat.has_value() == a.zhat_shift.has_value())
        throw UsageError("reduce needs exactly one of --log-zhat and --zhat-shift");
    if (a.variant == "potts" && !a.m) throw UsageError("the potts variant needs --m");
    if (g.format != "json") throw UsageError("reduce only writes json reports");

    SpinSystem G = load_model(a.graph);
    std::optional<double> log_ZG;
    if (within_budget(G.n(), G.q(), g.budget())) log_ZG = partition_log(G, g.budget());
    double log_zhat = 0.0;
    if (a.log_zhat) {
        log_zhat = *a.log_zhat;
    } else {
        if (!log_ZG) throw BudgetExceeded("--zhat-shift needs log Z of the graph, which exceeds the budget");
        log_zhat = *log_ZG + *a.zhat_shift;
    }

    const double r = reduction_ratio(a.epsilon, a.L);
    DecisionQuery query{log_zhat, r, kTesterConfidence};

    ReductionBuilder builder;
    if (a.variant == "potts") {
        PottsBuildOptions opts;
        opts.beta_override = a.beta_override;
        opts.enforce_guard = !a.no_guard;
        builder = potts_reduction_builder(*a.m, opts);
    } else {
        HubBuildOptions opts;
        opts.beta2 = a.beta_override;
        opts.enforce_guard = !a.no_guard;
        opts.check_family = !a.no_family_check;
        opts.budget = g.budget();
        opts.log_Z_block = log_ZG;
        builder = hub_reduction_builder(hub_variant_from_string(a.variant), opts);
    }

    if (!a.dump_instance.empty()) {
        json doc;
        if (a.variant == "potts") {
            PottsBuildOptions opts;
            opts.beta_override = a.beta_override;
            opts.enforce_guard = !a.no_guard;
            doc = to_json(build_potts_instance(G, *a.m, a.epsilon, a.L, log_zhat, opts));
        } else {
            HubBuildOptions opts;
            opts.beta2 = a.beta_override;
            opts.enforce_guard = !a.no_guard;
            opts.check_family = !a.no_family_check;
            opts.budget = g.budget();
            opts.log_Z_block = log_ZG;
            doc = to_json(build_hub_instance(G, hub_variant_from_string(a.variant), a.epsilon, a.L, log_zhat, opts));
        }
        check_model_doc(doc.at("visible"), "visible model");
        check_model_doc(doc.at("hidden"), "hidden model");
        std::ofstream f(a.dump_instance);
        if (!f) throw Error("cannot open " + a.dump_instance);
        f << serialize(doc) << '\n';
    }

    std::unique_ptr<Tester> tester;
    if (a.tester == "oracle") tester = oracle_tv_tester(a.epsilon, a.L);
    else tester = empirical_tester(a.epsilon, a.L);

    Sink sink(g, out);
    Rng root = Rng(seed).split("reduce");
    for (int t = 0; t < a.trials; ++t) {
        auto trial_start = std::chrono::steady_clock::now();
        Rng rng = root.split(static_cast<std::uint64_t>(t));
        CountingOutcome outcome = run_generic_reduction(G, query, builder, *tester, a.epsilon, a.L, rng);
        json report = {{"command", "reduce"},
                       {"trial", t},
                       {"variant", a.variant},
                       {"tester", tester->name()},
                       {"seed", seed},
                       {"epsilon", a.epsilon},
                       {"L", a.L},
                       {"r", r},
                       {"log_Zhat", log_zhat},
                       {"answer", to_string(outcome.answer)},
                       {"provenance", std::string(to_string(outcome.provenance))}};
        if (outcome.tv) report[tester->name() == "oracle-tv" ? "tv_exact" : "tv_estimate"] = *outcome.tv;
        if (log_ZG) {
            const double log_r = std::log(r);
            const bool below = *log_ZG <= log_zhat - log_r;
            const bool above = *log_ZG >= log_zhat + log_r;
            bool correct = true;
            if (below) correct = outcome.answer == Decision::AtMostZhatOverR;
            if (above) correct = outcome.answer == Decision::AtLeastRZhat;
            report["log_Z_G"] = *log_ZG;
            report["branch"] = below ? "yes" : above ? "no" : "gap";
            report["correct"] = correct;
        } else {
            report["branch"] = nullptr;
            report["correct"] = nullptr;
        }
        if (g.timing) report["runtime_ms"] = elapsed_ms(trial_start);
        sink.line(report);
    }
}

void cmd_blowup(const GlobalOptions& g, const BlowupArgs& a, std::ostream& out) {
    auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = g.require_seed("blowup");
    if (g.format != "json") throw UsageError("blowup only writes json");
    SpinSystem G = load_model(a.graph);
    GadgetParams params = a.rho ? GadgetParams::high_degree(a.b, a.d, *a.rho) : GadgetParams::low_degree(a.b, a.d, a.alpha);
    Rng rng = Rng(seed).split("blowup");
    BlowupInstance inst = build_blowup(G, params, a.beta_hat, rng);
    json doc = to_json(inst);
    check_model_doc(doc.at("model"), "blown-up model");
    doc["command"] = "blowup";
    doc["seed"] = seed;
    if (g.timing) doc["runtime_ms"] = elapsed_ms(start);
    Sink sink(g, out);
    sink.line(doc);
}

void cmd_graph(const GlobalOptions& g, const GraphArgs& a, std::ostream& out) {
    SpinSystem model;
    if (a.kind == "complete") {
        model = complete_graph(a.q, a.n, a.beta);
    } else if (a.kind == "cycle") {
        model = cycle_graph(a.q, a.n, a.beta);
    } else if (a.kind == "edgeless") {
        model = edgeless(a.q, a.n);
    } else {
        Rng rng = Rng(g.require_seed("graph random-regular")).split("graph");
        model = random_regular_graph(a.q, a.n, a.d, a.beta, rng);
    }
    json doc = model_to_json(model);
    check_model_doc(doc, "generated model");
    Sink sink(g, out);
    sink.line(doc);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"spin system toolkit: exact oracles, mean-field sweeps, reductions and gadget blow-ups"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "64-bit seed for every randomized step");
    app.add_option("--budget-bits", g.budget_bits, "enumeration cap as log2 of the state count")
        ->check(CLI::Range(1, kBudgetBitsCap));
    app.add_option("--out", g.out_path, "write the report to this file instead of stdout");
    app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--timing", g.timing, "add runtime_ms to reports");

    ExactArgs ea;
    auto* exact = app.add_subcommand("exact", "log partition function of a model file by enumeration");
    exact->add_option("model", ea.model, "model JSON")->required()->check(CLI::ExistingFile);
    exact->add_flag("--dump-distribution", ea.dump, "include every log probability");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("meanfield-sweep", "phase split of the mean-field Potts model over sizes");
    sweep->add_option("--q", sa.q, "number of spins")->check(CLI::Range(3, 64));
    sweep->add_option("--m", sa.m, "complete-graph sizes")->required()->delimiter(',');
    sweep->add_option("--R", sa.R, "target ratio Z^M/Z^D; beta_H = Bo/m when absent");
    sweep->add_option("--delta", sa.delta, "relative slack below R")->check(CLI::Range(1e-12, 1.0));

    ReduceArgs ra;
    auto* reduce = app.add_subcommand("reduce", "decide Z <= Zhat/r versus Z >= r Zhat through a tester");
    reduce->add_option("--variant", ra.variant, "construction")
        ->required()
        ->check(CLI::IsMember({"antiferro", "ferro-field", "potts"}));
    reduce->add_option("--graph", ra.graph, "model JSON for G")->required()->check(CLI::ExistingFile);
    reduce->add_option("--log-zhat", ra.log_zhat, "natural log of Zhat");
    reduce->add_option("--zhat-shift", ra.zhat_shift, "log Zhat - log Z_G, with Z_G computed exactly");
    reduce->add_option("--epsilon", ra.epsilon)->check(CLI::Range(1e-9, 1.0 - 1e-9));
    reduce->add_option("--L", ra.L)->check(CLI::Range(1, 1 << 20));
    reduce->add_option("--tester", ra.tester)->check(CLI::IsMember({"oracle", "empirical"}));
    reduce->add_option("--trials", ra.trials)->check(CLI::Range(1, 1 << 24));
    reduce->add_option("--m", ra.m, "complete-graph size for the potts variant")->check(CLI::Range(1, 4096));
    reduce->add_option("--beta", ra.beta_override, "fixed beta2 (hub) or cross coupling (potts)");
    reduce->add_flag("--no-guard", ra.no_guard, "build even when Zhat is outside the admissible range");
    reduce->add_flag("--no-family-check", ra.no_family_check, "skip the family membership check on G");
    reduce->add_option("--dump-instance", ra.dump_instance, "write the constructed instance to this file");

    BlowupArgs ba;
    auto* blowup = app.add_subcommand("blowup", "replace every vertex by a bipartite gadget");
    blowup->add_option("--graph", ba.graph, "model JSON for G")->required()->check(CLI::ExistingFile);
    blowup->add_option("--d", ba.d)->check(CLI::Range(2, 1 << 16));
    blowup->add_option("--b", ba.b)->check(CLI::Range(1, 1 << 16));
    blowup->add_option("--rho", ba.rho, "selects the high-degree regime");
    blowup->add_option("--alpha", ba.alpha, "port exponent of the low-degree regime");
    blowup->add_option("--beta-hat", ba.beta_hat)->check(CLI::PositiveNumber);

    GraphArgs ga;
    auto* graph = app.add_subcommand("graph", "write a standard graph as a model JSON");
    graph->add_option("--kind", ga.kind)->check(CLI::IsMember({"random-regular", "complete", "cycle", "edgeless"}));
    graph->add_option("--q", ga.q)->check(CLI::Range(1, 64));
    graph->add_option("--n", ga.n)->check(CLI::Range(1, 1 << 20));
    graph->add_option("--d", ga.d)->check(CLI::Range(0, 1 << 16));
    graph->add_option("--beta", ga.beta);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*exact) cmd_exact(g, ea, out);
        else if (*sweep) cmd_sweep(g, sa, out);
        else if (*reduce) cmd_reduce(g, ra, out);
        else if (*blowup) cmd_blowup(g, ba, out);
        else if (*graph) cmd_graph(g, ga, out);
        return kOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const GuardViolation& e) {
        err << "guard violation: " << e.what() << " (certified " << to_string(e.certified()) << ")\n";
        return kGuardViolation;
    } catch (const BudgetExceeded& e) {
        err << "budget exceeded: " << e.what() << '\n';
        return kBudget;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"spinlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace spinlab::cli
