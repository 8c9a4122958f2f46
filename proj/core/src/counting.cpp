#include "spinlab/counting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "spinlab/errors.hpp"
#include "spinlab/logsumexp.hpp"
#include "spinlab/meanfield.hpp"

namespace spinlab {

void DecisionQuery::validate() const {
    if (!(r > 1.0)) throw InvalidModel("decision query needs r > 1");
    if (!std::isfinite(log_Zhat)) throw InvalidModel("decision query needs a finite log Zhat");
    if (!(confidence > 0.5 && confidence <= 1.0)) throw InvalidModel("decision confidence must lie in (1/2, 1]");
}

std::string_view to_string(Provenance p) { return p == Provenance::Tester ? "tester" : "guard-bound"; }

double tester_threshold(double epsilon, int L) { return 0.5 * (1.0 / (16.0 * L) + (1.0 - epsilon)); }

Tester::Tester(double epsilon, int L) : epsilon_(epsilon), L_(L) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidModel("tester epsilon must lie in (0,1)");
    if (L < 1) throw InvalidModel("tester needs L >= 1");
}

Verdict OracleTvTester::test(const TestingInstance& inst, std::span<const Configuration>) {
    if (!inst.visible_collapsed || !inst.hidden_collapsed)
        throw Error("oracle tester: collapsed spaces are unavailable for this instance");
    double tv = tv_collapsed(inst.visible_collapsed(), inst.hidden_collapsed());
    last_tv_ = tv;
    return tv <= threshold() ? Verdict::Yes : Verdict::No;
}

EmpiricalTester::EmpiricalTester(double epsilon, int L, std::size_t max_classes)
    : Tester(epsilon, L), max_classes_(max_classes) {}

Verdict EmpiricalTester::test(const TestingInstance& inst, std::span<const Configuration> samples) {
    if (!inst.visible_collapsed || !inst.class_index)
        throw Error("empirical tester: the instance exposes no class structure");
    if (samples.empty()) throw InvalidModel("empirical tester needs at least one sample");
    auto space = inst.visible_collapsed();
    if (space.classes.size() > max_classes_)
        throw BudgetExceeded("empirical tester: " + std::to_string(space.classes.size()) + " classes exceed the cap");
    auto p = space.probabilities();

    std::map<std::size_t, int> counts;
    for (const auto& s : samples) ++counts[inst.class_index(s)];
    KahanSum diff;
    KahanSum seen_mass;
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (auto [idx, c] : counts) {
        diff.add(std::fabs(c * inv - p.at(idx)));
        seen_mass.add(p[idx]);
    }
    double tv = 0.5 * (diff.value() + std::max(0.0, 1.0 - seen_mass.value()));
    last_tv_ = tv;
    return tv <= threshold() ? Verdict::Yes : Verdict::No;
}

std::unique_ptr<Tester> oracle_tv_tester(double epsilon, int L) {
    return std::make_unique<OracleTvTester>(epsilon, L);
}

std::unique_ptr<Tester> empirical_tester(double epsilon, int L) {
    return std::make_unique<EmpiricalTester>(epsilon, L);
}

ReductionBuilder hub_reduction_builder(HubVariant variant, HubBuildOptions options) {
    return [variant, options](const SpinSystem& G, const DecisionQuery& query, double epsilon, int L) {
        BuiltReduction out;
        std::shared_ptr<HubInstance> inst;
        try {
            inst = std::make_shared<HubInstance>(build_hub_instance(G, variant, epsilon, L, query.log_Zhat, options));
        } catch (const GuardViolation& g) {
            out.guard_answer = g.certified();
            return out;
        }
        auto sampler = std::make_shared<HiddenHubSampler>(*inst);
        const int N = inst->N();
        const EnumerationBudget budget = options.budget;
        out.testing.visible = &inst->visible;
        out.testing.visible_collapsed = [inst, budget] {
            return collapsed_distribution_hub(*inst, Which::Visible, budget);
        };
        out.testing.hidden_collapsed = [inst, budget] {
            return collapsed_distribution_hub(*inst, Which::Hidden, budget);
        };
        out.testing.class_index = [inst, N](const Configuration& s) {
            std::size_t idx = 0;
            for (int v = N - 1; v >= 0; --v) idx = idx * 2 + static_cast<std::size_t>(s[v]);
            std::size_t hubs = static_cast<std::size_t>(s[inst->s1()] * 2 + s[inst->s2()]);
            return hubs * (std::size_t{1} << N) + idx;
        };
        out.sample_hidden = [sampler](Rng& rng) { return (*sampler)(rng); };
        out.storage = std::make_shared<std::pair<std::shared_ptr<HubInstance>, std::shared_ptr<HiddenHubSampler>>>(
            inst, sampler);
        return out;
    };
}

ReductionBuilder potts_reduction_builder(int m, PottsBuildOptions options) {
    return [m, options](const SpinSystem& G, const DecisionQuery& query, double epsilon, int L) {
        BuiltReduction out;
        std::shared_ptr<PottsInstance> inst;
        try {
            inst = std::make_shared<PottsInstance>(build_potts_instance(G, m, epsilon, L, query.log_Zhat, options));
        } catch (const GuardViolation& g) {
            out.guard_answer = g.certified();
            return out;
        }
        auto sampler = std::make_shared<HiddenPottsSampler>(*inst);
        auto sig_index = std::make_shared<std::map<std::vector<int>, std::size_t>>();
        for_each_signature(inst->m, inst->q, [&](std::span<const int> s) {
            sig_index->emplace(std::vector<int>(s.begin(), s.end()), sig_index->size());
        });
        out.testing.visible = &inst->visible;
        out.testing.visible_collapsed = [inst] { return collapsed_distribution_F(*inst, Which::Visible); };
        out.testing.hidden_collapsed = [inst] { return collapsed_distribution_F(*inst, Which::Hidden); };
        out.testing.class_index = [inst, sig_index](const Configuration& s) {
            std::vector<int> sig(inst->q, 0);
            for (int i = 0; i < inst->m; ++i) ++sig[s[inst->h_vertex(i)]];
            std::size_t block = 0;
            for (int v = inst->N - 1; v >= 0; --v) block = block * inst->q + static_cast<std::size_t>(s[v]);
            std::size_t per_sig = 1;
            for (int v = 0; v < inst->N; ++v) per_sig *= static_cast<std::size_t>(inst->q);
            return sig_index->at(sig) * per_sig + block;
        };
        out.sample_hidden = [sampler](Rng& rng) { return (*sampler)(rng); };
        out.storage = std::make_shared<std::tuple<std::shared_ptr<PottsInstance>, std::shared_ptr<HiddenPottsSampler>,
                                                  decltype(sig_index)>>(inst, sampler, sig_index);
        return out;
    };
}

CountingOutcome run_generic_reduction(const SpinSystem& G, const DecisionQuery& query,
                                      const ReductionBuilder& builder, Tester& tester, double epsilon, int L,
                                      Rng& rng) {
    query.validate();
    const double expected_r = reduction_ratio(epsilon, L);
    if (std::fabs(query.r - expected_r) > 1e-9 * expected_r)
        throw InvalidModel("decision query r must equal 96/eps * sqrt(eps L + 1) = " + std::to_string(expected_r));

    BuiltReduction built = builder(G, query, epsilon, L);
    CountingOutcome out;
    if (built.guard_answer) {
        out.answer = *built.guard_answer;
        out.provenance = Provenance::GuardBound;
        return out;
    }
    std::vector<Configuration> samples;
    samples.reserve(L);
    for (int i = 0; i < L; ++i) samples.push_back(built.sample_hidden(rng));
    Verdict v = tester.test(built.testing, samples);
    out.answer = v == Verdict::Yes ? Decision::AtMostZhatOverR : Decision::AtLeastRZhat;
    out.provenance = Provenance::Tester;
    out.tv = tester.last_tv();
    return out;
}

Decider exact_comparator(double log_Z, double r) {
    if (!(r > 1.0)) throw InvalidModel("comparator needs r > 1");
    return [log_Z](double log_Zhat) { return log_Z < log_Zhat ? Decision::AtMostZhatOverR : Decision::AtLeastRZhat; };
}

double boost_error_target(int n, double r, double c1) {
    return 1.0 / (8.0 * std::log(4.0 * c1 * n * n + 4.0 * std::log(r)));
}

int boost_repetitions(int n, double r, double c1) {
    double inner = 8.0 * std::log(4.0 * c1 * n * n + 4.0 * std::log(r));
    return 80 * static_cast<int>(std::ceil(std::log(inner))) + 1;
}

Decider boosted_decider(Decider base, int n, double r, double c1) {
    const int k = boost_repetitions(n, r, c1);
    return [base = std::move(base), k](double log_Zhat) {
        int at_most = 0;
        for (int i = 0; i < k; ++i) at_most += base(log_Zhat) == Decision::AtMostZhatOverR;
        return 2 * at_most > k ? Decision::AtMostZhatOverR : Decision::AtLeastRZhat;
    };
}

double bisection_iteration_bound(int n, double c1, double r) {
    return 2.0 * std::log(4.0 * c1 * n * n + 4.0 * std::log(r));
}

BisectionResult bisection_counter(const Decider& decider, int n, double c1, double r) {
    if (!(r > 1.0)) throw InvalidModel("bisection needs r > 1");
    if (!(c1 > 0.0)) throw InvalidModel("bisection needs c1 > 0");
    BisectionResult res;
    const double spread = c1 * static_cast<double>(n) * n;
    if (std::log(r) > spread) {
        res.degenerate = true;
        res.log_Zhat = 0.0;
        return res;
    }
    double lo = -std::log(r) - spread;
    double hi = std::log(r) + spread;
    const double ln2 = std::log(2.0);
    while (hi - lo > ln2) {
        double mid = 0.5 * (lo + hi);
        if (decider(mid) == Decision::AtMostZhatOverR) hi = mid;
        else lo = mid;
        ++res.iterations;
    }
    res.log_Zhat = lo;
    return res;
}

CrudeBounds crude_bounds(const SpinSystem& model) {
    const double n = model.n();
    const double lq = std::log(static_cast<double>(model.q()));
    CrudeBounds b;
    double neg = 0.0, pos = 0.0;
    for (const auto& e : model.edges()) {
        neg += std::fabs(e.beta);
        pos += std::max(0.0, e.beta);
    }
    double hneg = 0.0, hpos = 0.0;
    for (int v = 0; v < model.n(); ++v) {
        double mx_abs = 0.0, mx_pos = 0.0;
        for (double h : model.field_row(v)) {
            mx_abs = std::max(mx_abs, std::fabs(h));
            mx_pos = std::max(mx_pos, h);
        }
        hneg += mx_abs;
        hpos += mx_pos;
    }
    b.log_lower = n * lq - neg - hneg;
    b.log_upper = n * lq + pos + hpos;

    const auto& edges = model.edges();
    const bool uniform = !edges.empty() && std::all_of(edges.begin(), edges.end(),
                                                       [&](const Edge& e) { return e.beta == edges.front().beta; });
    const double beta = uniform ? edges.front().beta : 0.0;
    const double m = static_cast<double>(edges.size());
    auto tighten = [&](double lo, double hi, const char* name) {
        b.family = name;
        b.log_lower = std::max(b.log_lower, lo);
        b.log_upper = std::min(b.log_upper, hi);
    };

    if (uniform && !model.has_field() && beta > 0) {
        tighten(lq + beta * m, n * lq + beta * m, "ferromagnetic-uniform-potts");
    } else if (uniform && !model.has_field() && beta < 0) {
        tighten(n * lq + beta * m, n * lq, "antiferromagnetic-uniform");
    } else if (uniform && beta > 0 && model.q() == 2 && model.n() >= 2 &&
               classify_field(model) != FieldClass::Unrestricted) {
        double h_hat = 0.0;
        for (int v = 0; v < model.n(); ++v)
            for (double h : model.field_row(v)) h_hat = std::max(h_hat, std::fabs(h));
        bool nonneg = true;
        for (int v = 0; v < model.n(); ++v)
            for (double h : model.field_row(v)) nonneg &= h >= 0.0;
        if (nonneg) {
            LogSumExp mono;
            for (int c = 0; c < 2; ++c) {
                Configuration all(model.n(), c);
                mono.add(log_weight(model, all));
            }
            tighten(mono.value(), 0.5 * (beta + h_hat + 1.0) * n * n, "ferromagnetic-ising-field");
        }
    }
    return b;
}

double crude_c1(const SpinSystem& model) {
    auto b = crude_bounds(model);
    double n2 = std::max(1.0, static_cast<double>(model.n()) * model.n());
    return std::max({std::fabs(b.log_lower), std::fabs(b.log_upper), 1e-12}) / n2;
}

int amplification_copies(int n, double c, double rho) {
    if (!(c > 0.0) || !(rho > 0.0)) throw InvalidModel("amplification needs c > 0 and rho > 0");
    int k = 1;
    while (k < c * std::log(static_cast<double>(k) * n) / rho) ++k;
    return k;
}

Amplified amplify_copies(const SpinSystem& model, double c, double rho) {
    int k = amplification_copies(model.n(), c, rho);
    return {disjoint_union(model, k), k};
}

double root_approximation(double log_Zhat_union, int k) { return log_Zhat_union / k; }

}  // namespace spinlab
