#include "spinlab/hub.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "spinlab/errors.hpp"
#include "spinlab/graphs.hpp"
#include "spinlab/logsumexp.hpp"
#include "spinlab/model_json.hpp"
#include "spinlab/potts_reduction.hpp"

namespace spinlab {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_choose(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

// Integrated weight of one 2-path between spins a and b with coupling c.
double log_path_factor(double c, int a, int b) {
    LogSumExp acc;
    for (int x = 0; x < 2; ++x) acc.add(c * (x == a) + c * (x == b));
    return acc.value();
}

// Integrated weight of one hub-to-hub gadget given the hub spins.
double log_pendant_factor(const HubInstance& inst, int s1, int s2) {
    if (inst.variant == HubVariant::Antiferro) {
        LogSumExp acc;
        for (int w1 = 0; w1 < 2; ++w1)
            for (int w2 = 0; w2 < 2; ++w2)
                acc.add(-inst.beta2 * ((w1 == s1) + (w1 == w2) + (w2 == s2)));
        return acc.value();
    }
    LogSumExp a, b;
    for (int w = 0; w < 2; ++w) {
        a.add(inst.beta2 * (w == s1) + inst.h * (w == 0));
        b.add(inst.beta2 * (w == s2) + inst.h * (w == 1));
    }
    return a.value() + b.value();
}

double path_coupling(const HubInstance& inst) {
    return inst.variant == HubVariant::Antiferro ? -inst.beta1 : inst.beta1;
}

double sum_of_couplings(const SpinSystem& g) {
    double s = 0.0;
    for (const auto& e : g.edges()) s += e.beta;
    return s;
}

double log_Z_mono(const SpinSystem& block) {
    LogSumExp acc;
    for (int c = 0; c < block.q(); ++c) {
        Configuration all(block.n(), c);
        acc.add(log_weight(block, all));
    }
    return acc.value();
}

struct FerroParams {
    double beta_hat = 0.0;
    double h_hat = 0.0;
};

FerroParams inspect_ferro_block(const SpinSystem& G, bool strict) {
    FerroParams p;
    for (const auto& e : G.edges()) p.beta_hat = std::max(p.beta_hat, e.beta);
    for (int v = 0; v < G.n(); ++v)
        for (int s = 0; s < 2; ++s) p.h_hat = std::max(p.h_hat, std::fabs(G.field(v, s)));
    if (!strict) return p;
    if (G.edges().empty()) throw FamilyViolation("ferro hub construction needs a graph with edges");
    for (const auto& e : G.edges())
        if (e.beta != p.beta_hat || !(e.beta > 0))
            throw FamilyViolation("ferro hub construction needs a uniform positive coupling on G");
    if (!(p.h_hat > 0)) throw FamilyViolation("ferro hub construction needs a nonzero field");
    for (int v = 0; v < G.n(); ++v) {
        double a = G.field(v, 0), b = G.field(v, 1);
        bool ok = (a == p.h_hat && b == 0.0) || (a == 0.0 && b == p.h_hat);
        if (!ok)
            throw FamilyViolation("vertex " + std::to_string(v) + " field must be (h,0) or (0,h) with a common h");
    }
    return p;
}

void check_antiferro_block(const SpinSystem& G, bool strict) {
    if (G.has_field()) throw FamilyViolation("antiferro hub construction needs a zero-field graph");
    if (!strict) return;
    for (int v = 0; v < G.n(); ++v)
        if (G.degree(v) != 3) throw FamilyViolation("antiferro hub construction needs a 3-regular graph");
    for (const auto& e : G.edges())
        if (e.beta != -0.6) throw FamilyViolation("antiferro hub construction needs beta_G = -0.6 on every edge");
}

double bisect_increasing(const std::function<double(double)>& F, double lo, double hi, double t_lo, double t_hi,
                         const char* what) {
    double flo = F(lo), fhi = F(hi);
    if (flo > t_hi || fhi < t_lo)
        throw TargetUnreachable(std::string(what) + ": target window [" + std::to_string(t_lo) + ", " +
                                    std::to_string(t_hi) + "] outside the reachable range [" +
                                    std::to_string(flo) + ", " + std::to_string(fhi) + "]",
                                flo, fhi);
    if (flo >= t_lo && lo > 0.0) return lo;
    for (int it = 0; it < 300; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = F(mid);
        if (fm > t_hi) hi = mid;
        else if (fm < t_lo) lo = mid;
        else return mid;
    }
    throw ConvergenceFailure(std::string(what) + ": bisection did not converge");
}

}  // namespace

double g_antiferro(double x) { return (3 * std::exp(-2 * x) + 1) / (std::exp(-3 * x) + 3 * std::exp(-x)); }

double log_g_antiferro(double x) {
    return std::log1p(3 * std::exp(-2 * x)) + x - std::log(std::exp(-2 * x) + 3);
}

double log_cosh(double x) {
    double a = std::fabs(x);
    return a + std::log1p(std::exp(-2 * a)) - kLn2;
}

double solve_beta2_antiferro(double beta1, const HubShape& shape, double log_mono, double log_Zhat, double epsilon,
                             int L) {
    const double s = std::sqrt(epsilon * L + 1.0);
    const double t_hi = -std::log(s) + log_mono - log_Zhat;
    const double t_lo = t_hi - kLn2;
    const double wc = shape.pendant_count;
    const double pc = shape.path_total();
    auto F = [&](double x) { return wc * log_g_antiferro(x) - pc * log_cosh(beta1); };
    return bisect_increasing(F, 0.0, beta1 + 2.0, t_lo, t_hi, "solve_beta2_antiferro");
}

double solve_beta2_antiferro(double beta1, int N, double log_Zhat, double epsilon, int L) {
    return solve_beta2_antiferro(beta1, HubShape::standard(N), -0.9 * N, log_Zhat, epsilon, L);
}

double solve_beta2_ferro(double beta1, const HubShape& shape, double log_Zhat, double log_Zmono, double epsilon,
                         int L) {
    const double s = std::sqrt(epsilon * L + 1.0);
    const double t_hi = log_Zmono - std::log(2.0 * s) - log_Zhat;
    const double t_lo = log_Zmono - std::log(3.0 * s) - log_Zhat;
    const double wc = shape.pendant_count;
    const double pc = shape.path_total();
    auto F = [&](double x) { return wc * log_cosh(x) - pc * log_cosh(beta1); };
    return bisect_increasing(F, 0.0, beta1, t_lo, t_hi, "solve_beta2_ferro");
}

double solve_beta2_ferro(double beta1, int N, double log_Zhat, double log_Zmono, double epsilon, int L) {
    return solve_beta2_ferro(beta1, HubShape::standard(N), log_Zhat, log_Zmono, epsilon, L);
}

HubGuard hub_guard(HubVariant variant, const SpinSystem& G, double r) {
    HubGuard g;
    const double N = G.n();
    if (variant == HubVariant::Antiferro) {
        g.log_lower = std::log(r) + N * kLn2 + sum_of_couplings(G);
        g.log_upper = N * kLn2 - std::log(r);
    } else {
        auto p = inspect_ferro_block(G, false);
        g.log_lower = std::log(r) + log_Z_mono(G);
        g.log_upper = 0.5 * (p.beta_hat + p.h_hat + 1.0) * N * N - std::log(r);
    }
    return g;
}

HubInstance build_hub_instance(const SpinSystem& G, HubVariant variant, double epsilon, int L, double log_Zhat,
                               const HubBuildOptions& options) {
    if (G.q() != 2) throw FamilyViolation("hub constructions are Ising (q = 2) only");
    const int N = G.n();
    HubInstance inst;
    inst.variant = variant;
    inst.shape = {N, options.path_multiplicity.value_or(N), options.pendant_count.value_or(N * N)};
    if (inst.shape.path_multiplicity < 1 || inst.shape.pendant_count < 1)
        throw InvalidModel("hub multiplicities must be positive");
    inst.epsilon = epsilon;
    inst.L = L;
    inst.r = reduction_ratio(epsilon, L);
    inst.log_Zhat = log_Zhat;
    inst.visible_block = G;

    if (variant == HubVariant::Antiferro) {
        check_antiferro_block(G, options.check_family);
        inst.log_mono = sum_of_couplings(G);
        inst.beta1 = options.beta1.value_or(3.0);
        if (options.check_family && inst.beta1 < 3.0) throw FamilyViolation("antiferro construction needs beta1 >= 3");
        inst.hidden_block = edgeless(2, N);
    } else {
        auto p = inspect_ferro_block(G, options.check_family);
        inst.beta_hat = p.beta_hat;
        inst.h_hat = p.h_hat;
        inst.log_mono = log_Z_mono(G);
        inst.beta1 = options.beta1.value_or(0.5 * (p.beta_hat + p.h_hat + 5.0));
        if (options.check_family && inst.beta1 < 0.5 * (p.beta_hat + p.h_hat + 5.0))
            throw FamilyViolation("ferro construction needs beta1 >= (beta_hat + h_hat + 5) / 2");
        inst.beta_K = p.beta_hat + 4.0 * kLn2;
        SpinSystemBuilder kb(2, N);
        for (int u = 0; u < N; ++u)
            for (int v = u + 1; v < N; ++v) kb.add_edge(u, v, inst.beta_K);
        for (const auto& f : G.field_entries()) kb.add_field(f.vertex, f.spin, f.h);
        inst.hidden_block = kb.build();
    }

    if (options.enforce_guard) {
        auto guard = hub_guard(variant, G, inst.r);
        if (log_Zhat < guard.log_lower)
            throw GuardViolation("Zhat is below the construction's guard floor; Z_G > Zhat / r is certified",
                                 Decision::AtLeastRZhat);
        if (log_Zhat > guard.log_upper)
            throw GuardViolation("Zhat is above the construction's guard ceiling; Z_G < r Zhat is certified",
                                 Decision::AtMostZhatOverR);
    }

    if (options.beta2) {
        inst.beta2 = *options.beta2;
    } else if (variant == HubVariant::Antiferro) {
        inst.beta2 = solve_beta2_antiferro(inst.beta1, inst.shape, inst.log_mono, log_Zhat, epsilon, L);
    } else {
        inst.beta2 = solve_beta2_ferro(inst.beta1, inst.shape, log_Zhat, inst.log_mono, epsilon, L);
    }
    if (variant == HubVariant::FerroField) inst.h = inst.beta2;

    const int n = inst.shape.vertex_count();
    const double c = path_coupling(inst);
    auto assemble = [&](const SpinSystem& block) {
        SpinSystemBuilder b(2, n);
        for (const auto& e : block.edges()) b.add_edge(e.u, e.v, e.beta);
        for (const auto& f : block.field_entries()) b.add_field(f.vertex, f.spin, f.h);
        for (int v = 0; v < N; ++v)
            for (int i = 0; i < inst.shape.path_multiplicity; ++i)
                for (int j = 0; j < 2; ++j) {
                    int u = inst.path_vertex(v, i, j);
                    b.add_edge(u, v, c);
                    b.add_edge(u, j == 0 ? inst.s1() : inst.s2(), c);
                }
        for (int i = 0; i < inst.shape.pendant_count; ++i) {
            int w1 = inst.pendant_vertex(i, 0);
            int w2 = inst.pendant_vertex(i, 1);
            if (variant == HubVariant::Antiferro) {
                b.add_edge(inst.s1(), w1, -inst.beta2);
                b.add_edge(w1, w2, -inst.beta2);
                b.add_edge(w2, inst.s2(), -inst.beta2);
            } else {
                b.add_edge(inst.s1(), w1, inst.beta2);
                b.add_edge(inst.s2(), w2, inst.beta2);
                b.add_field(w1, 0, inst.h);
                b.add_field(w2, 1, inst.h);
            }
        }
        return b.build();
    };
    inst.visible = assemble(inst.visible_block);
    inst.hidden = assemble(inst.hidden_block);
    return inst;
}

HubClosedForm closed_form_phase(const HubInstance& inst, Which which, std::optional<double> log_Z_block,
                                const EnumerationBudget& budget) {
    const SpinSystem& block = which == Which::Visible ? inst.visible_block : inst.hidden_block;
    double lzb = 0.0;
    if (log_Z_block) {
        lzb = *log_Z_block;
    } else {
        if (!within_budget(block.n(), 2, budget))
            throw BudgetExceeded("closed_form_phase: block with N=" + std::to_string(block.n()) +
                                 " is too large to enumerate and no log Z was supplied");
        lzb = partition_log(block, budget);
    }

    const double wc = inst.shape.pendant_count;
    const double pc = inst.shape.path_total();
    const double b1 = inst.beta1;
    const double b2 = inst.beta2;
    HubClosedForm out;
    if (inst.variant == HubVariant::Antiferro) {
        const double mono = sum_of_couplings(block);
        out.log_ZD = kLn2 + wc * std::log1p(3 * std::exp(-2 * b2)) +
                     pc * (kLn2 - b1 + std::log1p(std::exp(-2 * b1))) + lzb;
        out.log_ZM0 = kLn2 + wc * std::log(std::exp(-3 * b2) + 3 * std::exp(-b2)) +
                      2 * pc * std::log1p(std::exp(-2 * b1)) + mono;
    } else {
        const double h = inst.h;
        const double la = 2 * softplus(b2 + h);
        const double lb = 2 * std::log(std::exp(b2) + std::exp(h));
        out.log_ZD = log_add_exp(wc * la, wc * lb) + pc * (kLn2 + b1 + softplus(2 * b1)) + lzb;
        out.log_ZM0 = wc * (softplus(b2 + h) + std::log(std::exp(b2) + std::exp(h))) + 2 * pc * softplus(2 * b1) +
                      log_Z_mono(block);
    }
    return out;
}

CollapsedSpace collapsed_distribution_hub(const HubInstance& inst, Which which, const EnumerationBudget& budget) {
    const int N = inst.N();
    if (!within_budget(N + 2, 2, budget))
        throw BudgetExceeded("collapsed hub space 4*2^" + std::to_string(N) + " exceeds the enumeration budget");
    const SpinSystem& block = which == Which::Visible ? inst.visible_block : inst.hidden_block;
    const double c = path_coupling(inst);
    const double mult = inst.shape.path_multiplicity;
    const double wc = inst.shape.pendant_count;

    double pf[2][2];
    double wf[2][2];
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            pf[a][b] = log_path_factor(c, a, b);
            wf[a][b] = log_pendant_factor(inst, a, b);
        }

    const std::uint64_t states = std::uint64_t{1} << N;
    std::vector<double> block_w(states);
    std::vector<int> zeros(states);
    Configuration sigma(N);
    for (std::uint64_t idx = 0; idx < states; ++idx) {
        int z = 0;
        for (int v = 0; v < N; ++v) {
            sigma[v] = static_cast<int>((idx >> v) & 1u);
            z += sigma[v] == 0;
        }
        block_w[idx] = log_weight(block, sigma);
        zeros[idx] = z;
    }

    CollapsedSpace space;
    space.classes.reserve(4 * states);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            const double hub_part = wc * wf[s1][s2];
            const double path0 = mult * (pf[0][s1] + pf[0][s2]);
            const double path1 = mult * (pf[1][s1] + pf[1][s2]);
            for (std::uint64_t idx = 0; idx < states; ++idx) {
                CollapsedClass cls;
                cls.key.reserve(N + 2);
                cls.key.push_back(s1);
                cls.key.push_back(s2);
                for (int v = 0; v < N; ++v) cls.key.push_back(static_cast<int>((idx >> v) & 1u));
                cls.log_count = 0.0;
                cls.log_weight = block_w[idx] + hub_part + zeros[idx] * path0 + (N - zeros[idx]) * path1;
                space.classes.push_back(std::move(cls));
            }
        }
    return space;
}

HubPhaseSums hub_phase_sums(const HubInstance& inst, Which which, const EnumerationBudget& budget) {
    auto space = collapsed_distribution_hub(inst, which, budget);
    LogSumExp all, m, d, m0;
    for (const auto& cls : space.classes) {
        double w = cls.log_count + cls.log_weight;
        all.add(w);
        int s1 = cls.key[0], s2 = cls.key[1];
        if (s1 != s2) {
            d.add(w);
            continue;
        }
        m.add(w);
        bool mono = std::all_of(cls.key.begin() + 2, cls.key.end(), [s1](int s) { return s == s1; });
        if (mono) m0.add(w);
    }
    return {all.value(), m.value(), d.value(), m0.value()};
}

HiddenHubSampler::HiddenHubSampler(const HubInstance& inst) : inst_(&inst) {
    const SpinSystem& block = inst.hidden_block;
    const int N = block.n();

    // Type-based sampling needs a block whose weight depends only on the
    // spin counts: edgeless or complete with a uniform coupling.
    const std::size_t edges = block.edge_count();
    double beta_block = 0.0;
    if (edges != 0) {
        if (edges != static_cast<std::size_t>(N) * (N - 1) / 2)
            throw InvalidModel("hidden block must be edgeless or complete for type sampling");
        beta_block = block.edges().front().beta;
        for (const auto& e : block.edges())
            if (e.beta != beta_block) throw InvalidModel("hidden block coupling must be uniform for type sampling");
    }

    std::vector<std::pair<double, double>> keys;
    std::vector<double> group_h0, group_h1;
    for (int v = 0; v < N; ++v) {
        std::pair<double, double> f{block.field(v, 0), block.field(v, 1)};
        auto it = std::find(keys.begin(), keys.end(), f);
        if (it == keys.end()) {
            keys.push_back(f);
            groups_.emplace_back();
            it = keys.end() - 1;
        }
        groups_[static_cast<std::size_t>(it - keys.begin())].push_back(v);
    }

    const double c = path_coupling(inst);
    const double mult = inst.shape.path_multiplicity;
    const double wc = inst.shape.pendant_count;
    const std::size_t G = groups_.size();

    std::vector<double> logw;
    std::vector<int> k(G, 0);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            const double hub_part = wc * log_pendant_factor(inst, s1, s2);
            const double path0 = mult * (log_path_factor(c, 0, s1) + log_path_factor(c, 0, s2));
            const double path1 = mult * (log_path_factor(c, 1, s1) + log_path_factor(c, 1, s2));
            std::fill(k.begin(), k.end(), 0);
            for (;;) {
                int zeros = 0;
                double w = hub_part;
                for (std::size_t g = 0; g < G; ++g) {
                    int size = static_cast<int>(groups_[g].size());
                    zeros += k[g];
                    w += log_choose(size, k[g]) + k[g] * keys[g].first + (size - k[g]) * keys[g].second;
                }
                w += beta_block * (0.5 * zeros * (zeros - 1.0) + 0.5 * (N - zeros) * (N - zeros - 1.0));
                w += zeros * path0 + (N - zeros) * path1;
                types_.push_back({s1, s2, k, 0.0});
                logw.push_back(w);

                std::size_t g = 0;
                while (g < G && k[g] == static_cast<int>(groups_[g].size())) k[g++] = 0;
                if (g == G) break;
                ++k[g];
            }
        }

    const double lz = log_sum_exp(logw);
    cdf_.resize(logw.size());
    KahanSum run;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        types_[i].probability = std::exp(logw[i] - lz);
        run.add(types_[i].probability);
        cdf_[i] = run.value();
    }
}

Configuration HiddenHubSampler::operator()(Rng& rng) const {
    const HubInstance& inst = *inst_;
    double u = rng.uniform() * cdf_.back();
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    idx = std::min(idx, types_.size() - 1);
    const Type& type = types_[idx];

    Configuration sigma(static_cast<std::size_t>(inst.shape.vertex_count()), 0);
    sigma[inst.s1()] = type.s1;
    sigma[inst.s2()] = type.s2;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        std::vector<int> members = groups_[g];
        rng.shuffle(std::span<int>(members));
        for (std::size_t i = 0; i < members.size(); ++i)
            sigma[members[i]] = static_cast<int>(i) < type.zeros_per_group[g] ? 0 : 1;
    }

    const double c = path_coupling(inst);
    auto draw_binary = [&](double w0, double w1) {
        // P(spin 0) = e^{w0} / (e^{w0} + e^{w1}).
        double p0 = 1.0 / (1.0 + std::exp(w1 - w0));
        return rng.uniform() < p0 ? 0 : 1;
    };
    for (int v = 0; v < inst.N(); ++v)
        for (int i = 0; i < inst.shape.path_multiplicity; ++i)
            for (int j = 0; j < 2; ++j) {
                int hub = j == 0 ? type.s1 : type.s2;
                double w0 = c * (sigma[v] == 0) + c * (hub == 0);
                double w1 = c * (sigma[v] == 1) + c * (hub == 1);
                sigma[inst.path_vertex(v, i, j)] = draw_binary(w0, w1);
            }

    for (int i = 0; i < inst.shape.pendant_count; ++i) {
        int w1v = inst.pendant_vertex(i, 0);
        int w2v = inst.pendant_vertex(i, 1);
        if (inst.variant == HubVariant::Antiferro) {
            double w[4];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    w[2 * a + b] = -inst.beta2 * ((a == type.s1) + (a == b) + (b == type.s2));
            double mx = *std::max_element(w, w + 4);
            double p[4], total = 0.0;
            for (int t = 0; t < 4; ++t) total += p[t] = std::exp(w[t] - mx);
            double x = rng.uniform() * total;
            int t = 0;
            while (t < 3 && x >= p[t]) x -= p[t++];
            sigma[w1v] = t / 2;
            sigma[w2v] = t % 2;
        } else {
            sigma[w1v] = draw_binary(inst.beta2 * (type.s1 == 0) + inst.h, inst.beta2 * (type.s1 == 1));
            sigma[w2v] = draw_binary(inst.beta2 * (type.s2 == 0), inst.beta2 * (type.s2 == 1) + inst.h);
        }
    }
    return sigma;
}

Configuration sample_hidden_hub(const HubInstance& inst, Rng& rng) { return HiddenHubSampler(inst)(rng); }

std::string to_string(HubVariant v) { return v == HubVariant::Antiferro ? "antiferro" : "ferro-field"; }

HubVariant hub_variant_from_string(const std::string& s) {
    if (s == "antiferro") return HubVariant::Antiferro;
    if (s == "ferro-field") return HubVariant::FerroField;
    throw InvalidModel("unknown hub variant '" + s + "'");
}

nlohmann::json to_json(const HubInstance& inst) {
    nlohmann::json params = {
        {"construction", "hub"},
        {"variant", to_string(inst.variant)},
        {"N", inst.N()},
        {"path_multiplicity", inst.shape.path_multiplicity},
        {"pendant_count", inst.shape.pendant_count},
        {"beta1", inst.beta1},
        {"beta2", inst.beta2},
        {"h", inst.h},
        {"log_Zhat", inst.log_Zhat},
        {"r", inst.r},
        {"epsilon", inst.epsilon},
        {"L", inst.L},
        {"log_mono", inst.log_mono},
        {"hubs", {inst.s1(), inst.s2()}},
    };
    if (inst.variant == HubVariant::FerroField) {
        params["beta_hat"] = inst.beta_hat;
        params["h_hat"] = inst.h_hat;
        params["beta_K"] = inst.beta_K;
    }
    return {{"visible", model_to_json(inst.visible)}, {"hidden", model_to_json(inst.hidden)}, {"parameters", params}};
}

}  // namespace spinlab
