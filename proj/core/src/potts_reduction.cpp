#include "spinlab/potts_reduction.hpp"

#include <algorithm>
#include <cmath>

#include "spinlab/errors.hpp"
#include "spinlab/graphs.hpp"
#include "spinlab/logsumexp.hpp"
#include "spinlab/model_json.hpp"

namespace spinlab {

double reduction_ratio(double epsilon, int L) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidModel("epsilon must lie in (0,1)");
    if (L < 1) throw InvalidModel("sample count L must be positive");
    return 96.0 / epsilon * std::sqrt(epsilon * L + 1.0);
}

namespace {

double uniform_ferro_beta(const SpinSystem& G) {
    if (G.has_field()) throw FamilyViolation("Potts reduction needs a zero-field input graph");
    if (G.edges().empty()) throw FamilyViolation("Potts reduction needs at least one edge");
    double beta = G.edges().front().beta;
    for (const auto& e : G.edges())
        if (e.beta != beta) throw FamilyViolation("Potts reduction needs a uniform coupling on G");
    if (!(beta > 0.0)) throw FamilyViolation("Potts reduction needs a ferromagnetic coupling on G");
    return beta;
}

std::uint64_t ipow(std::uint64_t b, int e) {
    std::uint64_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

void check_collapsed_budget(int N, int m, int q, const EnumerationBudget& budget) {
    double bits = N * std::log2(static_cast<double>(q)) + std::log2(static_cast<double>(signature_count(m, q)));
    if (bits > budget.bits + 1e-12)
        throw BudgetExceeded("collapsed Potts space with N=" + std::to_string(N) + ", m=" + std::to_string(m) +
                             ", q=" + std::to_string(q) + " exceeds the " + std::to_string(budget.bits) +
                             "-bit budget");
}

// Calls fn(sigma, log block weight, color counts tau) for every coloring of
// the N-vertex block, in index order with vertex 0 least significant.
template <class Fn>
void for_each_block_state(const SpinSystem& block, Fn fn) {
    const int N = block.n();
    const int q = block.q();
    std::vector<int> sigma(N, 0);
    std::vector<int> tau(q, 0);
    std::uint64_t total = ipow(q, N);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        std::uint64_t rest = idx;
        std::fill(tau.begin(), tau.end(), 0);
        for (int v = 0; v < N; ++v) {
            sigma[v] = static_cast<int>(rest % q);
            rest /= q;
            ++tau[sigma[v]];
        }
        fn(std::span<const int>(sigma), log_weight(block, sigma), std::span<const int>(tau));
    }
}

double mono_pairs(std::span<const int> s) {
    double c = 0.0;
    for (int v : s) c += 0.5 * static_cast<double>(v) * (v - 1);
    return c;
}

double cross_dot(std::span<const int> s, std::span<const int> t) {
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) d += static_cast<double>(s[i]) * t[i];
    return d;
}

}  // namespace

PottsGuard potts_guard(const SpinSystem& G, double r) {
    double beta = uniform_ferro_beta(G);
    double base = beta * static_cast<double>(G.edge_count());
    PottsGuard g;
    g.log_lower = std::log(r) + std::log(static_cast<double>(G.q())) + base;
    g.log_upper = G.n() * std::log(static_cast<double>(G.q())) + base - std::log(r);
    return g;
}

PottsInstance build_potts_instance(const SpinSystem& G, int m, double epsilon, int L, double log_Zhat,
                                   const PottsBuildOptions& options) {
    const int q = G.q();
    const int N = G.n();
    if (q < 3) throw FamilyViolation("the Potts reduction needs q >= 3");
    if (m < 1) throw InvalidModel("m must be positive");
    const double beta_G = uniform_ferro_beta(G);

    PottsInstance inst;
    inst.N = N;
    inst.m = m;
    inst.q = q;
    inst.beta_G = beta_G;
    inst.epsilon = epsilon;
    inst.L = L;
    inst.r = reduction_ratio(epsilon, L);
    inst.log_Zhat = log_Zhat;
    inst.meanfield = options.meanfield;

    if (options.enforce_guard) {
        auto guard = potts_guard(G, inst.r);
        if (log_Zhat < guard.log_lower)
            throw GuardViolation("Zhat is below r q exp(beta_G |E_G|); Z_G > Zhat / r is certified",
                                 Decision::AtLeastRZhat);
        if (log_Zhat > guard.log_upper)
            throw GuardViolation("Zhat is above q^N exp(beta_G |E_G|) / r; Z_G < r Zhat is certified",
                                 Decision::AtMostZhatOverR);
    }

    inst.critical = find_critical_Bo(q);
    inst.alpha_hat = inst.critical.alpha_hat;
    inst.alpha0 = inst.alpha_hat - 1.0 / q;

    const double md = static_cast<double>(m);
    const double alpha1 = inst.alpha_hat - (1.0 - inst.alpha_hat) / (q - 1);
    const double alpha2 = alpha1 - 2.0 * std::pow(md, -0.25);
    inst.c1 = options.c1 ? *options.c1
                         : (alpha2 > 0.0 ? 2.0 * std::log(static_cast<double>(q)) / alpha2
                                         : std::numeric_limits<double>::infinity());
    inst.c2 = options.c2 ? *options.c2 : options.delta / 2.0;
    inst.beta_lo = inst.c1 * N / md;
    inst.beta_hi = inst.c2 / (N * std::pow(md, 0.75));

    if (options.beta_override) {
        inst.beta_cross = *options.beta_override;
        inst.beta_overridden = true;
    } else {
        if (!(inst.beta_lo <= inst.beta_hi))
            throw EmptyInterval("cross-coupling interval [" + std::to_string(inst.beta_lo) + ", " +
                                std::to_string(inst.beta_hi) + "] is empty at N=" + std::to_string(N) +
                                ", m=" + std::to_string(m));
        inst.beta_cross = 0.5 * (inst.beta_lo + inst.beta_hi);
    }

    const double s = std::sqrt(epsilon * L + 1.0);
    const double X = inst.alpha0 * inst.beta_cross * N * md + beta_G * static_cast<double>(G.edge_count());
    inst.log_target_R = std::log(8.0 * s / 3.0) + log_Zhat - X;
    inst.solution = solve_beta_H(m, inst.critical, inst.log_target_R, 0.5, options.meanfield);
    inst.beta_H = inst.solution.beta_H;
    inst.beta_K = beta_G + 4.0 * std::log(static_cast<double>(q));

    inst.visible_block = G;
    inst.hidden_block = complete_graph(q, N, inst.beta_K);

    auto assemble = [&](const SpinSystem& block) {
        SpinSystemBuilder b(q, N + m);
        for (const auto& e : block.edges()) b.add_edge(e.u, e.v, e.beta);
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) b.add_edge(N + i, N + j, inst.beta_H);
        for (int v = 0; v < N; ++v)
            for (int i = 0; i < m; ++i) b.add_edge(v, N + i, inst.beta_cross);
        return b.build();
    };
    inst.visible = assemble(inst.visible_block);
    inst.hidden = assemble(inst.hidden_block);
    return inst;
}

PottsScale potts_asymptotic_scale(int N, int q, const MeanFieldOptions& options) {
    PottsScale s;
    s.m_asymptotic = std::pow(static_cast<double>(N), 10.0);
    if (s.m_asymptotic < 2.0e9) {
        std::uint64_t count = signature_count(static_cast<int>(s.m_asymptotic), q);
        s.enumeration_feasible = count <= options.max_signatures;
    }
    return s;
}

CollapsedSpace collapsed_distribution_F(const PottsInstance& inst, Which which, const EnumerationBudget& budget) {
    check_collapsed_budget(inst.N, inst.m, inst.q, budget);
    const SpinSystem& block = which == Which::Visible ? inst.visible_block : inst.hidden_block;

    struct BlockState {
        std::vector<int> sigma;
        std::vector<int> tau;
        double log_w;
    };
    std::vector<BlockState> states;
    for_each_block_state(block, [&](std::span<const int> sigma, double lw, std::span<const int> tau) {
        states.push_back({{sigma.begin(), sigma.end()}, {tau.begin(), tau.end()}, lw});
    });

    CollapsedSpace space;
    for_each_signature(inst.m, inst.q, [&](std::span<const int> s) {
        double lc = log_multinomial(inst.m, s, inst.meanfield.multinomial);
        double h_part = inst.beta_H * mono_pairs(s);
        for (const auto& st : states) {
            CollapsedClass c;
            c.key.assign(s.begin(), s.end());
            c.key.insert(c.key.end(), st.sigma.begin(), st.sigma.end());
            c.log_count = lc;
            c.log_weight = h_part + st.log_w + inst.beta_cross * cross_dot(s, st.tau);
            space.classes.push_back(std::move(c));
        }
    });
    return space;
}

double PhaseTriple::log_Z() const {
    double parts[] = {log_ZM, log_ZD, log_ZS};
    return log_sum_exp(parts);
}

PhaseTriple phase_partition_F(const PottsInstance& inst, Which which, const EnumerationBudget& budget) {
    check_collapsed_budget(inst.N, inst.m, inst.q, budget);
    const SpinSystem& block = which == Which::Visible ? inst.visible_block : inst.hidden_block;

    // Block states collapse to their color counts for the cross term.
    std::vector<std::pair<std::vector<int>, LogSumExp>> by_tau;
    for_each_block_state(block, [&](std::span<const int>, double lw, std::span<const int> tau) {
        for (auto& [t, acc] : by_tau)
            if (std::equal(t.begin(), t.end(), tau.begin())) {
                acc.add(lw);
                return;
            }
        by_tau.emplace_back(std::vector<int>(tau.begin(), tau.end()), LogSumExp{});
        by_tau.back().second.add(lw);
    });

    PhaseWindows windows(inst.m, inst.q, inst.alpha_hat, inst.meanfield);
    LogSumExp zm, zd, zs;
    for_each_signature(inst.m, inst.q, [&](std::span<const int> s) {
        double base = log_multinomial(inst.m, s, inst.meanfield.multinomial) + inst.beta_H * mono_pairs(s);
        LogSumExp cls;
        for (const auto& [t, acc] : by_tau) cls.add(base + acc.value() + inst.beta_cross * cross_dot(s, t));
        switch (windows.classify(s).phase) {
            case Phase::Majority: zm.merge(cls); break;
            case Phase::Disordered: zd.merge(cls); break;
            case Phase::Residual: zs.merge(cls); break;
        }
    });
    return {zm.value(), zd.value(), zs.value()};
}

HiddenPottsSampler::HiddenPottsSampler(const PottsInstance& inst, const EnumerationBudget& budget)
    : N_(inst.N), m_(inst.m), q_(inst.q) {
    double bits = std::log2(static_cast<double>(signature_count(inst.m, inst.q))) +
                  std::log2(static_cast<double>(signature_count(inst.N, inst.q)));
    if (bits > budget.bits + 1e-12) throw BudgetExceeded("hidden Potts type space exceeds the enumeration budget");

    std::vector<Signature> ks;
    for_each_signature(inst.N, inst.q, [&](std::span<const int> t) { ks.emplace_back(t.begin(), t.end()); });

    std::vector<double> logw;
    for_each_signature(inst.m, inst.q, [&](std::span<const int> s) {
        double hs = log_multinomial(inst.m, s, inst.meanfield.multinomial) + inst.beta_H * mono_pairs(s);
        for (const auto& t : ks) {
            double w = hs + log_multinomial(inst.N, t, inst.meanfield.multinomial) + inst.beta_K * mono_pairs(t) +
                       inst.beta_cross * cross_dot(s, t);
            types_.push_back({Signature(s.begin(), s.end()), t, 0.0});
            logw.push_back(w);
        }
    });
    double lz = log_sum_exp(logw);
    cdf_.resize(logw.size());
    KahanSum run;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        types_[i].probability = std::exp(logw[i] - lz);
        run.add(types_[i].probability);
        cdf_[i] = run.value();
    }
}

Configuration HiddenPottsSampler::operator()(Rng& rng) const {
    double u = rng.uniform() * cdf_.back();
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    idx = std::min(idx, types_.size() - 1);
    const auto& type = types_[idx];

    Configuration sigma(static_cast<std::size_t>(N_ + m_));
    auto fill = [&](const Signature& sig, int offset, int count) {
        std::vector<int> spins;
        spins.reserve(count);
        for (int c = 0; c < q_; ++c) spins.insert(spins.end(), sig[c], c);
        rng.shuffle(std::span<int>(spins));
        std::copy(spins.begin(), spins.end(), sigma.begin() + offset);
    };
    fill(type.k, 0, N_);
    fill(type.h, N_, m_);
    return sigma;
}

Configuration sample_hidden_potts(const PottsInstance& inst, Rng& rng) {
    return HiddenPottsSampler(inst)(rng);
}

nlohmann::json to_json(const PottsInstance& inst) {
    nlohmann::json params = {
        {"construction", "potts"},
        {"N", inst.N},
        {"m", inst.m},
        {"q", inst.q},
        {"beta_G", inst.beta_G},
        {"beta_cross", inst.beta_cross},
        {"beta_H", inst.beta_H},
        {"beta_K", inst.beta_K},
        {"alpha_hat", inst.alpha_hat},
        {"alpha0", inst.alpha0},
        {"Bo", inst.critical.Bo},
        {"log_Zhat", inst.log_Zhat},
        {"r", inst.r},
        {"epsilon", inst.epsilon},
        {"L", inst.L},
        {"c1", inst.c1},
        {"c2", inst.c2},
        {"beta_interval", {inst.beta_lo, inst.beta_hi}},
        {"beta_overridden", inst.beta_overridden},
        {"log_target_R", inst.log_target_R},
    };
    return {{"visible", model_to_json(inst.visible)}, {"hidden", model_to_json(inst.hidden)}, {"parameters", params}};
}

}  // namespace spinlab
