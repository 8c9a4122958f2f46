#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "naive.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/graphs.hpp"
#include "spinlab/logsumexp.hpp"
#include "spinlab/model_json.hpp"
#include "spinlab/potts_reduction.hpp"

using namespace spinlab;

namespace {

PottsInstance small_instance(int m, double beta_m, double log_Zhat_shift, const SpinSystem& G) {
    PottsBuildOptions o;
    o.beta_override = beta_m / m;
    o.enforce_guard = false;
    return build_potts_instance(G, m, 0.9, 2, partition_log(G) + log_Zhat_shift, o);
}

}  // namespace

TEST(ReductionRatio, Formula) {
    EXPECT_NEAR(reduction_ratio(0.9, 2), 96 / 0.9 * std::sqrt(2.8), 1e-12);
    EXPECT_NEAR(reduction_ratio(0.5, 10), 192 * std::sqrt(6.0), 1e-12);
}

TEST(PottsInstance, CouplingsAndStructure) {
    auto G = cycle_graph(3, 4, 0.5);
    auto inst = small_instance(10, 1.0, 0.0, G);
    EXPECT_DOUBLE_EQ(inst.beta_K - inst.beta_G, 4 * std::log(3.0));
    EXPECT_EQ(inst.visible.n(), 14);
    EXPECT_EQ(inst.hidden.n(), 14);
    EXPECT_EQ(inst.visible.edge_count(), 4u + 45u + 40u);
    EXPECT_EQ(inst.hidden.edge_count(), 6u + 45u + 40u);
    for (const SpinSystem* f : {&inst.visible, &inst.hidden}) {
        for (const auto& e : f->edges()) {
            bool u_in_H = e.u >= inst.N, v_in_H = e.v >= inst.N;
            if (u_in_H && v_in_H) EXPECT_DOUBLE_EQ(e.beta, inst.beta_H);
            else if (u_in_H != v_in_H) EXPECT_DOUBLE_EQ(e.beta, inst.beta_cross);
            else EXPECT_DOUBLE_EQ(e.beta, f == &inst.visible ? inst.beta_G : inst.beta_K);
            EXPECT_LE(std::fabs(e.beta), std::max(inst.beta_G, inst.beta_K));
        }
    }
}

TEST(PottsInstance, BetaHWithinSolverBracket) {
    auto G = cycle_graph(3, 3, 0.5);
    for (int m : {20, 40}) {
        auto inst = small_instance(m, 1.0, 2.0, G);
        EXPECT_LE(std::fabs(inst.beta_H - inst.critical.Bo / m), inst.solution.c_prime * std::pow(m, -1.5) + 1e-15);
    }
}

TEST(PottsInstance, EmptyIntervalWithoutOverride) {
    auto G = cycle_graph(3, 3, 0.5);
    PottsBuildOptions o;
    o.enforce_guard = false;
    EXPECT_THROW(build_potts_instance(G, 20, 0.9, 2, 3.0, o), EmptyInterval);
}

TEST(PottsInstance, GuardCertifiesTrivialAnswers) {
    auto G = cycle_graph(3, 12, 0.5);
    const double r = reduction_ratio(0.9, 2);
    auto guard = potts_guard(G, r);
    EXPECT_NEAR(guard.log_lower, std::log(r) + std::log(3.0) + 0.5 * 12, 1e-12);
    EXPECT_NEAR(guard.log_upper, 12 * std::log(3.0) + 0.5 * 12 - std::log(r), 1e-12);
    ASSERT_LT(guard.log_lower, guard.log_upper);
    PottsBuildOptions o;
    o.beta_override = 0.01;
    try {
        build_potts_instance(G, 20, 0.9, 2, guard.log_lower - 1, o);
        FAIL();
    } catch (const GuardViolation& g) {
        EXPECT_EQ(g.certified(), Decision::AtLeastRZhat);
    }
    try {
        build_potts_instance(G, 20, 0.9, 2, guard.log_upper + 1, o);
        FAIL();
    } catch (const GuardViolation& g) {
        EXPECT_EQ(g.certified(), Decision::AtMostZhatOverR);
    }
}

TEST(PottsInstance, RejectsUnsupportedBlocks) {
    PottsBuildOptions o;
    o.beta_override = 0.01;
    o.enforce_guard = false;
    EXPECT_THROW(build_potts_instance(cycle_graph(2, 3, 0.5), 10, 0.9, 2, 1.0, o), FamilyViolation);
    EXPECT_THROW(build_potts_instance(cycle_graph(3, 3, -0.5), 10, 0.9, 2, 1.0, o), FamilyViolation);
    EXPECT_THROW(build_potts_instance(SpinSystem(3, 3, {{0, 1, 0.5}}, {{0, 0, 1.0}}), 10, 0.9, 2, 1.0, o),
                 FamilyViolation);
}

TEST(PottsInstance, AsymptoticScaleIsFlaggedInfeasible) {
    auto s = potts_asymptotic_scale(4, 3);
    EXPECT_DOUBLE_EQ(s.m_asymptotic, std::pow(4.0, 10));
    EXPECT_FALSE(s.enumeration_feasible);
}

TEST(PottsCollapsed, SumsMatchBruteForce) {
    // m = 6 is the smallest size at which both M and D are nonempty for q = 3.
    auto G = cycle_graph(3, 3, 0.5);
    auto inst = small_instance(6, 1.0, 1.0, G);
    for (Which w : {Which::Visible, Which::Hidden}) {
        const SpinSystem& full = w == Which::Visible ? inst.visible : inst.hidden;
        EXPECT_LT(naive::rel_err(collapsed_distribution_F(inst, w).log_Z(), naive::log_Z(full)), 1e-12);
    }
}

TEST(PottsCollapsed, TvMatchesFullEnumeration) {
    auto G = cycle_graph(3, 3, 0.5);
    auto inst = small_instance(6, 2.0, 1.0, G);
    double collapsed = tv_collapsed(collapsed_distribution_F(inst, Which::Visible),
                                    collapsed_distribution_F(inst, Which::Hidden));
    EXPECT_NEAR(collapsed, tv_exact(inst.visible, inst.hidden), 1e-12);
}

TEST(PottsCollapsed, SharedClassDescriptors) {
    auto inst = small_instance(6, 1.0, 0.0, cycle_graph(3, 3, 0.5));
    auto v = collapsed_distribution_F(inst, Which::Visible);
    auto h = collapsed_distribution_F(inst, Which::Hidden);
    ASSERT_EQ(v.classes.size(), h.classes.size());
    for (std::size_t i = 0; i < v.classes.size(); ++i) EXPECT_EQ(v.classes[i].key, h.classes[i].key);
    EXPECT_EQ(v.classes.size(), signature_count(6, 3) * 27);
}

TEST(PottsPhases, PartsSumToTotal) {
    auto inst = small_instance(20, 1.0, 0.0, cycle_graph(3, 3, 0.5));
    for (Which w : {Which::Visible, Which::Hidden}) {
        auto p = phase_partition_F(inst, w);
        EXPECT_NEAR(p.log_Z(), collapsed_distribution_F(inst, w).log_Z(), 1e-10);
    }
}

TEST(PottsPhases, RatioOffsetIsStableAcrossM) {
    // Z_F^D/Z_F^M against (Z_H^D/Z_H^M) Z_G exp(-alpha0 beta N m - beta_G |E_G|): at desk
    // scale the offset is a bounded constant rather than e^{+-delta}.
    auto G = cycle_graph(3, 3, 0.5);
    const double lzg = partition_log(G);
    std::vector<double> offsets;
    for (int m : {20, 40, 80}) {
        auto inst = small_instance(m, 0.2, std::log(reduction_ratio(0.9, 2)) + 1, G);
        auto F = phase_partition_F(inst, Which::Visible);
        auto H = phase_split(m, 3, inst.beta_H, inst.alpha_hat);
        double X = inst.alpha0 * inst.beta_cross * inst.N * m + inst.beta_G * G.edge_count();
        offsets.push_back((F.log_ZD - F.log_ZM) - ((H.log_ZD - H.log_ZM) + lzg - X));
    }
    for (double o : offsets) EXPECT_LT(std::fabs(o), std::log(16.0));
    EXPECT_LT(std::fabs(offsets.front() - offsets.back()), 0.05);
}

TEST(PottsPhases, ResidualShareDoesNotGrow) {
    auto G = cycle_graph(3, 3, 0.5);
    double prev = INFINITY;
    for (int m : {20, 40, 80}) {
        auto inst = small_instance(m, 0.2, 0.0, G);
        auto F = phase_partition_F(inst, Which::Visible);
        double share = F.log_ZS - F.log_Z();
        EXPECT_LE(share, prev);
        prev = share;
    }
}

TEST(PottsPhases, VisibleRatioApproachesTargetWindow) {
    auto G = cycle_graph(3, 3, 0.5);
    const double s = std::sqrt(0.9 * 2 + 1);
    const double shift = std::log(reduction_ratio(0.9, 2)) + 1;
    double prev = -INFINITY;
    for (int m : {40, 120, 200, 300}) {
        auto inst = small_instance(m, 5.0, shift, G);
        auto F = phase_partition_F(inst, Which::Visible);
        double deviation = (F.log_ZD - F.log_ZM) - (-std::log(s) - shift);
        EXPECT_GT(deviation, prev) << m;
        prev = deviation;
        auto Hs = phase_partition_F(inst, Which::Hidden);
        EXPECT_LE(Hs.log_ZD - Hs.log_ZM, std::log(2 / (inst.r * s)));
    }
}

TEST(PottsPhases, QualitativeDichotomy) {
    auto G = cycle_graph(3, 3, 0.5);
    const double lr = std::log(reduction_ratio(0.9, 2));
    auto tv_at = [&](double shift) {
        auto inst = small_instance(120, 5.0, shift, G);
        return tv_collapsed(collapsed_distribution_F(inst, Which::Visible),
                            collapsed_distribution_F(inst, Which::Hidden));
    };
    double yes = tv_at(lr + 1), no = tv_at(-lr - 1);
    EXPECT_LT(yes, 0.1);
    EXPECT_GE(no, 0.1);
    EXPECT_LT(yes, no);
}

TEST(HiddenPottsSampler, UniformWhenAllCouplingsVanish) {
    PottsInstance inst;
    inst.N = 3;
    inst.m = 3;
    inst.q = 3;
    HiddenPottsSampler sampler(inst);
    Rng rng(12);
    const int draws = 100000;
    std::vector<std::vector<int>> counts(6, std::vector<int>(3, 0));
    for (int i = 0; i < draws; ++i) {
        auto s = sampler(rng);
        ASSERT_EQ(s.size(), 6u);
        for (int v = 0; v < 6; ++v) ++counts[v][s[v]];
    }
    const double mean = draws / 3.0, sd = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
    for (const auto& row : counts)
        for (int c : row) EXPECT_LT(std::fabs(c - mean), 4 * sd);
}

TEST(HiddenPottsSampler, TypesMatchCollapsedHiddenLaw) {
    auto inst = small_instance(5, 1.0, 0.0, cycle_graph(3, 3, 0.5));
    HiddenPottsSampler sampler(inst);
    double total = 0;
    for (const auto& t : sampler.types()) total += t.probability;
    EXPECT_NEAR(total, 1.0, 1e-12);

    // Aggregate the collapsed hidden law by (sig H, sig K) and compare.
    auto space = collapsed_distribution_F(inst, Which::Hidden);
    auto p = space.probabilities();
    std::map<std::vector<int>, double> agg;
    for (std::size_t i = 0; i < space.classes.size(); ++i) {
        const auto& key = space.classes[i].key;
        std::vector<int> type(key.begin(), key.begin() + 3);
        std::vector<int> k(3, 0);
        for (std::size_t j = 3; j < key.size(); ++j) ++k[key[j]];
        type.insert(type.end(), k.begin(), k.end());
        agg[type] += p[i];
    }
    for (const auto& t : sampler.types()) {
        std::vector<int> type(t.h);
        type.insert(type.end(), t.k.begin(), t.k.end());
        EXPECT_NEAR(agg[type], t.probability, 1e-12);
    }
}

TEST(HiddenPottsSampler, SeedReproducible) {
    auto inst = small_instance(5, 1.0, 0.0, cycle_graph(3, 3, 0.5));
    Rng a(3), b(3);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_hidden_potts(inst, a), sample_hidden_potts(inst, b));
}

TEST(PottsJson, PairedModelsAndParameters) {
    auto inst = small_instance(5, 1.0, 0.0, cycle_graph(3, 3, 0.5));
    auto doc = to_json(inst);
    EXPECT_TRUE(validate_model_json(doc.at("visible")).empty());
    EXPECT_TRUE(validate_model_json(doc.at("hidden")).empty());
    EXPECT_TRUE(doc.contains("parameters"));
}
