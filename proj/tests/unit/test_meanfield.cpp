#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "naive.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/graphs.hpp"
#include "spinlab/logsumexp.hpp"
#include "spinlab/meanfield.hpp"

using namespace spinlab;

namespace {

std::vector<double> ray(double x, int q) {
    std::vector<double> a(q, (1 - x) / (q - 1));
    a[0] = x;
    return a;
}

// Independent oracle: scan phi along the majority ray on a fine grid, keep
// the best interior local maximum away from the uniform point, refine it, and
// bisect on beta for equal heights.
double majority_height(double beta, int q, double* argmax) {
    const int steps = 20000;
    const double x0 = 1.0 / q, span = 1 - 1.0 / q;
    std::vector<double> v(steps + 1);
    for (int i = 0; i <= steps; ++i) v[i] = phi(ray(x0 + span * i / steps, q), beta);
    double best = -INFINITY, bx = -1;
    for (int i = 20; i < steps; ++i)
        if (v[i] >= v[i - 1] && v[i] >= v[i + 1] && v[i] > best) best = v[i], bx = x0 + span * i / steps;
    if (bx < 0) return -INFINITY;
    double h = span / steps;
    for (int k = 0; k < 80; ++k) {
        double a = bx - h, b = bx + h;
        double fa = phi(ray(a, q), beta), fb = phi(ray(b, q), beta);
        if (fa > best) best = fa, bx = a;
        else if (fb > best) best = fb, bx = b;
        else h /= 2;
    }
    if (argmax) *argmax = bx;
    return best;
}

double oracle_Bo(int q, double* alpha) {
    double lo = 2.0, hi = 2.0 * q;
    std::vector<double> u(q, 1.0 / q);
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (majority_height(mid, q, nullptr) > phi(u, mid)) hi = mid;
        else lo = mid;
    }
    majority_height(hi, q, alpha);
    return hi;
}

}  // namespace

TEST(Phi, UniformPoint) {
    for (int q : {2, 3, 5}) {
        std::vector<double> u(q, 1.0 / q);
        EXPECT_NEAR(phi(u, 1.7), std::log(static_cast<double>(q)) + 1.7 / (2 * q), 1e-14);
    }
}

TEST(Phi, PointMass) {
    std::vector<double> e1{1.0, 0.0, 0.0};
    EXPECT_NEAR(phi(e1, 2.5), 1.25, 1e-15);
}

TEST(Phi, RejectsNonSimplexPoints) {
    std::vector<double> bad{0.5, 0.6};
    std::vector<double> neg{1.5, -0.5};
    EXPECT_THROW(phi(bad, 1.0), InvalidModel);
    EXPECT_THROW(phi(neg, 1.0), InvalidModel);
}

TEST(Phi, LipschitzInBeta) {
    std::mt19937_64 gen(3);
    std::exponential_distribution<double> ex(1.0);
    std::uniform_real_distribution<double> b(0.0, 6.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(4);
        double s = 0;
        for (auto& x : a) s += (x = ex(gen));
        for (auto& x : a) x /= s;
        double b1 = b(gen), b2 = b(gen);
        EXPECT_LE(std::fabs(phi(a, b1) - phi(a, b2)), 0.5 * std::fabs(b1 - b2) + 1e-12);
    }
}

TEST(Psi1, Endpoints) {
    const int q = 3;
    std::vector<double> u(q, 1.0 / q);
    EXPECT_NEAR(psi1(1.0 / q, 2.0, q), phi(u, 2.0), 1e-14);
    EXPECT_NEAR(psi1(1.0, 2.0, q), 1.0, 1e-14);
}

TEST(Psi1, MatchesPhiOnExplicitVector) {
    for (double x : {0.1, 0.3, 0.5, 0.77, 0.95})
        for (int q : {3, 4, 6}) EXPECT_NEAR(psi1(x, 3.1, q), phi(ray(x, q), 3.1), 1e-14);
}

TEST(Psi1, DerivativeMatchesFiniteDifference) {
    for (double x : {0.4, 0.6, 0.8}) {
        double h = 1e-6;
        double fd = (psi1(x + h, 2.9, 3) - psi1(x - h, 2.9, 3)) / (2 * h);
        EXPECT_NEAR(psi1_derivative(x, 2.9, 3), fd, 1e-7);
    }
}

TEST(CriticalPoint, ThreeSpins) {
    auto cp = find_critical_Bo(3);
    EXPECT_NEAR(cp.Bo, 4 * std::log(2.0), 1e-9);
    EXPECT_NEAR(cp.alpha_hat, 2.0 / 3.0, 1e-6);
    double alpha_oracle = 0;
    EXPECT_NEAR(cp.Bo, oracle_Bo(3, &alpha_oracle), 1e-7);
    EXPECT_NEAR(cp.alpha_hat, alpha_oracle, 1e-5);
}

TEST(CriticalPoint, FourSpins) {
    auto cp = find_critical_Bo(4);
    EXPECT_NEAR(cp.Bo, 3 * std::log(3.0), 1e-9);
    EXPECT_NEAR(cp.alpha_hat, 0.75, 1e-6);
    EXPECT_NEAR(cp.Bo, oracle_Bo(4, nullptr), 1e-7);
}

TEST(CriticalPoint, ClosedFormAcrossQ) {
    for (int q = 3; q <= 8; ++q) {
        auto cp = find_critical_Bo(q);
        EXPECT_NEAR(cp.Bo, 2.0 * (q - 1) * std::log(q - 1.0) / (q - 2), 1e-9) << q;
        EXPECT_GT(cp.alpha_hat, 1.0 / q);
    }
}

TEST(CriticalPoint, EqualHeights) {
    const double tol = 1e-12;
    auto cp = find_critical_Bo(3, tol);
    EXPECT_LE(std::fabs(psi1(cp.alpha_hat, cp.Bo, 3) - psi1(1.0 / 3, cp.Bo, 3)), 1e-10);
    EXPECT_LE(std::fabs(cp.phi_at_u - cp.phi_at_majority), 1e-10);
    EXPECT_THROW(find_critical_Bo(2), InvalidModel);
}

TEST(CriticalPoint, StrictConcavityAtMaxima) {
    const int q = 3;
    auto cp = find_critical_Bo(q);
    auto hessian_negative = [&](std::vector<double> a) {
        // Tangent directions e1 - e3 and e2 - e3.
        std::vector<std::vector<double>> dirs{{1, 0, -1}, {0, 1, -1}};
        const double h = 1e-4;
        auto f = [&](double s, double t) {
            std::vector<double> p(a);
            for (int i = 0; i < q; ++i) p[i] += s * dirs[0][i] + t * dirs[1][i];
            return phi(p, cp.Bo);
        };
        double f00 = f(0, 0);
        double hxx = (f(h, 0) - 2 * f00 + f(-h, 0)) / (h * h);
        double hyy = (f(0, h) - 2 * f00 + f(0, -h)) / (h * h);
        double hxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
        double tr = hxx + hyy, det = hxx * hyy - hxy * hxy;
        return tr < 0 && det > 0;
    };
    EXPECT_TRUE(hessian_negative({1.0 / 3, 1.0 / 3, 1.0 / 3}));
    EXPECT_TRUE(hessian_negative(ray(cp.alpha_hat, q)));
}

TEST(PhaseSplit, ZeroCouplingTotal) {
    auto cp = find_critical_Bo(3);
    for (int m : {5, 12, 30}) {
        auto s = phase_split(m, 3, 0.0, cp.alpha_hat);
        EXPECT_NEAR(s.log_Z(), m * std::log(3.0), 1e-10 * m);
    }
}

TEST(PhaseSplit, SignatureCounts) {
    for (int m : {1, 7, 40}) EXPECT_EQ(signature_count(m, 2), static_cast<std::uint64_t>(m + 1));
    EXPECT_EQ(signature_count(12, 3), 91u);
    std::uint64_t seen = 0;
    for_each_signature(9, 4, [&](std::span<const int> s) {
        int sum = 0;
        for (int x : s) {
            EXPECT_GE(x, 0);
            sum += x;
        }
        EXPECT_EQ(sum, 9);
        ++seen;
    });
    EXPECT_EQ(seen, signature_count(9, 4));
}

TEST(PhaseSplit, RatioBracketAtCriticalPoint) {
    auto cp = find_critical_Bo(3);
    const int m = 12;
    auto s = phase_split(m, 3, cp.Bo / m, cp.alpha_hat);
    double logA = std::log(static_cast<double>(signature_count(m, 3)));
    double g = s.log_ZM - s.log_ZD;
    EXPECT_GE(g, -std::log(3.0) - logA);
    EXPECT_LE(g, std::log(3.0) + 2 * logA);
}

TEST(PhaseSplit, MatchesCompleteGraphEnumeration) {
    auto cp = find_critical_Bo(3);
    for (int m : {4, 6, 8})
        for (double b : {0.0, 0.1, cp.Bo / m, 0.5}) {
            auto s = phase_split(m, 3, b, cp.alpha_hat);
            EXPECT_LT(naive::rel_err(s.log_Z(), naive::log_Z(complete_graph(3, m, b))), 1e-12);
        }
}

TEST(PhaseSplit, PartsAreExhaustive) {
    auto cp = find_critical_Bo(3);
    for (int m : {12, 25, 50}) {
        auto s = phase_split(m, 3, cp.Bo / m, cp.alpha_hat);
        LogSumExp all;
        for_each_signature(m, 3, [&](std::span<const int> sig) {
            all.add(signature_log_weight(m, sig, cp.Bo / m));
        });
        EXPECT_NEAR(s.log_Z(), all.value(), 1e-10 * all.value());
    }
}

TEST(PhaseSplit, MajorityIsQTimesOneBranch) {
    // The majority windows are pairwise disjoint once m/2 > 2 m^{3/4}, i.e. m > 256.
    auto cp = find_critical_Bo(3);
    for (int m : {300, 400}) {
        auto s = phase_split(m, 3, cp.Bo / m, cp.alpha_hat);
        EXPECT_NEAR(s.log_ZM, std::log(3.0) + s.log_ZM_branch0, 1e-12 * s.log_ZM);
    }
}

TEST(PhaseSplit, RejectPolicyThrowsOnOverlap) {
    auto cp = find_critical_Bo(3);
    MeanFieldOptions opts;
    opts.overlap = OverlapPolicy::Reject;
    EXPECT_THROW(phase_split(12, 3, cp.Bo / 12, cp.alpha_hat, opts), InvalidModel);
    auto s = phase_split(12, 3, cp.Bo / 12, cp.alpha_hat);
    EXPECT_GT(s.overlapping_signatures, 0u);
}

TEST(PhaseSplit, SignatureBudget) {
    MeanFieldOptions opts;
    opts.max_signatures = 100;
    EXPECT_THROW(phase_split(20, 3, 0.1, 0.66, opts), BudgetExceeded);
}

TEST(Multinomial, BigIntegerModeAgrees) {
    std::vector<int> s{17, 20, 23};
    EXPECT_NEAR(log_multinomial(60, s), log_multinomial(60, s, MultinomialMode::ExactBigInt), 1e-10);
    auto cp = find_critical_Bo(3);
    MeanFieldOptions exact;
    exact.multinomial = MultinomialMode::ExactBigInt;
    auto a = phase_split(30, 3, cp.Bo / 30, cp.alpha_hat);
    auto b = phase_split(30, 3, cp.Bo / 30, cp.alpha_hat, exact);
    EXPECT_NEAR(a.log_Z(), b.log_Z(), 1e-9 * a.log_Z());
}

TEST(LogRatio, IncreasingAroundCriticalPoint) {
    auto cp = find_critical_Bo(3);
    const int m = 40;
    double prev = -INFINITY;
    for (int i = -10; i <= 10; ++i) {
        double b = cp.Bo / m + i * 0.2 * std::pow(m, -1.5);
        double g = log_ratio_g(m, 3, b, cp.alpha_hat);
        EXPECT_GT(g, prev);
        prev = g;
    }
}

TEST(LogRatio, SignChangeWithWideBracket) {
    auto cp = find_critical_Bo(3);
    const int m = 40;
    bool found = false;
    for (double c = 1; c <= 64 && !found; c *= 2) {
        double lo = log_ratio_g(m, 3, cp.Bo / m - c * std::pow(m, -1.5), cp.alpha_hat);
        double hi = log_ratio_g(m, 3, cp.Bo / m + c * std::pow(m, -1.5), cp.alpha_hat);
        found = lo < 0 && hi > 0;
    }
    EXPECT_TRUE(found);
}

TEST(LogRatio, DerivativeIsMonochromaticEdgeGap) {
    auto cp = find_critical_Bo(3);
    const int m = 20;
    const double b = cp.Bo / m, h = 1e-5;
    double fd = (log_ratio_g(m, 3, b + h, cp.alpha_hat) - log_ratio_g(m, 3, b - h, cp.alpha_hat)) / (2 * h);
    auto s = phase_split(m, 3, b, cp.alpha_hat);
    double gap = s.mono_edges_M - s.mono_edges_D;
    EXPECT_LT(std::fabs(fd - gap) / std::fabs(gap), 1e-6);
}

TEST(SolveBetaH, NearFixedPoint) {
    auto cp = find_critical_Bo(3);
    const int m = 40;
    const double delta = 0.1;
    double g0 = log_ratio_g(m, 3, cp.Bo / m, cp.alpha_hat);
    double logR = g0 - std::log(1 - delta / 2);
    auto sol = solve_beta_H(m, cp, logR, delta);
    EXPECT_NEAR(sol.beta_H, cp.Bo / m, std::pow(m, -1.5));
    EXPECT_LE(sol.log_ratio, logR + 1e-12);
    EXPECT_GE(sol.log_ratio, logR + std::log(1 - delta) - 1e-12);
}

TEST(SolveBetaH, RatioLandsInWindow) {
    auto cp = find_critical_Bo(3);
    for (double R : {10.0, 0.1}) {
        auto sol = solve_beta_H(40, cp, std::log(R), 0.1);
        double ratio = std::exp(log_ratio_g(40, 3, sol.beta_H, cp.alpha_hat));
        EXPECT_GE(ratio, 0.9 * R);
        EXPECT_LE(ratio, R);
        EXPECT_LE(std::fabs(sol.beta_H - cp.Bo / 40), sol.c_prime * std::pow(40.0, -1.5) + 1e-15);
    }
}

TEST(SolveBetaH, UnreachableTarget) {
    auto cp = find_critical_Bo(3);
    try {
        solve_beta_H(40, cp, 1e4, 0.1);
        FAIL() << "expected TargetUnreachable";
    } catch (const TargetUnreachable& e) {
        EXPECT_LT(e.achieved_hi(), 1e4);
    }
}

TEST(Metastability, ReportsGapAndScale) {
    auto cp = find_critical_Bo(3);
    auto rep = metastability_report(40, 3, cp.alpha_hat, cp.Bo / 40);
    EXPECT_DOUBLE_EQ(rep.sqrt_m, std::sqrt(40.0));
    EXPECT_LT(rep.gap, 0.0);
}

TEST(Metastability, WindowsCoverEverySignatureAtDeskScale) {
    // With m^{3/4} windows and q = 3 the residual set is empty for these m.
    auto cp = find_critical_Bo(3);
    for (int m : {30, 40, 60, 80}) {
        auto s = phase_split(m, 3, cp.Bo / m, cp.alpha_hat);
        EXPECT_EQ(s.log_ZS, kNegInf) << m;
    }
}
