#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace spinlab {

// Color-count vector (s_1, ..., s_q) of a configuration on a complete graph.
using Signature = std::vector<int>;

// H(alpha) + (beta/2) * ||alpha||^2 on the probability simplex.
double phi(std::span<const double> alpha, double beta);
// phi restricted to (x, y, ..., y) with y = (1-x)/(q-1).
double psi1(double x, double beta, int q);
// d/dx psi1.
double psi1_derivative(double x, double beta, int q);

struct CriticalPoint {
    int q = 3;
    double Bo = 0.0;
    double alpha_hat = 0.0;
    double phi_at_u = 0.0;
    double phi_at_majority = 0.0;
};

// Location of the majority-branch local maximum of psi1 in (1/q, 1), or a
// negative value if psi1 has no such maximum at this beta.
double majority_maximizer(double beta, int q);

CriticalPoint find_critical_Bo(int q, double tol = 1e-12);

enum class Phase { Majority, Disordered, Residual };

// How a signature lying in more than one window is assigned.
enum class OverlapPolicy {
    NearestCenter,  // the window whose center is closest in max-norm; ties go to D
    Reject,         // throw when any signature lies in two windows
};

enum class MultinomialMode { LogGamma, ExactBigInt };

struct MeanFieldOptions {
    double window_exponent = 0.75;
    OverlapPolicy overlap = OverlapPolicy::NearestCenter;
    MultinomialMode multinomial = MultinomialMode::LogGamma;
    std::uint64_t max_signatures = std::uint64_t{1} << 26;
};

struct PhaseWindows {
    PhaseWindows(int m, int q, double alpha_hat, const MeanFieldOptions& options = {});

    int m;
    int q;
    double alpha_hat;
    double width;
    OverlapPolicy overlap;

    struct Membership {
        Phase phase = Phase::Residual;
        int branch = -1;  // majority color for Phase::Majority
        bool in_D = false;
        bool in_M = false;
        int m_windows = 0;  // number of majority windows containing the signature
    };

    Membership classify(std::span<const int> s) const;
};

struct PhaseSplit {
    int m = 0;
    int q = 0;
    double beta_H = 0.0;
    double alpha_hat = 0.0;
    double window_exponent = 0.75;
    double width = 0.0;
    double log_ZM = 0.0;
    double log_ZD = 0.0;
    double log_ZS = 0.0;
    // Restricted sum over signatures assigned to the spin-0 majority branch.
    double log_ZM_branch0 = 0.0;
    // Mean number of monochromatic edges conditional on M and on D.
    double mono_edges_M = 0.0;
    double mono_edges_D = 0.0;
    std::uint64_t signature_count = 0;
    std::uint64_t overlapping_signatures = 0;

    double log_Z() const;
};

std::uint64_t signature_count(int m, int q);
void for_each_signature(int m, int q, const std::function<void(std::span<const int>)>& fn);
double log_multinomial(int m, std::span<const int> s, MultinomialMode mode = MultinomialMode::LogGamma);
// log of multinomial(m; s) * exp(beta_H * sum C(s_i, 2)).
double signature_log_weight(int m, std::span<const int> s, double beta_H,
                            MultinomialMode mode = MultinomialMode::LogGamma);

PhaseSplit phase_split(int m, int q, double beta_H, double alpha_hat, const MeanFieldOptions& options = {});
double log_ratio_g(int m, int q, double beta_H, double alpha_hat, const MeanFieldOptions& options = {});

struct BetaSolution {
    double beta_H = 0.0;
    double log_ratio = 0.0;  // g(beta_H) at the returned point
    double c_prime = 0.0;    // bracket half-width multiplier that was used
    int iterations = 0;
};

// Finds beta_H with (1 - delta) R <= Z^M / Z^D <= R, R = exp(log_R).
BetaSolution solve_beta_H(int m, const CriticalPoint& cp, double log_R, double delta,
                          const MeanFieldOptions& options = {});

struct MetastabilityReport {
    double gap = 0.0;  // log Z^S - min(log Z^M, log Z^D)
    double sqrt_m = 0.0;
    PhaseSplit split;
    double normalized() const { return gap / sqrt_m; }
};

MetastabilityReport metastability_report(int m, int q, double alpha_hat, double beta_H,
                                         const MeanFieldOptions& options = {});

}  // namespace spinlab
