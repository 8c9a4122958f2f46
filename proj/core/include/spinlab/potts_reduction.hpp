#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinlab/exact.hpp"
#include "spinlab/meanfield.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

// r = 96 / eps * sqrt(eps * L + 1).
double reduction_ratio(double epsilon, int L);

struct PottsBuildOptions {
    std::optional<double> c1;
    std::optional<double> c2;
    double delta = 0.1;
    // Cross coupling to use instead of the interval midpoint.
    std::optional<double> beta_override;
    bool enforce_guard = true;
    MeanFieldOptions meanfield;
};

struct PottsInstance {
    SpinSystem visible;        // F = G + K_m joined by K_{m,N}
    SpinSystem hidden;         // F* with K_N in place of G
    SpinSystem visible_block;  // G
    SpinSystem hidden_block;   // K_N at beta_K
    int N = 0;
    int m = 0;
    int q = 0;
    double beta_G = 0.0;
    double beta_cross = 0.0;
    double beta_H = 0.0;
    double beta_K = 0.0;
    double alpha_hat = 0.0;
    double alpha0 = 0.0;
    double log_Zhat = 0.0;
    double r = 0.0;
    double epsilon = 0.0;
    int L = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    double beta_lo = 0.0;  // [c1 N/m, c2/(N m^{3/4})]
    double beta_hi = 0.0;
    bool beta_overridden = false;
    double log_target_R = 0.0;  // solver target for Z_H^M / Z_H^D
    CriticalPoint critical;
    BetaSolution solution;
    MeanFieldOptions meanfield;

    // Vertex ids: 0..N-1 form the G block, N..N+m-1 the complete graph H.
    int h_vertex(int i) const { return N + i; }
};

struct PottsGuard {
    double log_lower = 0.0;  // log(r q e^{beta_G |E_G|})
    double log_upper = 0.0;  // log(q^N e^{beta_G |E_G|} / r)
};

PottsGuard potts_guard(const SpinSystem& G, double r);

PottsInstance build_potts_instance(const SpinSystem& G, int m, double epsilon, int L, double log_Zhat,
                                   const PottsBuildOptions& options = {});

struct PottsScale {
    double m_asymptotic = 0.0;  // N^10
    bool enumeration_feasible = false;
};

PottsScale potts_asymptotic_scale(int N, int q, const MeanFieldOptions& options = {});

CollapsedSpace collapsed_distribution_F(const PottsInstance& inst, Which which,
                                        const EnumerationBudget& budget = {});

struct PhaseTriple {
    double log_ZM = 0.0;
    double log_ZD = 0.0;
    double log_ZS = 0.0;
    double log_Z() const;
};

PhaseTriple phase_partition_F(const PottsInstance& inst, Which which, const EnumerationBudget& budget = {});

// Exact sampler for the hidden model: draws the joint (sig(H), sig(K)) type
// and then a uniformly random arrangement of each signature.
class HiddenPottsSampler {
public:
    explicit HiddenPottsSampler(const PottsInstance& inst, const EnumerationBudget& budget = {});

    Configuration operator()(Rng& rng) const;

    struct Type {
        Signature h;
        Signature k;
        double probability = 0.0;
    };
    const std::vector<Type>& types() const { return types_; }

private:
    int N_;
    int m_;
    int q_;
    std::vector<Type> types_;
    std::vector<double> cdf_;
};

Configuration sample_hidden_potts(const PottsInstance& inst, Rng& rng);

nlohmann::json to_json(const PottsInstance& inst);

}  // namespace spinlab
