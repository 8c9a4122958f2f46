#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinlab/exact.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

enum class HubVariant { Antiferro, FerroField };

struct HubShape {
    int N = 0;
    int path_multiplicity = 0;  // 2-paths per (block vertex, hub); N in the standard construction
    int pendant_count = 0;      // hub-to-hub gadgets; N^2 in the standard construction

    static HubShape standard(int N) { return {N, N, N * N}; }
    int path_total() const { return N * path_multiplicity; }
    int vertex_count() const { return N + 2 + 2 * N * path_multiplicity + 2 * pendant_count; }
};

struct HubBuildOptions {
    std::optional<double> beta1;
    // Skips the solver and uses this value (ferro also sets h to it).
    std::optional<double> beta2;
    std::optional<int> path_multiplicity;
    std::optional<int> pendant_count;
    bool enforce_guard = true;
    bool check_family = true;
    // log Z of the visible block when it is too large to enumerate.
    std::optional<double> log_Z_block;
    EnumerationBudget budget;
};

struct HubInstance {
    HubVariant variant = HubVariant::Antiferro;
    SpinSystem visible;
    SpinSystem hidden;
    SpinSystem visible_block;  // G
    SpinSystem hidden_block;   // I_N (antiferro) or K_N at beta_K with G's fields (ferro)
    HubShape shape;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double h = 0.0;
    double log_Zhat = 0.0;
    double r = 0.0;
    double epsilon = 0.0;
    int L = 0;
    double beta_hat = 0.0;
    double h_hat = 0.0;
    double beta_K = 0.0;
    // Sum of beta_G over edges (antiferro) or log Z_G^mo (ferro).
    double log_mono = 0.0;

    int N() const { return shape.N; }
    int s1() const { return shape.N; }
    int s2() const { return shape.N + 1; }
    int path_vertex(int v, int i, int j) const {
        return shape.N + 2 + 2 * (v * shape.path_multiplicity + i) + j;
    }
    int pendant_vertex(int i, int j) const {
        return shape.N + 2 + 2 * shape.path_total() + 2 * i + j;
    }
};

struct HubGuard {
    double log_lower = 0.0;
    double log_upper = 0.0;
};

// (3e^{-2x}+1)/(e^{-3x}+3e^{-x}) and its logarithm.
double g_antiferro(double x);
double log_g_antiferro(double x);
double log_cosh(double x);

// Z^D / Z^{M0} window solvers. The general forms take the construction shape
// and the log weight of the monochromatic block states.
double solve_beta2_antiferro(double beta1, int N, double log_Zhat, double epsilon, int L);
double solve_beta2_antiferro(double beta1, const HubShape& shape, double log_mono, double log_Zhat,
                             double epsilon, int L);
double solve_beta2_ferro(double beta1, int N, double log_Zhat, double log_Zmono, double epsilon, int L);
double solve_beta2_ferro(double beta1, const HubShape& shape, double log_Zhat, double log_Zmono, double epsilon,
                         int L);

HubGuard hub_guard(HubVariant variant, const SpinSystem& G, double r);

HubInstance build_hub_instance(const SpinSystem& G, HubVariant variant, double epsilon, int L, double log_Zhat,
                               const HubBuildOptions& options = {});

struct HubClosedForm {
    double log_ZD = 0.0;
    double log_ZM0 = 0.0;
};

HubClosedForm closed_form_phase(const HubInstance& inst, Which which,
                                std::optional<double> log_Z_block = std::nullopt,
                                const EnumerationBudget& budget = {});

CollapsedSpace collapsed_distribution_hub(const HubInstance& inst, Which which,
                                          const EnumerationBudget& budget = {});

struct HubPhaseSums {
    double log_Z = 0.0;
    double log_ZM = 0.0;   // s1 == s2
    double log_ZD = 0.0;   // s1 != s2
    double log_ZM0 = 0.0;  // s1 == s2 and the block monochromatic in that spin
};

HubPhaseSums hub_phase_sums(const HubInstance& inst, Which which, const EnumerationBudget& budget = {});

// Exact sampler for the hidden model. Types are the hub spins plus the number
// of spin-0 block vertices in each group of vertices sharing a field vector.
class HiddenHubSampler {
public:
    explicit HiddenHubSampler(const HubInstance& inst);

    Configuration operator()(Rng& rng) const;

    struct Type {
        int s1 = 0;
        int s2 = 0;
        std::vector<int> zeros_per_group;
        double probability = 0.0;
    };
    const std::vector<Type>& types() const { return types_; }
    const std::vector<std::vector<int>>& groups() const { return groups_; }

private:
    const HubInstance* inst_;
    std::vector<std::vector<int>> groups_;
    std::vector<Type> types_;
    std::vector<double> cdf_;
};

Configuration sample_hidden_hub(const HubInstance& inst, Rng& rng);

std::string to_string(HubVariant v);
HubVariant hub_variant_from_string(const std::string& s);

nlohmann::json to_json(const HubInstance& inst);

}  // namespace spinlab
