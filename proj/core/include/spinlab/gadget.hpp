#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinlab/exact.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

enum class GadgetRegime { LowDegree, HighDegree };

// theta = (300 + 0.75 rho) / (300 + rho).
double theta(double rho);
// rho floor(theta d) / 300 - (d - floor(theta d)) >= rho d / 600.
bool theta_inequality_holds(double rho, int d);

struct GadgetParams {
    int b = 0;
    int p = 0;
    int d_in = 0;
    int d_out = 0;
    GadgetRegime regime = GadgetRegime::HighDegree;
    double rho = 0.0;
    double alpha = 0.0;

    int d() const { return d_in + d_out; }
    void validate() const;

    // d_in = d - 1, d_out = 1, p = floor(b^alpha).
    static GadgetParams low_degree(int b, int d, double alpha);
    // p = b, d_in = floor(theta d), d_out = d - d_in.
    static GadgetParams high_degree(int b, int d, double rho);
};

// Bipartite gadget on local vertices 0..b-1 (L) and b..2b-1 (R).
struct Gadget {
    int b = 0;
    int d_out = 0;
    std::vector<std::pair<int, int>> edges;  // (l, r) with l < b <= r
    std::vector<bool> is_port;

    std::vector<int> ports(int side) const;  // side 0: L, side 1: R, ascending
    std::vector<int> degrees() const;
};

Gadget sample_gadget(const GadgetParams& params, Rng& rng);
// Ports have degree d_in and non-ports d_in + d_out, i.e. no matching edges collided.
bool has_design_degrees(const Gadget& gadget, const GadgetParams& params);
// Redraws until has_design_degrees holds; throws ConvergenceFailure after max_attempts.
Gadget sample_full_degree_gadget(const GadgetParams& params, Rng& rng, int max_attempts = 100000);

struct PortLedgerEntry {
    int edge_index = 0;  // index into the base model's edge list
    int ell = 0;
    std::vector<std::pair<int, int>> cross_edges;  // blown-up vertex ids
};

struct BlowupInstance {
    SpinSystem base;
    GadgetParams params;
    Gadget gadget;
    double beta_hat = 0.0;
    SpinSystem model;
    std::vector<int> base_vertex;  // per blown-up vertex
    std::vector<PortLedgerEntry> ledger;

    int vertex(int v, int local) const { return v * 2 * gadget.b + local; }
    int local_of(int x) const { return x % (2 * gadget.b); }
    bool is_port(int x) const { return gadget.is_port[local_of(x)]; }
    // beta_B |E_B| n: log-weight of all intra-gadget edges when monochromatic.
    double intra_log_weight() const;
};

int cross_edge_count(double beta, double beta_hat);

BlowupInstance build_blowup(const SpinSystem& G, const GadgetParams& params, double beta_hat, Rng& rng);
// Same construction with a caller-supplied gadget reused for every vertex.
BlowupInstance build_blowup(const SpinSystem& G, const GadgetParams& params, const Gadget& gadget, double beta_hat);

bool in_omega_good(const BlowupInstance& inst, std::span<const int> sigma);
std::optional<Configuration> project_good(const BlowupInstance& inst, std::span<const int> sigma);
Configuration lift_sample(const BlowupInstance& inst, std::span<const int> sigma_G);

// mu(Omega_good) by exact enumeration of the blown-up model.
double omega_good_mass(const BlowupInstance& inst, const EnumerationBudget& budget = {});

// One gadget with its port boundary frozen. Each port has d_out boundary
// neighbours; tau lists their spins port by port in ascending port order.
struct GadgetContext {
    Gadget gadget;
    int q = 2;
    double beta_B = 0.0;
    double boundary_coupling = 0.0;
    double h = 0.0;
    int kappa = 0;

    int boundary_size() const;
    SpinSystem conditional_model(std::span<const int> tau) const;
};

double ground_state_mass(const GadgetContext& ctx, std::span<const int> tau, const EnumerationBudget& budget = {});

nlohmann::json to_json(const Gadget& gadget);
nlohmann::json to_json(const BlowupInstance& inst);

}  // namespace spinlab
