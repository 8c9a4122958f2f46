#include "spinlab/gadget.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "spinlab/errors.hpp"
#include "spinlab/logsumexp.hpp"
#include "spinlab/model_json.hpp"

namespace spinlab {

double theta(double rho) { return (300.0 + 0.75 * rho) / (300.0 + rho); }

bool theta_inequality_holds(double rho, int d) {
    double d_in = std::floor(theta(rho) * d);
    return rho * d_in / 300.0 - (d - d_in) >= rho * d / 600.0;
}

void GadgetParams::validate() const {
    if (b < 1) throw InvalidModel("gadget needs b >= 1");
    if (p < 0 || p > b) throw InvalidModel("gadget needs 0 <= p <= b, got p=" + std::to_string(p));
    if (d_in < 0 || d_out < 0) throw InvalidModel("gadget degrees must be nonnegative");
    if (d() > b) throw InvalidModel("gadget needs d_in + d_out <= b");
    if (regime == GadgetRegime::HighDegree && rho != 0.0 && !(rho > 0.0 && rho < 1.0))
        throw InvalidModel("high-degree regime needs rho in (0,1)");
    if (regime == GadgetRegime::LowDegree && alpha != 0.0 && !(alpha > 0.0 && alpha <= 0.25))
        throw InvalidModel("low-degree regime needs alpha in (0, 1/4]");
}

GadgetParams GadgetParams::low_degree(int b, int d, double alpha) {
    if (!(alpha > 0.0 && alpha <= 0.25)) throw InvalidModel("low-degree regime needs alpha in (0, 1/4]");
    if (d < 3) throw InvalidModel("low-degree regime needs d >= 3");
    GadgetParams g;
    g.b = b;
    g.p = static_cast<int>(std::floor(std::pow(static_cast<double>(b), alpha) + 1e-12));
    g.d_in = d - 1;
    g.d_out = 1;
    g.regime = GadgetRegime::LowDegree;
    g.alpha = alpha;
    g.validate();
    return g;
}

GadgetParams GadgetParams::high_degree(int b, int d, double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidModel("high-degree regime needs rho in (0,1)");
    GadgetParams g;
    g.b = b;
    g.p = b;
    g.d_in = static_cast<int>(std::floor(theta(rho) * d));
    g.d_out = d - g.d_in;
    g.regime = GadgetRegime::HighDegree;
    g.rho = rho;
    g.validate();
    return g;
}

std::vector<int> Gadget::ports(int side) const {
    std::vector<int> out;
    for (int i = side * b; i < (side + 1) * b; ++i)
        if (is_port[i]) out.push_back(i);
    return out;
}

std::vector<int> Gadget::degrees() const {
    std::vector<int> deg(2 * b, 0);
    for (auto [l, r] : edges) {
        ++deg[l];
        ++deg[r];
    }
    return deg;
}

Gadget sample_gadget(const GadgetParams& params, Rng& rng) {
    params.validate();
    const int b = params.b;
    Gadget g;
    g.b = b;
    g.d_out = params.d_out;
    g.is_port.assign(2 * b, false);

    for (int side = 0; side < 2; ++side) {
        std::vector<int> ids(b);
        std::iota(ids.begin(), ids.end(), side * b);
        rng.shuffle(std::span<int>(ids));
        for (int i = 0; i < params.p; ++i) g.is_port[ids[i]] = true;
    }

    std::set<std::pair<int, int>> edges;
    std::vector<int> perm(b);
    for (int k = 0; k < params.d_in; ++k) {
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<int>(perm));
        for (int i = 0; i < b; ++i) edges.insert({i, b + perm[i]});
    }

    std::vector<int> left, right;
    for (int i = 0; i < b; ++i) {
        if (!g.is_port[i]) left.push_back(i);
        if (!g.is_port[b + i]) right.push_back(b + i);
    }
    for (int k = 0; k < params.d_out; ++k) {
        std::vector<int> r = right;
        rng.shuffle(std::span<int>(r));
        for (std::size_t i = 0; i < left.size(); ++i) edges.insert({left[i], r[i]});
    }
    g.edges.assign(edges.begin(), edges.end());
    return g;
}

bool has_design_degrees(const Gadget& gadget, const GadgetParams& params) {
    if (gadget.b != params.b) return false;
    auto deg = gadget.degrees();
    for (int i = 0; i < 2 * gadget.b; ++i)
        if (deg[i] != (gadget.is_port[i] ? params.d_in : params.d())) return false;
    return true;
}

Gadget sample_full_degree_gadget(const GadgetParams& params, Rng& rng, int max_attempts) {
    for (int i = 0; i < max_attempts; ++i) {
        Gadget g = sample_gadget(params, rng);
        if (has_design_degrees(g, params)) return g;
    }
    throw ConvergenceFailure("no full-degree gadget after " + std::to_string(max_attempts) + " draws");
}

int cross_edge_count(double beta, double beta_hat) {
    return static_cast<int>(std::ceil(std::fabs(beta) / beta_hat - 1e-12));
}

double BlowupInstance::intra_log_weight() const {
    return beta_hat * static_cast<double>(gadget.edges.size()) * base.n();
}

BlowupInstance build_blowup(const SpinSystem& G, const GadgetParams& params, double beta_hat, Rng& rng) {
    return build_blowup(G, params, sample_gadget(params, rng), beta_hat);
}

BlowupInstance build_blowup(const SpinSystem& G, const GadgetParams& params, const Gadget& gadget, double beta_hat) {
    params.validate();
    if (!(beta_hat > 0.0)) throw InvalidModel("blow-up needs beta_hat > 0");
    if (gadget.b != params.b) throw InvalidModel("gadget size does not match the parameters");
    FieldClass fc = classify_field(G);
    if (fc == FieldClass::Unrestricted)
        throw FamilyViolation("blow-up needs an h-vertex-monochromatic field on the base graph");

    const int b = params.b;
    const int d_out = params.d_out;
    const int per = 2 * b;

    int max_blocks = 0;
    for (const auto& e : G.edges()) {
        int ell = cross_edge_count(e.beta, beta_hat);
        if (ell > 0 && d_out == 0)
            throw CapacityViolation("edge {" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                    "} needs cross edges but d_out = 0");
        if (ell > 0) max_blocks = std::max(max_blocks, (ell + d_out * d_out - 1) / (d_out * d_out));
    }
    if (static_cast<long>(G.max_degree()) * d_out * max_blocks > params.p)
        throw CapacityViolation("port capacity d_G d_out max ceil(ell/d_out^2) = " +
                                std::to_string(static_cast<long>(G.max_degree()) * d_out * max_blocks) +
                                " exceeds p = " + std::to_string(params.p));

    BlowupInstance inst;
    inst.base = G;
    inst.params = params;
    inst.gadget = gadget;
    inst.beta_hat = beta_hat;

    const int n = G.n() * per;
    SpinSystemBuilder builder(G.q(), n);
    Bipartition sides(n);
    inst.base_vertex.resize(n);
    for (int v = 0; v < G.n(); ++v) {
        for (int l = 0; l < per; ++l) {
            inst.base_vertex[v * per + l] = v;
            sides[v * per + l] = l < b ? 0 : 1;
        }
        for (auto [l, r] : gadget.edges) builder.add_edge(v * per + l, v * per + r, beta_hat);
        for (int s = 0; s < G.q(); ++s)
            if (double h = G.field(v, s); h != 0.0)
                for (int l = 0; l < per; ++l) builder.add_field(v * per + l, s, h / (2.0 * b));
    }

    // Next unused port per (base vertex, side).
    const auto ports_l = gadget.ports(0);
    const auto ports_r = gadget.ports(1);
    std::vector<std::array<std::size_t, 2>> cursor(G.n(), {0, 0});
    auto take = [&](int v, int side, int count, std::size_t edge_index) {
        const auto& ports = side == 0 ? ports_l : ports_r;
        auto& c = cursor[v][side];
        if (c + count > ports.size())
            throw CapacityViolation("base edge #" + std::to_string(edge_index) + " exhausts the ports of vertex " +
                                    std::to_string(v));
        std::vector<int> out;
        for (int i = 0; i < count; ++i) out.push_back(v * per + ports[c + i]);
        c += count;
        return out;
    };

    for (std::size_t ei = 0; ei < G.edges().size(); ++ei) {
        const auto& e = G.edges()[ei];
        PortLedgerEntry entry;
        entry.edge_index = static_cast<int>(ei);
        entry.ell = cross_edge_count(e.beta, beta_hat);
        if (entry.ell > 0) {
            const int blocks = (entry.ell + d_out * d_out - 1) / (d_out * d_out);
            const int k = blocks * d_out;
            const double w = e.beta / (2.0 * entry.ell);
            // L_u with R_v, then R_u with L_v.
            for (int pass = 0; pass < 2; ++pass) {
                auto a = take(e.u, pass == 0 ? 0 : 1, k, ei);
                auto c = take(e.v, pass == 0 ? 1 : 0, k, ei);
                int placed = 0;
                for (int blk = 0; blk < blocks && placed < entry.ell; ++blk)
                    for (int x = 0; x < d_out && placed < entry.ell; ++x)
                        for (int y = 0; y < d_out && placed < entry.ell; ++y, ++placed) {
                            int s = a[blk * d_out + x];
                            int t = c[blk * d_out + y];
                            builder.add_edge(s, t, w);
                            entry.cross_edges.emplace_back(s, t);
                        }
            }
        }
        inst.ledger.push_back(std::move(entry));
    }
    builder.set_bipartition(std::move(sides));
    inst.model = builder.build();
    return inst;
}

bool in_omega_good(const BlowupInstance& inst, std::span<const int> sigma) {
    return project_good(inst, sigma).has_value();
}

std::optional<Configuration> project_good(const BlowupInstance& inst, std::span<const int> sigma) {
    validate_configuration(inst.model, sigma);
    const int per = 2 * inst.gadget.b;
    Configuration base(inst.base.n());
    for (int v = 0; v < inst.base.n(); ++v) {
        int s = sigma[v * per];
        for (int l = 1; l < per; ++l)
            if (sigma[v * per + l] != s) return std::nullopt;
        base[v] = s;
    }
    return base;
}

Configuration lift_sample(const BlowupInstance& inst, std::span<const int> sigma_G) {
    validate_configuration(inst.base, sigma_G);
    const int per = 2 * inst.gadget.b;
    Configuration out(static_cast<std::size_t>(inst.model.n()));
    for (int v = 0; v < inst.base.n(); ++v) std::fill_n(out.begin() + v * per, per, sigma_G[v]);
    return out;
}

double omega_good_mass(const BlowupInstance& inst, const EnumerationBudget& budget) {
    const int per = 2 * inst.gadget.b;
    const int nb = inst.base.n();
    Predicate good = [per, nb](std::span<const int> s) {
        for (int v = 0; v < nb; ++v)
            for (int l = 1; l < per; ++l)
                if (s[v * per + l] != s[v * per]) return false;
        return true;
    };
    Predicate all = [](std::span<const int>) { return true; };
    Predicate preds[] = {good, all};
    auto r = restricted_partition_logs(inst.model, preds, budget);
    return std::exp(r[0] - r[1]);
}

int GadgetContext::boundary_size() const {
    int ports = 0;
    for (bool p : gadget.is_port) ports += p;
    return ports * gadget.d_out;
}

SpinSystem GadgetContext::conditional_model(std::span<const int> tau) const {
    if (static_cast<int>(tau.size()) != boundary_size())
        throw InvalidConfiguration("boundary configuration has the wrong length");
    const int n = 2 * gadget.b;
    SpinSystemBuilder b(q, n);
    for (auto [l, r] : gadget.edges) b.add_edge(l, r, beta_B);
    if (h != 0.0)
        for (int v = 0; v < n; ++v) b.add_field(v, kappa, h);
    std::size_t slot = 0;
    for (int side = 0; side < 2; ++side)
        for (int port : gadget.ports(side))
            for (int k = 0; k < gadget.d_out; ++k) {
                int spin = tau[slot++];
                if (spin < 0 || spin >= q) throw InvalidConfiguration("boundary spin out of range");
                b.add_field(port, spin, boundary_coupling);
            }
    return b.build();
}

double ground_state_mass(const GadgetContext& ctx, std::span<const int> tau, const EnumerationBudget& budget) {
    SpinSystem model = ctx.conditional_model(tau);
    double lz = partition_log(model, budget);
    LogSumExp phases;
    for (int c = 0; c < ctx.q; ++c) {
        Configuration all(model.n(), c);
        phases.add(log_weight(model, all));
    }
    return std::exp(phases.value() - lz);
}

nlohmann::json to_json(const Gadget& gadget) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [l, r] : gadget.edges) edges.push_back({l, r});
    std::vector<int> ports;
    for (int i = 0; i < 2 * gadget.b; ++i)
        if (gadget.is_port[i]) ports.push_back(i);
    return {{"b", gadget.b}, {"d_out", gadget.d_out}, {"edges", edges}, {"ports", ports}};
}

nlohmann::json to_json(const BlowupInstance& inst) {
    std::vector<int> port_flags(inst.model.n());
    for (int x = 0; x < inst.model.n(); ++x) port_flags[x] = inst.is_port(x) ? 1 : 0;
    nlohmann::json ledger = nlohmann::json::array();
    for (const auto& e : inst.ledger) {
        nlohmann::json cross = nlohmann::json::array();
        for (auto [s, t] : e.cross_edges) cross.push_back({s, t});
        ledger.push_back({{"edge", e.edge_index}, {"ell", e.ell}, {"cross_edges", cross}});
    }
    nlohmann::json params = {
        {"b", inst.params.b},
        {"p", inst.params.p},
        {"d_in", inst.params.d_in},
        {"d_out", inst.params.d_out},
        {"regime", inst.params.regime == GadgetRegime::LowDegree ? "low-degree" : "high-degree"},
        {"rho", inst.params.rho},
        {"alpha", inst.params.alpha},
        {"beta_hat", inst.beta_hat},
    };
    return {{"model", model_to_json(inst.model)},
            {"gadget_map", {{"base_vertex", inst.base_vertex}, {"port", port_flags}, {"ledger", ledger}}},
            {"gadget", to_json(inst.gadget)},
            {"parameters", params}};
}

}  // namespace spinlab
