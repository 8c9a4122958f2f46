#include "spinlab/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "spinlab/errors.hpp"

namespace spinlab {

namespace {

std::uint64_t edge_key(int u, int v) {
    auto a = static_cast<std::uint64_t>(std::min(u, v));
    auto b = static_cast<std::uint64_t>(std::max(u, v));
    return (a << 32) | b;
}

std::string describe_edge(int u, int v) {
    std::ostringstream os;
    os << "{" << u << "," << v << "}";
    return os.str();
}

}  // namespace

SpinSystem::SpinSystem(int q, int n, std::vector<Edge> edges, std::vector<FieldEntry> field,
                       std::optional<Bipartition> bipartition)
    : q_(q), n_(n), edges_(std::move(edges)), bipartition_(std::move(bipartition)) {
    if (q < 2) throw InvalidModel("q must be at least 2, got " + std::to_string(q));
    if (n < 0) throw InvalidModel("vertex count must be nonnegative");

    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges_.size() * 2);
    std::vector<int> deg(n, 0);
    for (const auto& e : edges_) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            throw InvalidModel("edge " + describe_edge(e.u, e.v) + " has an endpoint out of range");
        if (e.u == e.v) throw InvalidModel("self-loop at vertex " + std::to_string(e.u));
        if (!std::isfinite(e.beta))
            throw InvalidModel("edge " + describe_edge(e.u, e.v) + " has a non-finite coupling");
        if (!seen.insert(edge_key(e.u, e.v)).second)
            throw InvalidModel("duplicate edge " + describe_edge(e.u, e.v));
        ++deg[e.u];
        ++deg[e.v];
    }

    field_.assign(static_cast<std::size_t>(n) * q, 0.0);
    for (const auto& f : field) {
        if (f.vertex < 0 || f.vertex >= n)
            throw InvalidModel("field entry for vertex " + std::to_string(f.vertex) + " out of range");
        if (f.spin < 0 || f.spin >= q)
            throw InvalidModel("field entry spin " + std::to_string(f.spin) + " out of range");
        if (!std::isfinite(f.h)) throw InvalidModel("non-finite field value");
        field_[static_cast<std::size_t>(f.vertex) * q + f.spin] += f.h;
    }
    has_field_ = std::any_of(field_.begin(), field_.end(), [](double h) { return h != 0.0; });

    if (bipartition_) {
        if (static_cast<int>(bipartition_->size()) != n)
            throw InvalidModel("bipartition labels must cover every vertex");
        for (auto s : *bipartition_)
            if (s > 1) throw InvalidModel("bipartition labels must be 0 (L) or 1 (R)");
        for (const auto& e : edges_)
            if ((*bipartition_)[e.u] == (*bipartition_)[e.v])
                throw InvalidModel("edge " + describe_edge(e.u, e.v) + " lies inside one side of the bipartition");
    }

    adj_offset_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int v = 0; v < n; ++v) adj_offset_[v + 1] = adj_offset_[v] + deg[v];
    adj_.resize(adj_offset_[n]);
    std::vector<std::size_t> fill(adj_offset_.begin(), adj_offset_.end() - 1);
    for (const auto& e : edges_) {
        adj_[fill[e.u]++] = {e.v, e.beta};
        adj_[fill[e.v]++] = {e.u, e.beta};
    }
}

std::vector<FieldEntry> SpinSystem::field_entries() const {
    std::vector<FieldEntry> out;
    for (int v = 0; v < n_; ++v)
        for (int s = 0; s < q_; ++s)
            if (double h = field(v, s); h != 0.0) out.push_back({v, s, h});
    return out;
}

int SpinSystem::max_degree() const {
    int d = 0;
    for (int v = 0; v < n_; ++v) d = std::max(d, degree(v));
    return d;
}

std::optional<double> SpinSystem::coupling(int u, int v) const {
    for (const auto& nb : neighbors(u))
        if (nb.vertex == v) return nb.beta;
    return std::nullopt;
}

SpinSystemBuilder::SpinSystemBuilder(int q, int n) : q_(q), n_(n) {}

SpinSystemBuilder& SpinSystemBuilder::add_edge(int u, int v, double beta) {
    if (!keys_.insert(edge_key(u, v)).second) return *this;
    edges_.push_back({u, v, beta});
    return *this;
}

bool SpinSystemBuilder::has_edge(int u, int v) const {
    return keys_.count(edge_key(u, v)) > 0;
}

SpinSystemBuilder& SpinSystemBuilder::add_field(int v, int spin, double h) {
    if (h != 0.0) field_.push_back({v, spin, h});
    return *this;
}

SpinSystemBuilder& SpinSystemBuilder::set_bipartition(Bipartition sides) {
    bipartition_ = std::move(sides);
    return *this;
}

SpinSystem SpinSystemBuilder::build() const {
    return SpinSystem(q_, n_, edges_, field_, bipartition_);
}

void validate_configuration(const SpinSystem& model, std::span<const int> sigma) {
    if (static_cast<int>(sigma.size()) != model.n())
        throw InvalidConfiguration("configuration has length " + std::to_string(sigma.size()) +
                                   " but the model has " + std::to_string(model.n()) + " vertices");
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] < 0 || sigma[i] >= model.q())
            throw InvalidConfiguration("spin " + std::to_string(sigma[i]) + " at vertex " +
                                       std::to_string(i) + " is outside [0," +
                                       std::to_string(model.q()) + ")");
}

double log_weight(const SpinSystem& model, std::span<const int> sigma) {
    validate_configuration(model, sigma);
    double w = 0.0;
    for (const auto& e : model.edges())
        if (sigma[e.u] == sigma[e.v]) w += e.beta;
    if (model.has_field())
        for (int v = 0; v < model.n(); ++v) w += model.field(v, sigma[v]);
    return w;
}

std::string to_string(FieldClass c) {
    switch (c) {
        case FieldClass::Zero: return "zero";
        case FieldClass::Consistent: return "consistent";
        case FieldClass::VertexMonochromatic: return "h-vertex-monochromatic";
        case FieldClass::Unrestricted: return "unrestricted";
    }
    return "unrestricted";
}

std::string to_string(Sign s) {
    switch (s) {
        case Sign::Ferromagnetic: return "ferromagnetic";
        case Sign::Antiferromagnetic: return "antiferromagnetic";
        case Sign::Mixed: return "mixed";
    }
    return "mixed";
}

FieldClass classify_field(const SpinSystem& model) {
    if (!model.has_field()) return FieldClass::Zero;
    bool consistent = model.q() == 2;
    bool monochromatic = true;
    for (int v = 0; v < model.n(); ++v) {
        auto row = model.field_row(v);
        int nonzero = 0;
        for (double h : row) nonzero += h != 0.0;
        if (nonzero > 1) monochromatic = false;
        if (consistent && !(row[0] >= 0.0 && row[1] == 0.0)) consistent = false;
    }
    if (consistent) return FieldClass::Consistent;
    if (monochromatic) return FieldClass::VertexMonochromatic;
    return FieldClass::Unrestricted;
}

Sign classify_sign(const SpinSystem& model) {
    const auto& edges = model.edges();
    if (!edges.empty() && std::all_of(edges.begin(), edges.end(), [](const Edge& e) { return e.beta > 0; }))
        return Sign::Ferromagnetic;
    if (!edges.empty() && std::all_of(edges.begin(), edges.end(), [](const Edge& e) { return e.beta < 0; }))
        return Sign::Antiferromagnetic;
    return Sign::Mixed;
}

bool is_bipartite(const SpinSystem& model) {
    std::vector<int> color(model.n(), -1);
    for (int s = 0; s < model.n(); ++s) {
        if (color[s] != -1) continue;
        color[s] = 0;
        std::queue<int> frontier;
        frontier.push(s);
        while (!frontier.empty()) {
            int v = frontier.front();
            frontier.pop();
            for (const auto& nb : model.neighbors(v)) {
                if (color[nb.vertex] == -1) {
                    color[nb.vertex] = 1 - color[v];
                    frontier.push(nb.vertex);
                } else if (color[nb.vertex] == color[v]) {
                    return false;
                }
            }
        }
    }
    return true;
}

void FamilyDescriptor::validate() const {
    if (!(beta_max >= 0.0)) throw InvalidModel("family beta_max must be nonnegative");
    if (!(h_max >= 0.0)) throw InvalidModel("family h_max must be nonnegative");
    if (uniform_beta && std::fabs(*uniform_beta) > beta_max)
        throw InvalidModel("family uniform_beta exceeds beta_max");
}

namespace {

int field_rank(FieldClass c) {
    switch (c) {
        case FieldClass::Zero: return 0;
        case FieldClass::Consistent: return 1;
        case FieldClass::VertexMonochromatic: return 2;
        case FieldClass::Unrestricted: return 3;
    }
    return 3;
}

}  // namespace

MembershipReport validate_membership(const SpinSystem& model, const FamilyDescriptor& family) {
    MembershipReport report;
    auto fail = [&](std::string msg) {
        report.pass = false;
        report.violations.push_back(std::move(msg));
    };

    if (model.n() > family.n_max)
        fail("vertex count " + std::to_string(model.n()) + " exceeds n_max " + std::to_string(family.n_max));
    if (int d = model.max_degree(); d > family.d_max)
        fail("max degree " + std::to_string(d) + " exceeds d_max " + std::to_string(family.d_max));

    for (const auto& e : model.edges()) {
        if (std::fabs(e.beta) > family.beta_max) {
            fail("coupling on " + describe_edge(e.u, e.v) + " exceeds beta_max");
            break;
        }
    }
    if (family.uniform_beta) {
        for (const auto& e : model.edges()) {
            if (e.beta != *family.uniform_beta) {
                fail("coupling on " + describe_edge(e.u, e.v) + " differs from the uniform value");
                break;
            }
        }
    }
    if (family.sign == Sign::Ferromagnetic) {
        for (const auto& e : model.edges())
            if (!(e.beta > 0)) {
                fail("sign: edge " + describe_edge(e.u, e.v) + " is not ferromagnetic");
                break;
            }
    } else if (family.sign == Sign::Antiferromagnetic) {
        for (const auto& e : model.edges())
            if (!(e.beta < 0)) {
                fail("sign: edge " + describe_edge(e.u, e.v) + " is not antiferromagnetic");
                break;
            }
    }

    for (int v = 0; v < model.n(); ++v) {
        bool over = false;
        for (double h : model.field_row(v)) over |= std::fabs(h) > family.h_max;
        if (over) {
            fail("field at vertex " + std::to_string(v) + " exceeds h_max");
            break;
        }
    }
    FieldClass fc = classify_field(model);
    if (field_rank(fc) > field_rank(family.field_class))
        fail("field class " + to_string(fc) + " is outside " + to_string(family.field_class));

    if (family.bipartite_required && !is_bipartite(model)) fail("graph is not bipartite");
    return report;
}

SpinSystem disjoint_union(const SpinSystem& a, const SpinSystem& b) {
    if (a.q() != b.q()) throw ShapeMismatch("disjoint union needs equal q");
    std::vector<Edge> edges = a.edges();
    for (const auto& e : b.edges()) edges.push_back({e.u + a.n(), e.v + a.n(), e.beta});
    std::vector<FieldEntry> field = a.field_entries();
    for (const auto& f : b.field_entries()) field.push_back({f.vertex + a.n(), f.spin, f.h});
    std::optional<Bipartition> sides;
    if (a.bipartition() && b.bipartition()) {
        sides = *a.bipartition();
        sides->insert(sides->end(), b.bipartition()->begin(), b.bipartition()->end());
    }
    return SpinSystem(a.q(), a.n() + b.n(), std::move(edges), std::move(field), std::move(sides));
}

SpinSystem disjoint_union(const SpinSystem& model, int copies) {
    if (copies < 1) throw InvalidModel("disjoint union needs at least one copy");
    std::vector<Edge> edges;
    std::vector<FieldEntry> field;
    auto base_field = model.field_entries();
    std::optional<Bipartition> sides;
    if (model.bipartition()) sides.emplace();
    for (int c = 0; c < copies; ++c) {
        int off = c * model.n();
        for (const auto& e : model.edges()) edges.push_back({e.u + off, e.v + off, e.beta});
        for (const auto& f : base_field) field.push_back({f.vertex + off, f.spin, f.h});
        if (sides) sides->insert(sides->end(), model.bipartition()->begin(), model.bipartition()->end());
    }
    return SpinSystem(model.q(), model.n() * copies, std::move(edges), std::move(field), std::move(sides));
}

}  // namespace spinlab
