#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace spinlab {

struct Edge {
    int u;
    int v;
    double beta;
};

struct FieldEntry {
    int vertex;
    int spin;
    double h;
};

struct Neighbor {
    int vertex;
    double beta;
};

// Spins are 0-based: spin i here is spin i+1 in the usual [q] = {1..q}
// notation, so the Ising model uses {0, 1}.
using Configuration = std::vector<int>;

// Side label per vertex: 0 for L, 1 for R.
using Bipartition = std::vector<std::uint8_t>;

class SpinSystem {
public:
    SpinSystem() = default;
    SpinSystem(int q, int n, std::vector<Edge> edges, std::vector<FieldEntry> field = {},
               std::optional<Bipartition> bipartition = std::nullopt);

    int q() const { return q_; }
    int n() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }

    double field(int v, int spin) const { return field_[static_cast<std::size_t>(v) * q_ + spin]; }
    std::span<const double> field_row(int v) const {
        return {field_.data() + static_cast<std::size_t>(v) * q_, static_cast<std::size_t>(q_)};
    }
    bool has_field() const { return has_field_; }
    std::vector<FieldEntry> field_entries() const;

    const std::optional<Bipartition>& bipartition() const { return bipartition_; }

    std::span<const Neighbor> neighbors(int v) const {
        auto b = adj_offset_[v];
        auto e = adj_offset_[v + 1];
        return {adj_.data() + b, e - b};
    }
    int degree(int v) const { return static_cast<int>(adj_offset_[v + 1] - adj_offset_[v]); }
    int max_degree() const;

    // Unordered edge lookup; returns nullopt when {u,v} is not an edge.
    std::optional<double> coupling(int u, int v) const;

private:
    int q_ = 2;
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<double> field_;
    bool has_field_ = false;
    std::optional<Bipartition> bipartition_;
    std::vector<Neighbor> adj_;
    std::vector<std::size_t> adj_offset_{0};
};

// Accumulates edges and fields, merging repeated edges by keeping the first
// coupling seen and summing repeated field entries.
class SpinSystemBuilder {
public:
    SpinSystemBuilder(int q, int n);

    SpinSystemBuilder& add_edge(int u, int v, double beta);
    SpinSystemBuilder& add_field(int v, int spin, double h);
    SpinSystemBuilder& set_bipartition(Bipartition sides);

    bool has_edge(int u, int v) const;
    int n() const { return n_; }
    SpinSystem build() const;

private:
    int q_;
    int n_;
    std::vector<Edge> edges_;
    std::unordered_set<std::uint64_t> keys_;
    std::vector<FieldEntry> field_;
    std::optional<Bipartition> bipartition_;
};

void validate_configuration(const SpinSystem& model, std::span<const int> sigma);

double log_weight(const SpinSystem& model, std::span<const int> sigma);

enum class FieldClass { Zero, Consistent, VertexMonochromatic, Unrestricted };
enum class Sign { Ferromagnetic, Antiferromagnetic, Mixed };

std::string to_string(FieldClass c);
std::string to_string(Sign s);

FieldClass classify_field(const SpinSystem& model);
// Sign of the coupling set: all positive, all negative, or anything else.
Sign classify_sign(const SpinSystem& model);
bool is_bipartite(const SpinSystem& model);

struct FamilyDescriptor {
    int n_max = 1 << 30;
    int d_max = 1 << 30;
    double beta_max = 0.0;
    double h_max = 0.0;
    Sign sign = Sign::Mixed;
    std::optional<double> uniform_beta;
    bool bipartite_required = false;
    FieldClass field_class = FieldClass::Unrestricted;

    void validate() const;
};

struct MembershipReport {
    bool pass = true;
    std::vector<std::string> violations;
};

MembershipReport validate_membership(const SpinSystem& model, const FamilyDescriptor& family);

// Vertex-disjoint union; copies of b are shifted by a.n().
SpinSystem disjoint_union(const SpinSystem& a, const SpinSystem& b);
SpinSystem disjoint_union(const SpinSystem& model, int copies);

}  // namespace spinlab
