#include "spinlab/graphs.hpp"

#include <algorithm>
#include <numeric>

#include "spinlab/errors.hpp"

namespace spinlab {

SpinSystem edgeless(int q, int n) { return SpinSystem(q, n, {}); }

SpinSystem complete_graph(int q, int n, double beta) {
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.push_back({u, v, beta});
    return SpinSystem(q, n, std::move(edges));
}

SpinSystem cycle_graph(int q, int n, double beta) {
    if (n < 3) throw InvalidModel("a cycle needs at least 3 vertices");
    std::vector<Edge> edges;
    for (int v = 0; v < n; ++v) edges.push_back({v, (v + 1) % n, beta});
    return SpinSystem(q, n, std::move(edges));
}

SpinSystem random_regular_graph(int q, int n, int d, double beta, Rng& rng) {
    if (d < 0 || d >= n || (static_cast<long>(n) * d) % 2 != 0)
        throw InvalidModel("no simple " + std::to_string(d) + "-regular graph on " + std::to_string(n) +
                           " vertices");
    std::vector<int> points(static_cast<std::size_t>(n) * d);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        for (std::size_t i = 0; i < points.size(); ++i) points[i] = static_cast<int>(i) / d;
        rng.shuffle(std::span<int>(points));
        SpinSystemBuilder builder(q, n);
        bool ok = true;
        for (std::size_t i = 0; i < points.size() && ok; i += 2) {
            int u = points[i];
            int v = points[i + 1];
            if (u == v || builder.has_edge(u, v)) ok = false;
            else builder.add_edge(u, v, beta);
        }
        if (ok) return builder.build();
    }
    throw ConvergenceFailure("pairing model failed to produce a simple regular graph");
}

SpinSystem random_graph(int q, int n, double p, double beta_lo, double beta_hi, Rng& rng) {
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) edges.push_back({u, v, beta_lo + (beta_hi - beta_lo) * rng.uniform()});
    return SpinSystem(q, n, std::move(edges));
}

}  // namespace spinlab
