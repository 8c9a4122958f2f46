#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "spinlab/spin_system.hpp"

// Reference computations written independently of the library: plain
// recursion over configurations, weights summed edge by edge, and a two-pass
// max-shifted long double accumulation.
namespace naive {

using Config = std::vector<int>;

inline double weight(const spinlab::SpinSystem& m, const Config& s) {
    long double w = 0;
    for (const auto& e : m.edges())
        if (s[e.u] == s[e.v]) w += e.beta;
    for (int v = 0; v < m.n(); ++v) w += m.field(v, s[v]);
    return static_cast<double>(w);
}

inline void for_each(int q, int n, const std::function<void(const Config&)>& fn) {
    Config s(n, 0);
    std::function<void(int)> rec = [&](int v) {
        if (v == n) {
            fn(s);
            return;
        }
        for (int c = 0; c < q; ++c) {
            s[v] = c;
            rec(v + 1);
        }
    };
    rec(0);
}

inline double log_Z(const spinlab::SpinSystem& m, const std::function<bool(const Config&)>& keep = nullptr) {
    double mx = -INFINITY;
    for_each(m.q(), m.n(), [&](const Config& s) {
        if (!keep || keep(s)) mx = std::max(mx, weight(m, s));
    });
    if (std::isinf(mx)) return -INFINITY;
    long double acc = 0;
    for_each(m.q(), m.n(), [&](const Config& s) {
        if (!keep || keep(s)) acc += std::exp(static_cast<long double>(weight(m, s) - mx));
    });
    return mx + static_cast<double>(std::log(acc));
}

inline double tv(const spinlab::SpinSystem& a, const spinlab::SpinSystem& b) {
    double la = log_Z(a), lb = log_Z(b);
    long double acc = 0;
    for_each(a.q(), a.n(), [&](const Config& s) {
        acc += std::fabs(std::exp(static_cast<long double>(weight(a, s) - la)) -
                         std::exp(static_cast<long double>(weight(b, s) - lb)));
    });
    return static_cast<double>(acc / 2);
}

// Random model with mixed couplings in [-bmax, bmax] and fields in [-hmax, hmax].
inline spinlab::SpinSystem random_model(std::mt19937_64& gen, int q, int n, double p, double bmax, double hmax) {
    std::uniform_real_distribution<double> coupling(-bmax, bmax);
    std::uniform_real_distribution<double> field(-hmax, hmax);
    std::bernoulli_distribution edge(p);
    std::vector<spinlab::Edge> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (edge(gen)) edges.push_back({u, v, coupling(gen)});
    std::vector<spinlab::FieldEntry> f;
    for (int v = 0; v < n; ++v)
        for (int c = 0; c < q; ++c) f.push_back({v, c, field(gen)});
    return spinlab::SpinSystem(q, n, edges, f);
}

inline double rel_err(double a, double b) {
    if (a == b) return 0.0;
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace naive
