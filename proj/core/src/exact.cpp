#include "spinlab/exact.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "spinlab/errors.hpp"
#include "spinlab/logsumexp.hpp"

namespace spinlab {

bool within_budget(int n, int q, const EnumerationBudget& budget) {
    return static_cast<double>(n) * std::log2(static_cast<double>(q)) <= budget.bits + 1e-12;
}

void check_budget(int n, int q, const EnumerationBudget& budget) {
    if (!within_budget(n, q, budget))
        throw BudgetExceeded("enumeration of q^n states with n=" + std::to_string(n) + ", q=" +
                             std::to_string(q) + " exceeds the " + std::to_string(budget.bits) +
                             "-bit budget");
}

namespace {

constexpr std::uint64_t kInnerStates = 1u << 12;

std::uint64_t ipow(std::uint64_t base, int e) {
    std::uint64_t r = 1;
    while (e-- > 0) r *= base;
    return r;
}

double raw_log_weight(const SpinSystem& m, const int* sigma) {
    double w = 0.0;
    for (const auto& e : m.edges())
        if (sigma[e.u] == sigma[e.v]) w += e.beta;
    if (m.has_field())
        for (int v = 0; v < m.n(); ++v) w += m.field(v, sigma[v]);
    return w;
}

double flip_delta(const SpinSystem& m, const int* sigma, int v, int from, int to) {
    double d = m.field(v, to) - m.field(v, from);
    for (const auto& nb : m.neighbors(v)) {
        int s = sigma[nb.vertex];
        if (s == to) d += nb.beta;
        else if (s == from) d -= nb.beta;
    }
    return d;
}

// Visits every configuration in index order. The low vertices form the inner
// block enumerated with incremental weight updates; each block starts from a
// full recomputation, and block results are returned in block order so the
// combined value does not depend on the number of worker threads.
template <class Acc, class Visit>
std::vector<Acc> enumerate_blocks(std::span<const SpinSystem* const> models, Visit visit) {
    const SpinSystem& first = *models.front();
    const int n = first.n();
    const int q = first.q();
    int inner_digits = 0;
    while (inner_digits < n && ipow(q, inner_digits + 1) <= kInnerStates) ++inner_digits;
    const std::uint64_t inner = ipow(q, inner_digits);
    const std::uint64_t blocks = ipow(q, n - inner_digits);
    const std::size_t k = models.size();

    std::vector<Acc> results(blocks);
    std::atomic<std::uint64_t> next{0};

    auto worker = [&]() {
        std::vector<int> sigma(n, 0);
        std::vector<double> logw(k, 0.0);
        for (;;) {
            std::uint64_t b = next.fetch_add(1);
            if (b >= blocks) return;
            std::fill(sigma.begin(), sigma.end(), 0);
            std::uint64_t rest = b;
            for (int v = inner_digits; v < n; ++v) {
                sigma[v] = static_cast<int>(rest % q);
                rest /= q;
            }
            for (std::size_t j = 0; j < k; ++j) logw[j] = raw_log_weight(*models[j], sigma.data());
            Acc acc{};
            for (std::uint64_t i = 0; i < inner; ++i) {
                visit(acc, std::span<const int>(sigma), std::span<const double>(logw));
                if (i + 1 == inner) break;
                int v = 0;
                while (sigma[v] == q - 1) {
                    for (std::size_t j = 0; j < k; ++j) logw[j] += flip_delta(*models[j], sigma.data(), v, q - 1, 0);
                    sigma[v] = 0;
                    ++v;
                }
                for (std::size_t j = 0; j < k; ++j)
                    logw[j] += flip_delta(*models[j], sigma.data(), v, sigma[v], sigma[v] + 1);
                ++sigma[v];
            }
            results[b] = std::move(acc);
        }
    };

    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, blocks));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

double combine(const std::vector<LogSumExp>& parts) {
    LogSumExp total;
    for (const auto& p : parts) total.merge(p);
    return total.value();
}

void require_same_shape(const SpinSystem& a, const SpinSystem& b) {
    if (a.n() != b.n() || a.q() != b.q())
        throw ShapeMismatch("models differ in shape: (n=" + std::to_string(a.n()) + ", q=" +
                            std::to_string(a.q()) + ") vs (n=" + std::to_string(b.n()) + ", q=" +
                            std::to_string(b.q()) + ")");
}

}  // namespace

double partition_log(const SpinSystem& model, const EnumerationBudget& budget) {
    check_budget(model.n(), model.q(), budget);
    const SpinSystem* ms[] = {&model};
    auto parts = enumerate_blocks<LogSumExp>(ms, [](LogSumExp& acc, std::span<const int>, std::span<const double> w) {
        acc.add(w[0]);
    });
    return combine(parts);
}

double restricted_partition_log(const SpinSystem& model, const Predicate& pred, const EnumerationBudget& budget) {
    Predicate preds[] = {pred};
    return restricted_partition_logs(model, preds, budget).front();
}

std::vector<double> restricted_partition_logs(const SpinSystem& model, std::span<const Predicate> preds,
                                              const EnumerationBudget& budget) {
    check_budget(model.n(), model.q(), budget);
    const SpinSystem* ms[] = {&model};
    const std::size_t k = preds.size();
    using Acc = std::vector<LogSumExp>;
    auto parts = enumerate_blocks<Acc>(ms, [&](Acc& acc, std::span<const int> s, std::span<const double> w) {
        if (acc.empty()) acc.resize(k);
        for (std::size_t i = 0; i < k; ++i)
            if (preds[i](s)) acc[i].add(w[0]);
    });
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        LogSumExp total;
        for (const auto& p : parts)
            if (!p.empty()) total.merge(p[i]);
        out[i] = total.value();
    }
    return out;
}

double tv_exact(const SpinSystem& a, const SpinSystem& b, const EnumerationBudget& budget) {
    require_same_shape(a, b);
    check_budget(a.n(), a.q(), budget);
    const SpinSystem* ms[] = {&a, &b};

    struct Pair {
        LogSumExp za, zb;
    };
    auto zparts = enumerate_blocks<Pair>(ms, [](Pair& acc, std::span<const int>, std::span<const double> w) {
        acc.za.add(w[0]);
        acc.zb.add(w[1]);
    });
    LogSumExp za, zb;
    for (const auto& p : zparts) {
        za.merge(p.za);
        zb.merge(p.zb);
    }
    const double lza = za.value();
    const double lzb = zb.value();

    auto dparts = enumerate_blocks<KahanSum>(ms, [&](KahanSum& acc, std::span<const int>, std::span<const double> w) {
        acc.add(std::fabs(std::exp(w[0] - lza) - std::exp(w[1] - lzb)));
    });
    KahanSum total;
    for (const auto& p : dparts) total.merge(p);
    return std::clamp(0.5 * total.value(), 0.0, 1.0);
}

struct ExactDistribution::Cache {
    std::once_flag once;
    std::vector<double> cdf;
};

ExactDistribution::ExactDistribution(SpinSystem model, const EnumerationBudget& budget)
    : model_(std::move(model)), budget_(budget), cache_(std::make_shared<Cache>()) {
    log_Z_ = partition_log(model_, budget_);
    states_ = ipow(model_.q(), model_.n());
}

double ExactDistribution::log_prob(std::span<const int> sigma) const {
    return log_weight(model_, sigma) - log_Z_;
}

Configuration ExactDistribution::state(std::uint64_t index) const {
    if (index >= states_) throw InvalidConfiguration("state index out of range");
    Configuration sigma(model_.n());
    for (int v = 0; v < model_.n(); ++v) {
        sigma[v] = static_cast<int>(index % model_.q());
        index /= model_.q();
    }
    return sigma;
}

std::uint64_t ExactDistribution::index_of(std::span<const int> sigma) const {
    validate_configuration(model_, sigma);
    std::uint64_t idx = 0;
    for (int v = model_.n() - 1; v >= 0; --v) idx = idx * model_.q() + sigma[v];
    return idx;
}

std::vector<double> ExactDistribution::log_probabilities() const {
    const SpinSystem* ms[] = {&model_};
    using Acc = std::vector<double>;
    const double lz = log_Z_;
    auto parts = enumerate_blocks<Acc>(ms, [lz](Acc& acc, std::span<const int>, std::span<const double> w) {
        acc.push_back(w[0] - lz);
    });
    std::vector<double> out;
    out.reserve(states_);
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

void ExactDistribution::write_csv(std::ostream& out) const {
    auto lp = log_probabilities();
    out << "state,log_probability\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < lp.size(); ++i) out << i << ',' << lp[i] << '\n';
}

const std::vector<double>& ExactDistribution::cdf() const {
    std::call_once(cache_->once, [this]() {
        auto lp = log_probabilities();
        auto& c = cache_->cdf;
        c.resize(lp.size());
        KahanSum run;
        for (std::size_t i = 0; i < lp.size(); ++i) {
            run.add(std::exp(lp[i]));
            c[i] = run.value();
        }
    });
    return cache_->cdf;
}

Configuration sample_exact(const ExactDistribution& dist, Rng& rng) {
    const auto& c = dist.cdf();
    double u = rng.uniform() * c.back();
    auto it = std::upper_bound(c.begin(), c.end(), u);
    std::uint64_t idx = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - c.begin(), c.size() - 1));
    return dist.state(idx);
}

double CollapsedSpace::log_Z() const {
    LogSumExp acc;
    for (const auto& c : classes) acc.add(c.log_count + c.log_weight);
    return acc.value();
}

std::vector<double> CollapsedSpace::probabilities() const {
    double lz = log_Z();
    std::vector<double> p;
    p.reserve(classes.size());
    for (const auto& c : classes) p.push_back(std::exp(c.log_count + c.log_weight - lz));
    return p;
}

double tv_collapsed(const CollapsedSpace& a, const CollapsedSpace& b) {
    if (a.classes.size() != b.classes.size())
        throw ClassMismatch("collapsed spaces have " + std::to_string(a.classes.size()) + " and " +
                            std::to_string(b.classes.size()) + " classes");
    for (std::size_t i = 0; i < a.classes.size(); ++i) {
        const auto& ca = a.classes[i];
        const auto& cb = b.classes[i];
        if (ca.key != cb.key) throw ClassMismatch("class " + std::to_string(i) + " has different descriptors");
        if (std::fabs(ca.log_count - cb.log_count) > 1e-9 * std::max(1.0, std::fabs(ca.log_count)))
            throw ClassMismatch("class " + std::to_string(i) + " has different sizes");
    }
    double lza = a.log_Z();
    double lzb = b.log_Z();
    KahanSum total;
    for (std::size_t i = 0; i < a.classes.size(); ++i) {
        const auto& ca = a.classes[i];
        const auto& cb = b.classes[i];
        total.add(std::fabs(std::exp(ca.log_count + ca.log_weight - lza) - std::exp(cb.log_count + cb.log_weight - lzb)));
    }
    return std::clamp(0.5 * total.value(), 0.0, 1.0);
}

}  // namespace spinlab
