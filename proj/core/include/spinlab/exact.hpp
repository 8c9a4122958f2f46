#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

struct EnumerationBudget {
    static constexpr int kDefaultBits = 26;
    int bits = kDefaultBits;
};

// Throws BudgetExceeded when q^n configurations exceed 2^bits.
void check_budget(int n, int q, const EnumerationBudget& budget);
bool within_budget(int n, int q, const EnumerationBudget& budget);

using Predicate = std::function<bool(std::span<const int>)>;

double partition_log(const SpinSystem& model, const EnumerationBudget& budget = {});
double restricted_partition_log(const SpinSystem& model, const Predicate& pred,
                                const EnumerationBudget& budget = {});
// One enumeration pass evaluating several restricted sums.
std::vector<double> restricted_partition_logs(const SpinSystem& model, std::span<const Predicate> preds,
                                              const EnumerationBudget& budget = {});
double tv_exact(const SpinSystem& a, const SpinSystem& b, const EnumerationBudget& budget = {});

// Gibbs distribution over all q^n configurations. States are indexed with
// vertex 0 as the least significant base-q digit.
class ExactDistribution {
public:
    explicit ExactDistribution(SpinSystem model, const EnumerationBudget& budget = {});

    const SpinSystem& model() const { return model_; }
    double log_Z() const { return log_Z_; }
    std::uint64_t state_count() const { return states_; }

    double log_prob(std::span<const int> sigma) const;
    Configuration state(std::uint64_t index) const;
    std::uint64_t index_of(std::span<const int> sigma) const;

    std::vector<double> log_probabilities() const;
    void write_csv(std::ostream& out) const;

    // Cumulative probabilities in index order, built on first use and shared
    // between copies.
    const std::vector<double>& cdf() const;

private:
    struct Cache;
    SpinSystem model_;
    EnumerationBudget budget_;
    double log_Z_ = 0.0;
    std::uint64_t states_ = 0;
    std::shared_ptr<Cache> cache_;
};

Configuration sample_exact(const ExactDistribution& dist, Rng& rng);

struct CollapsedClass {
    std::vector<int> key;
    double log_count = 0.0;
    // Log of the total weight of one member configuration, or of the whole
    // class once log_count is zero and auxiliary vertices are integrated out.
    double log_weight = 0.0;
};

// A partition of configuration space into classes. Two spaces compared with
// tv_collapsed must share keys and counts, and both models must induce the
// same conditional law inside every class.
struct CollapsedSpace {
    std::vector<CollapsedClass> classes;

    double log_Z() const;
    // Normalized class probabilities in class order.
    std::vector<double> probabilities() const;
};

double tv_collapsed(const CollapsedSpace& a, const CollapsedSpace& b);

// Selects the visible or the hidden model of a testing instance.
enum class Which { Visible, Hidden };

}  // namespace spinlab
