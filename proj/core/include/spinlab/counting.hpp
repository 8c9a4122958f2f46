#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "spinlab/decision.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/hub.hpp"
#include "spinlab/potts_reduction.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

inline constexpr double kDeciderConfidence = 5.0 / 8.0;
inline constexpr double kTesterConfidence = 3.0 / 4.0;

struct DecisionQuery {
    double log_Zhat = 0.0;
    double r = 2.0;
    double confidence = kDeciderConfidence;

    void validate() const;
};

enum class Provenance { Tester, GuardBound };
std::string_view to_string(Provenance p);

struct CountingOutcome {
    Decision answer = Decision::AtMostZhatOverR;
    Provenance provenance = Provenance::Tester;
    std::optional<double> tv;  // exact TV when the tester computed it
};

enum class Verdict { Yes, No };

// What a tester sees: the visible model plus optional collapsed views.
struct TestingInstance {
    const SpinSystem* visible = nullptr;
    std::function<CollapsedSpace()> visible_collapsed;
    std::function<CollapsedSpace()> hidden_collapsed;
    // Index of a configuration's class in visible_collapsed().classes.
    std::function<std::size_t(const Configuration&)> class_index;
};

// Midpoint of the two contract regimes: (1/(16L) + (1 - eps)) / 2.
double tester_threshold(double epsilon, int L);

class Tester {
public:
    Tester(double epsilon, int L);
    virtual ~Tester() = default;

    virtual Verdict test(const TestingInstance& inst, std::span<const Configuration> samples) = 0;
    virtual std::string name() const = 0;

    double epsilon() const { return epsilon_; }
    int L() const { return L_; }
    double threshold() const { return tester_threshold(epsilon_, L_); }
    // TV value behind the last verdict (exact or estimated).
    std::optional<double> last_tv() const { return last_tv_; }

protected:
    double epsilon_;
    int L_;
    std::optional<double> last_tv_;
};

// Computes tv_collapsed(visible, hidden) exactly and ignores the samples.
class OracleTvTester : public Tester {
public:
    using Tester::Tester;
    Verdict test(const TestingInstance& inst, std::span<const Configuration> samples) override;
    std::string name() const override { return "oracle-tv"; }
};

// Plug-in estimate of TV between the visible class law and the empirical
// class frequencies of the samples.
class EmpiricalTester : public Tester {
public:
    EmpiricalTester(double epsilon, int L, std::size_t max_classes = std::size_t{1} << 22);
    Verdict test(const TestingInstance& inst, std::span<const Configuration> samples) override;
    std::string name() const override { return "empirical"; }

private:
    std::size_t max_classes_;
};

std::unique_ptr<Tester> oracle_tv_tester(double epsilon, int L);
std::unique_ptr<Tester> empirical_tester(double epsilon, int L);

// Result of a construction step: either the guard already settles the
// decision, or a testing instance with its hidden sampler.
struct BuiltReduction {
    std::optional<Decision> guard_answer;
    TestingInstance testing;
    std::function<Configuration(Rng&)> sample_hidden;
    std::shared_ptr<const void> storage;
};

using ReductionBuilder =
    std::function<BuiltReduction(const SpinSystem& G, const DecisionQuery& query, double epsilon, int L)>;

ReductionBuilder hub_reduction_builder(HubVariant variant, HubBuildOptions options = {});
ReductionBuilder potts_reduction_builder(int m, PottsBuildOptions options = {});

CountingOutcome run_generic_reduction(const SpinSystem& G, const DecisionQuery& query,
                                      const ReductionBuilder& builder, Tester& tester, double epsilon, int L,
                                      Rng& rng);

using Decider = std::function<Decision(double log_Zhat)>;

// Answers from the true log Z; inside the gap (Zhat/r, r Zhat) it reports
// which side of Zhat the value falls on.
Decider exact_comparator(double log_Z, double r);

int boost_repetitions(int n, double r, double c1);
double boost_error_target(int n, double r, double c1);
Decider boosted_decider(Decider base, int n, double r, double c1);

struct BisectionResult {
    double log_Zhat = 0.0;
    int iterations = 0;
    bool degenerate = false;
};

BisectionResult bisection_counter(const Decider& decider, int n, double c1, double r);
double bisection_iteration_bound(int n, double c1, double r);

struct CrudeBounds {
    double log_lower = 0.0;
    double log_upper = 0.0;
    // Name of the specialised bracket that tightened the generic one, if any.
    std::string family = "generic";
};

CrudeBounds crude_bounds(const SpinSystem& model);
// Smallest c1 with e^{-c1 n^2} <= Z <= e^{c1 n^2} under the crude bounds.
double crude_c1(const SpinSystem& model);

struct Amplified {
    SpinSystem model;
    int k = 1;
};

// k is the smallest integer with k >= c log(k n) / rho.
Amplified amplify_copies(const SpinSystem& model, double c, double rho);
int amplification_copies(int n, double c, double rho);
// log of Zhat^{1/k}.
double root_approximation(double log_Zhat_union, int k);

}  // namespace spinlab
