#include "spinlab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "spinlab/errors.hpp"
#include "spinlab/logsumexp.hpp"

namespace spinlab {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

double phi(std::span<const double> alpha, double beta) {
    double total = 0.0;
    for (double a : alpha) {
        if (!(a >= -1e-15)) throw InvalidModel("phi: simplex coordinates must be nonnegative");
        total += a;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw InvalidModel("phi: coordinates must sum to 1");
    double h = 0.0;
    double sq = 0.0;
    for (double a : alpha) {
        a = std::max(a, 0.0);
        h -= xlogx(a);
        sq += a * a;
    }
    return h + 0.5 * beta * sq;
}

double psi1(double x, double beta, int q) {
    double y = (1.0 - x) / (q - 1);
    double h = -xlogx(x) - (q - 1) * xlogx(y);
    return h + 0.5 * beta * (x * x + (q - 1) * y * y);
}

double psi1_derivative(double x, double beta, int q) {
    double y = (1.0 - x) / (q - 1);
    return std::log(y / x) + beta * (x - y);
}

double majority_maximizer(double beta, int q) {
    // Scan from the right end, where the derivative tends to -inf, for the
    // rightmost + to - crossing, then bisect it.
    const double lo_end = 1.0 / q;
    const int grid = 4000;
    double prev_x = 1.0 - 1e-14;
    double prev_d = psi1_derivative(prev_x, beta, q);
    for (int i = grid - 1; i >= 1; --i) {
        double x = lo_end + (1.0 - lo_end) * i / grid;
        double d = psi1_derivative(x, beta, q);
        if (d > 0.0 && prev_d <= 0.0) {
            double a = x, b = prev_x;
            for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
                double mid = 0.5 * (a + b);
                if (psi1_derivative(mid, beta, q) > 0.0) a = mid;
                else b = mid;
            }
            return 0.5 * (a + b);
        }
        prev_x = x;
        prev_d = d;
    }
    return -1.0;
}

CriticalPoint find_critical_Bo(int q, double tol) {
    if (q < 3) throw InvalidModel("the coexistence point needs q >= 3");
    if (!(tol > 0.0)) throw InvalidModel("tolerance must be positive");

    auto height_gap = [q](double B, double* where) {
        double x = majority_maximizer(B, q);
        if (where) *where = x;
        if (x < 0.0) return -std::numeric_limits<double>::infinity();
        return psi1(x, B, q) - psi1(1.0 / q, B, q);
    };

    double lo = 2.0;
    double hi = static_cast<double>(q);
    if (!(height_gap(lo, nullptr) < 0.0) || !(height_gap(hi, nullptr) > 0.0))
        throw ConvergenceFailure("coexistence bracket [2, q] does not straddle the equal-height point");

    int it = 0;
    for (; it < 400 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (height_gap(mid, nullptr) < 0.0) lo = mid;
        else hi = mid;
    }
    if (it == 400) throw ConvergenceFailure("coexistence bisection hit its iteration cap");

    CriticalPoint cp;
    cp.q = q;
    cp.Bo = 0.5 * (lo + hi);
    cp.alpha_hat = majority_maximizer(cp.Bo, q);
    if (cp.alpha_hat < 0.0) cp.alpha_hat = majority_maximizer(hi, q);
    cp.phi_at_u = psi1(1.0 / q, cp.Bo, q);
    cp.phi_at_majority = psi1(cp.alpha_hat, cp.Bo, q);
    if (std::fabs(cp.phi_at_u - cp.phi_at_majority) > tol)
        throw ConvergenceFailure("coexistence point misses the equal-height condition by " +
                                 std::to_string(std::fabs(cp.phi_at_u - cp.phi_at_majority)));
    return cp;
}

PhaseWindows::PhaseWindows(int m_, int q_, double alpha_hat_, const MeanFieldOptions& options)
    : m(m_), q(q_), alpha_hat(alpha_hat_), width(std::pow(static_cast<double>(m_), options.window_exponent)),
      overlap(options.overlap) {}

PhaseWindows::Membership PhaseWindows::classify(std::span<const int> s) const {
    Membership out;
    const double center_u = static_cast<double>(m) / q;
    const double major = alpha_hat * m;
    const double minor = (1.0 - alpha_hat) * m / (q - 1);

    double dD = 0.0;
    for (int v : s) dD = std::max(dD, std::fabs(v - center_u));
    out.in_D = dD <= width;

    double best_dM = std::numeric_limits<double>::infinity();
    for (int j = 0; j < q; ++j) {
        double dM = std::fabs(s[j] - major);
        for (int i = 0; i < q; ++i)
            if (i != j) dM = std::max(dM, std::fabs(s[i] - minor));
        if (dM <= width) {
            ++out.m_windows;
            if (dM < best_dM) {
                best_dM = dM;
                out.branch = j;
            }
        }
    }
    out.in_M = out.m_windows > 0;

    if (out.in_M && out.in_D) {
        out.phase = best_dM < dD ? Phase::Majority : Phase::Disordered;
    } else if (out.in_M) {
        out.phase = Phase::Majority;
    } else if (out.in_D) {
        out.phase = Phase::Disordered;
    }
    if (out.phase != Phase::Majority) out.branch = -1;
    return out;
}

double PhaseSplit::log_Z() const {
    double parts[] = {log_ZM, log_ZD, log_ZS};
    return log_sum_exp(parts);
}

std::uint64_t signature_count(int m, int q) {
    // C(m+q-1, q-1) with overflow saturation.
    long double c = 1.0L;
    for (int i = 1; i <= q - 1; ++i) c = c * (m + i) / i;
    if (c > 1.8e19L) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(c)));
}

void for_each_signature(int m, int q, const std::function<void(std::span<const int>)>& fn) {
    if (m < 0 || q < 1) throw InvalidModel("signature enumeration needs m >= 0 and q >= 1");
    std::vector<int> s(q, 0);
    // Lexicographic enumeration of compositions with the last part implied.
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == q - 1) {
            s[pos] = remaining;
            fn(std::span<const int>(s));
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            s[pos] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    rec(rec, 0, m);
}

double log_multinomial(int m, std::span<const int> s, MultinomialMode mode) {
    if (mode == MultinomialMode::LogGamma) {
        double r = std::lgamma(m + 1.0);
        for (int v : s) r -= std::lgamma(v + 1.0);
        return r;
    }
    using boost::multiprecision::cpp_int;
    using Float = boost::multiprecision::cpp_bin_float_50;
    auto factorial = [](int k) {
        cpp_int f = 1;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    cpp_int num = factorial(m);
    for (int v : s) num /= factorial(v);
    Float value(num);
    return static_cast<double>(boost::multiprecision::log(value));
}

double signature_log_weight(int m, std::span<const int> s, double beta_H, MultinomialMode mode) {
    double mono = 0.0;
    for (int v : s) mono += 0.5 * static_cast<double>(v) * (v - 1);
    return log_multinomial(m, s, mode) + beta_H * mono;
}

PhaseSplit phase_split(int m, int q, double beta_H, double alpha_hat, const MeanFieldOptions& options) {
    if (m < 1) throw InvalidModel("phase_split needs m >= 1");
    if (q < 2) throw InvalidModel("phase_split needs q >= 2");
    std::uint64_t count = signature_count(m, q);
    if (count > options.max_signatures)
        throw BudgetExceeded("phase_split: " + std::to_string(count) + " signatures exceed the budget of " +
                             std::to_string(options.max_signatures));

    PhaseWindows windows(m, q, alpha_hat, options);
    LogSumExp zm, zd, zs, zm0, mono_m, mono_d;
    std::uint64_t overlapping = 0;

    for_each_signature(m, q, [&](std::span<const int> s) {
        double mono = 0.0;
        for (int v : s) mono += 0.5 * static_cast<double>(v) * (v - 1);
        double lw = log_multinomial(m, s, options.multinomial) + beta_H * mono;
        auto mem = windows.classify(s);
        if ((mem.in_M && mem.in_D) || mem.m_windows > 1) ++overlapping;
        switch (mem.phase) {
            case Phase::Majority:
                zm.add(lw);
                if (mono > 0) mono_m.add(lw + std::log(mono));
                if (mem.branch == 0) zm0.add(lw);
                break;
            case Phase::Disordered:
                zd.add(lw);
                if (mono > 0) mono_d.add(lw + std::log(mono));
                break;
            case Phase::Residual:
                zs.add(lw);
                break;
        }
    });

    if (overlapping > 0 && options.overlap == OverlapPolicy::Reject)
        throw InvalidModel("phase windows overlap at m=" + std::to_string(m) + ", q=" + std::to_string(q) + ": " +
                           std::to_string(overlapping) + " signatures lie in more than one window");

    PhaseSplit out;
    out.m = m;
    out.q = q;
    out.beta_H = beta_H;
    out.alpha_hat = alpha_hat;
    out.window_exponent = options.window_exponent;
    out.width = windows.width;
    out.log_ZM = zm.value();
    out.log_ZD = zd.value();
    out.log_ZS = zs.value();
    out.log_ZM_branch0 = zm0.value();
    out.mono_edges_M = zm.empty() ? 0.0 : std::exp(mono_m.value() - out.log_ZM);
    out.mono_edges_D = zd.empty() ? 0.0 : std::exp(mono_d.value() - out.log_ZD);
    out.signature_count = count;
    out.overlapping_signatures = overlapping;
    return out;
}

double log_ratio_g(int m, int q, double beta_H, double alpha_hat, const MeanFieldOptions& options) {
    auto split = phase_split(m, q, beta_H, alpha_hat, options);
    return split.log_ZM - split.log_ZD;
}

BetaSolution solve_beta_H(int m, const CriticalPoint& cp, double log_R, double delta,
                          const MeanFieldOptions& options) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidModel("solve_beta_H: delta must lie in (0,1)");
    if (!std::isfinite(log_R)) throw InvalidModel("solve_beta_H: target ratio must be positive and finite");
    const int q = cp.q;
    const double hi_target = log_R;
    const double lo_target = log_R + std::log1p(-delta);
    const double center = cp.Bo / m;
    const double step = std::pow(static_cast<double>(m), -1.5);
    auto g = [&](double b) { return log_ratio_g(m, q, b, cp.alpha_hat, options); };

    double lo = 0.0, hi = 0.0, glo = 0.0, ghi = 0.0, c_prime = 1.0;
    bool bracketed = false;
    for (; c_prime <= 64.0; c_prime *= 2.0) {
        lo = std::max(0.0, center - c_prime * step);
        hi = center + c_prime * step;
        glo = g(lo);
        ghi = g(hi);
        if (glo <= hi_target && ghi >= lo_target) {
            bracketed = true;
            break;
        }
    }
    if (!bracketed)
        throw TargetUnreachable("solve_beta_H: log target " + std::to_string(log_R) + " outside the reachable range [" +
                                    std::to_string(glo) + ", " + std::to_string(ghi) + "] at c'=64",
                                glo, ghi);

    BetaSolution sol;
    sol.c_prime = c_prime;
    auto accept = [&](double b, double gb) {
        sol.beta_H = b;
        sol.log_ratio = gb;
        return sol;
    };
    if (glo >= lo_target) return accept(lo, glo);
    if (ghi <= hi_target) return accept(hi, ghi);
    for (int it = 1; it <= 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double gm = g(mid);
        sol.iterations = it;
        if (gm > hi_target) hi = mid;
        else if (gm < lo_target) lo = mid;
        else return accept(mid, gm);
    }
    throw ConvergenceFailure("solve_beta_H: bisection did not land in the target window");
}

MetastabilityReport metastability_report(int m, int q, double alpha_hat, double beta_H,
                                         const MeanFieldOptions& options) {
    MetastabilityReport r;
    r.split = phase_split(m, q, beta_H, alpha_hat, options);
    const double floor = std::min(r.split.log_ZM, r.split.log_ZD);
    r.gap = r.split.log_ZS == kNegInf ? kNegInf : r.split.log_ZS - floor;
    r.sqrt_m = std::sqrt(static_cast<double>(m));
    return r;
}

}  // namespace spinlab
