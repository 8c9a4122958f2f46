#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace spinlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp: running maximum shift plus Neumaier-compensated
// summation of the shifted exponentials.
class LogSumExp {
public:
    void add(double x) {
        if (x == kNegInf) return;
        if (x > shift_) {
            double scale = std::exp(shift_ - x);
            sum_ *= scale;
            comp_ *= scale;
            shift_ = x;
        }
        accumulate(std::exp(x - shift_));
    }

    void merge(const LogSumExp& other) {
        if (other.shift_ == kNegInf) return;
        if (other.shift_ > shift_) {
            double scale = std::exp(shift_ - other.shift_);
            sum_ *= scale;
            comp_ *= scale;
            shift_ = other.shift_;
        }
        double scale = std::exp(other.shift_ - shift_);
        accumulate(other.sum_ * scale);
        accumulate(other.comp_ * scale);
    }

    double value() const {
        if (shift_ == kNegInf) return kNegInf;
        return shift_ + std::log(sum_ + comp_);
    }

    bool empty() const { return shift_ == kNegInf; }

private:
    void accumulate(double v) {
        double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }

    double shift_ = kNegInf;
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
    LogSumExp acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// Neumaier-compensated plain summation.
class KahanSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    void merge(const KahanSum& o) {
        add(o.sum_);
        add(o.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace spinlab
