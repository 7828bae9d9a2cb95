#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace rbmkit {

// Overflow-safe logistic function. Computes via exp of a non-positive
// argument only, so it never overflows and stays monotone.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// softplus(x) = log(1 + exp(x)), evaluated as max(x,0) + log1p(exp(-|x|)).
inline double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// Inverse of sigmoid; caller is responsible for p in (0,1).
inline double logit(double p) {
    return std::log(p / (1.0 - p));
}

// Streaming log-sum-exp: O(1) memory so enumeration loops never need to
// materialize all 2^k terms.
class LogSumExp {
public:
    void add(double x) {
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            if (max_ == -std::numeric_limits<double>::infinity()) {
                sum_ = 1.0;
            } else {
                sum_ = sum_ * std::exp(max_ - x) + 1.0;
            }
            max_ = x;
        }
    }

    double value() const {
        if (max_ == -std::numeric_limits<double>::infinity()) {
            return max_;  // empty: log of zero terms
        }
        return max_ + std::log(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

// Sample mean and (n-1)-normalized standard deviation; std is 0 for n < 2.
inline std::pair<double, double> mean_and_stddev(std::span<const double> xs) {
    if (xs.empty()) {
        return {0.0, 0.0};
    }
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace rbmkit
