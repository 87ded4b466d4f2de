#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gap {

using Count = std::uint32_t;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log|Gamma(x)|. Reentrant: glibc's lgamma writes the global signgam.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double log_factorial(std::uint64_t n) {
    return log_gamma(static_cast<double>(n) + 1.0);
}

/// c * log(p) with the convention 0 * log(0) = 0.
inline double xlogy(double c, double p) {
    if (c == 0.0) {
        return 0.0;
    }
    return p == 0.0 ? -kInf : c * std::log(p);
}

/**
 * Streaming log-sum-exp accumulator.
 *
 * Keeps a running maximum and a scaled sum so arbitrarily many log-domain
 * terms can be folded in without overflow. Terms equal to -inf are ignored.
 */
class LogSumExp {
  public:
    void add(double log_term) {
        if (log_term == -kInf) {
            return;
        }
        if (log_term <= max_) {
            sum_ += std::exp(log_term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }

    void merge(const LogSumExp& other) {
        if (other.max_ == -kInf) {
            return;
        }
        if (other.max_ <= max_) {
            sum_ += other.sum_ * std::exp(other.max_ - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
            max_ = other.max_;
        }
    }

    /// log of the accumulated sum; -inf when nothing was added.
    double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

  private:
    double max_ = -kInf;
    double sum_ = 0.0;
};

/// Exact binomial coefficient C(n, k).
inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    BigInt r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

} // namespace gap
