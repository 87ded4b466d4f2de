#pragma once

// Log-pmfs and samplers for the Gamma / Poisson / multinomial /
// negative binomial / negative multinomial family.

#include "gap/error.hpp"
#include "gap/rng.hpp"
#include "gap/special.hpp"

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace gap {

/// Negative binomial NB(alpha, p): pmf Gamma(a+c)/(Gamma(a) c!) (1-p)^a p^c.
struct NegBinParams {
    double alpha = 1.0;
    double p = 0.0;

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw ParameterError("NB: alpha must be positive and finite, got " +
                                 std::to_string(alpha));
        }
        if (!(p >= 0.0 && p < 1.0)) {
            throw ParameterError("NB: p must lie in [0, 1), got " + std::to_string(p));
        }
    }

    double mean() const { return alpha * p / (1.0 - p); }
    double variance() const { return alpha * p / ((1.0 - p) * (1.0 - p)); }
};

/// Negative multinomial NM(alpha, p_1..p_F) with p0 = 1 - sum(p).
struct NegMultParams {
    double alpha = 1.0;
    std::vector<double> p;
    double p0 = 1.0;

    /// Builds the parameter set and fills p0 from the event probabilities.
    static NegMultParams from_probs(double alpha, std::vector<double> p) {
        NegMultParams r;
        r.alpha = alpha;
        // Left fold so that F = 1 gives p0 = 1 - p_1 exactly.
        double total = 0.0;
        for (double pf : p) {
            total += pf;
        }
        r.p0 = 1.0 - total;
        r.p = std::move(p);
        r.validate();
        return r;
    }

    /// NM law of the Gamma-Poisson mixture with rates w_f * lambda,
    /// lambda ~ Gamma(alpha, beta): p_f = w_f / (sum(w) + beta).
    static NegMultParams from_mixture(double alpha, double beta, std::span<const double> w) {
        double total = 0.0;
        for (double wf : w) {
            total += wf;
        }
        std::vector<double> p(w.size());
        for (std::size_t f = 0; f < w.size(); ++f) {
            p[f] = w[f] / (total + beta);
        }
        NegMultParams r;
        r.alpha = alpha;
        r.p = std::move(p);
        r.p0 = beta / (total + beta);
        r.validate();
        return r;
    }

    std::size_t size() const { return p.size(); }

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw ParameterError("NM: alpha must be positive and finite");
        }
        double total = 0.0;
        for (double pf : p) {
            if (!(pf >= 0.0 && pf <= 1.0)) {
                throw ParameterError("NM: event probabilities must lie in [0, 1]");
            }
            total += pf;
        }
        if (!(total < 1.0)) {
            throw ParameterError("NM: event probabilities must sum to less than 1");
        }
        if (!(p0 > 0.0) || std::abs(p0 - (1.0 - total)) > 1e-12) {
            throw ParameterError("NM: p0 must equal 1 - sum(p)");
        }
    }
};

namespace detail {

// Shared log-domain kernel of the NB and NM pmfs. Accumulation order is
// fixed so the F = 1 NM pmf reproduces the NB pmf bit for bit.
inline double nm_log_pmf_kernel(double alpha, double p0, std::span<const double> p,
                                std::span<const Count> c) {
    double total = 0.0;
    for (Count cf : c) {
        total += static_cast<double>(cf);
    }
    double r = log_gamma(alpha + total) - log_gamma(alpha);
    for (Count cf : c) {
        r -= log_factorial(cf);
    }
    r += alpha * std::log(p0);
    for (std::size_t f = 0; f < c.size(); ++f) {
        r += xlogy(static_cast<double>(c[f]), p[f]);
    }
    return r;
}

} // namespace detail

inline double nb_log_pmf(const NegBinParams& params, std::uint64_t c) {
    params.validate();
    const double p[1] = {params.p};
    const Count cc[1] = {static_cast<Count>(c)};
    return detail::nm_log_pmf_kernel(params.alpha, 1.0 - params.p, p, cc);
}

inline double nm_log_pmf(const NegMultParams& params, std::span<const Count> c) {
    if (c.size() != params.p.size()) {
        throw ShapeError("NM: count vector has length " + std::to_string(c.size()) +
                         ", expected " + std::to_string(params.p.size()));
    }
    return detail::nm_log_pmf_kernel(params.alpha, params.p0, params.p, c);
}

// ---- primitive variates -------------------------------------------------

/// Gamma(shape, rate); the result is kept strictly positive.
inline double gamma_sample(double shape, double rate, Rng& rng) {
    boost::random::gamma_distribution<double> dist(shape, 1.0 / rate);
    const double x = dist(rng);
    return std::max(x, std::numeric_limits<double>::min());
}

/// Poisson(mean); inversion below mean 10, transformed rejection above.
inline Count poisson_sample(double mean, Rng& rng) {
    if (mean <= 0.0) {
        return 0;
    }
    boost::random::poisson_distribution<std::int64_t, double> dist(mean);
    return static_cast<Count>(dist(rng));
}

inline Count binomial_sample(Count n, double p, Rng& rng) {
    if (n == 0 || p <= 0.0) {
        return 0;
    }
    if (p >= 1.0) {
        return n;
    }
    boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
    return static_cast<Count>(dist(rng));
}

/**
 * Multinomial draw of n trials over unnormalized non-negative weights,
 * by sequential conditional binomials. Writes into out (same length as
 * weights). Throws DegenerateError if n > 0 and all weights are zero.
 */
inline void multinomial_sample(Count n, std::span<const double> weights, std::span<Count> out,
                               Rng& rng) {
    double remaining_mass = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out[k] = 0;
        remaining_mass += weights[k];
        if (weights[k] > 0.0) {
            last_positive = k;
        }
    }
    if (n == 0) {
        return;
    }
    if (last_positive == weights.size()) {
        throw DegenerateError("multinomial: positive count with zero total weight");
    }
    Count remaining = n;
    for (std::size_t k = 0; k < last_positive && remaining > 0; ++k) {
        if (weights[k] > 0.0) {
            const double q = std::min(1.0, weights[k] / remaining_mass);
            const Count draw = binomial_sample(remaining, q, rng);
            out[k] = draw;
            remaining -= draw;
        }
        remaining_mass -= weights[k];
    }
    // Categories past the last positive weight stay empty.
    out[last_positive] = remaining;
}

// ---- NB / NM samplers ---------------------------------------------------

/// NB(alpha, p) via its Gamma-Poisson mixture with rate (1 - p) / p.
inline Count nb_sample(const NegBinParams& params, Rng& rng) {
    params.validate();
    if (params.p == 0.0) {
        return 0;
    }
    const double lambda = gamma_sample(params.alpha, (1.0 - params.p) / params.p, rng);
    return poisson_sample(lambda, rng);
}

/**
 * Direct NM(alpha, p) draw by sequential conditioning: the first coordinate
 * is NB(alpha, p_1 / (p0 + p_1)) and, given it, the remaining coordinates
 * are NM(alpha + c_1, p_2..p_F). Uses no latent Gamma rate per vector.
 */
inline std::vector<Count> nm_sample(const NegMultParams& params, Rng& rng) {
    std::vector<Count> c(params.size(), 0);
    double shape = params.alpha;
    double rest = params.p0;
    for (std::size_t f = 0; f < params.size(); ++f) {
        const double pf = params.p[f];
        if (pf > 0.0) {
            c[f] = nb_sample(NegBinParams{shape, pf / (rest + pf)}, rng);
        }
        shape += c[f];
        rest += pf;
    }
    return c;
}

namespace detail {

inline void check_mixture_args(double alpha, double beta, std::span<const double> w) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw ParameterError("NM sampler: alpha and beta must be positive");
    }
    for (double wf : w) {
        if (!(wf >= 0.0) || !std::isfinite(wf)) {
            throw ParameterError("NM sampler: weights must be non-negative and finite");
        }
    }
}

} // namespace detail

/// lambda ~ Gamma(alpha, beta), then c_f ~ Poisson(w_f lambda) independently.
inline std::vector<Count> nm_sample_mixture(double alpha, double beta, std::span<const double> w,
                                            Rng& rng) {
    detail::check_mixture_args(alpha, beta, w);
    std::vector<Count> c(w.size(), 0);
    const double lambda = gamma_sample(alpha, beta, rng);
    for (std::size_t f = 0; f < w.size(); ++f) {
        c[f] = poisson_sample(w[f] * lambda, rng);
    }
    return c;
}

/// L ~ NB(alpha, sum(w) / (sum(w) + beta)), then c ~ Mult(L, w / sum(w)).
inline std::vector<Count> nm_sample_compound(double alpha, double beta, std::span<const double> w,
                                             Rng& rng) {
    detail::check_mixture_args(alpha, beta, w);
    std::vector<Count> c(w.size(), 0);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total == 0.0) {
        return c;
    }
    const Count trials = nb_sample(NegBinParams{alpha, total / (total + beta)}, rng);
    multinomial_sample(trials, w, c, rng);
    return c;
}

} // namespace gap
