#pragma once

// Test-only reference computations. Nothing here calls into the code path
// it is used to check: enumeration, Monte Carlo integration and pmfs are
// re-derived from the model definition with independent machinery.

#include "gap/distributions.hpp"
#include "gap/model.hpp"
#include "gap/sparse.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace gap::oracle {

using Float50 = boost::multiprecision::cpp_bin_float_50;

/// NB pmf for integer alpha in 50-digit arithmetic:
/// C(alpha + c - 1, c) (1 - p)^alpha p^c.
inline Float50 nb_pmf_integer_alpha(unsigned alpha, const Float50& p, unsigned c) {
    Float50 coeff = 1;
    for (unsigned i = 1; i <= c; ++i) {
        coeff *= Float50(alpha - 1 + i) / i;
    }
    return coeff * pow(1 - p, alpha) * pow(p, c);
}

/// All length-K vectors of non-negative integers summing to v (recursive).
inline void compositions(unsigned v, std::size_t K, std::vector<std::vector<Count>>& out,
                         std::vector<Count>& prefix) {
    if (prefix.size() + 1 == K) {
        prefix.push_back(v);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (unsigned x = 0; x <= v; ++x) {
        prefix.push_back(x);
        compositions(v - x, K, out, prefix);
        prefix.pop_back();
    }
}

inline std::vector<std::vector<Count>> compositions(unsigned v, std::size_t K) {
    std::vector<std::vector<Count>> out;
    std::vector<Count> prefix;
    compositions(v, K, out, prefix);
    return out;
}

/**
 * -log p(V | W, beta) by materializing every admissible tensor C (all
 * cells jointly, no per-document factorization) and summing
 * prod_{k,n} NM(c_kn) in long double.
 */
inline double materialized_marginal_nll(const GapModel& m, const Eigen::MatrixXd& V) {
    const auto F = static_cast<std::size_t>(V.rows());
    const auto N = static_cast<std::size_t>(V.cols());
    const std::size_t K = m.components();
    struct Cell {
        std::size_t f, n;
        std::vector<std::vector<Count>> options;
    };
    std::vector<Cell> cells;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t f = 0; f < F; ++f) {
            const auto v = static_cast<unsigned>(V(f, n));
            if (v > 0) {
                cells.push_back({f, n, compositions(v, K)});
            }
        }
    }
    std::vector<NegMultParams> params;
    for (std::size_t k = 0; k < K; ++k) {
        const double colsum = m.W.col(k).sum();
        std::vector<double> p(F);
        for (std::size_t f = 0; f < F; ++f) {
            p[f] = m.W(f, k) / (colsum + m.beta(k));
        }
        NegMultParams q;
        q.alpha = m.alpha(k);
        q.p = p;
        q.p0 = m.beta(k) / (colsum + m.beta(k));
        params.push_back(q);
    }

    long double total = 0.0L;
    std::vector<std::size_t> idx(cells.size(), 0);
    for (;;) {
        // Assemble C and evaluate prod_{k,n} NM(c_kn | alpha_k, p_k).
        std::vector<Count> c(F * K * N, 0);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t k = 0; k < K; ++k) {
                c[(cells[i].n * K + k) * F + cells[i].f] = cells[i].options[idx[i]][k];
            }
        }
        long double log_term = 0.0L;
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t k = 0; k < K; ++k) {
                log_term += nm_log_pmf(params[k], std::span<const Count>(&c[(n * K + k) * F], F));
            }
        }
        total += std::exp(log_term);
        std::size_t i = 0;
        for (; i < cells.size(); ++i) {
            if (++idx[i] < cells[i].options.size()) {
                break;
            }
            idx[i] = 0;
        }
        if (i == cells.size()) {
            break;
        }
    }
    return static_cast<double>(-std::log(total));
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/**
 * Naive Monte Carlo integration of p(V | W) = E_H[prod Poisson(v_fn | [WH]_fn)]
 * with H drawn from its Gamma prior using std::gamma_distribution.
 */
inline McEstimate mc_marginal_likelihood(const GapModel& m, const Eigen::MatrixXd& V,
                                         std::size_t draws, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    const auto K = m.W.cols();
    const auto N = V.cols();
    const auto F = V.rows();
    std::vector<std::gamma_distribution<double>> gammas;
    for (Eigen::Index k = 0; k < K; ++k) {
        gammas.emplace_back(m.alpha(k), 1.0 / m.beta(k));
    }
    double log_fact = 0.0;
    for (Eigen::Index i = 0; i < V.size(); ++i) {
        log_fact += std::lgamma(V.data()[i] + 1.0);
    }
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    Eigen::MatrixXd H(K, N);
    for (std::size_t d = 0; d < draws; ++d) {
        for (Eigen::Index n = 0; n < N; ++n) {
            for (Eigen::Index k = 0; k < K; ++k) {
                H(k, n) = gammas[static_cast<std::size_t>(k)](eng);
            }
        }
        double log_lik = -log_fact;
        for (Eigen::Index n = 0; n < N; ++n) {
            for (Eigen::Index f = 0; f < F; ++f) {
                double rate = 0.0;
                for (Eigen::Index k = 0; k < K; ++k) {
                    rate += m.W(f, k) * H(k, n);
                }
                const double v = V(f, n);
                log_lik += (v > 0 ? v * std::log(rate) : 0.0) - rate;
            }
        }
        const long double x = std::exp(static_cast<long double>(log_lik));
        sum += x;
        sum_sq += x * x;
    }
    const long double mean = sum / draws;
    const long double var = (sum_sq / draws - mean * mean) * draws / (draws - 1);
    return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / draws))};
}

/// Empirical law of integer vectors.
using Histogram = std::map<std::vector<Count>, double>;

template <typename Draw>
Histogram empirical(std::size_t samples, Draw&& draw) {
    Histogram h;
    for (std::size_t i = 0; i < samples; ++i) {
        h[draw()] += 1.0;
    }
    for (auto& [k, v] : h) {
        v /= static_cast<double>(samples);
    }
    return h;
}

inline unsigned total(const std::vector<Count>& c) {
    unsigned s = 0;
    for (auto x : c) {
        s += x;
    }
    return s;
}

/**
 * Total variation between two laws restricted to {c : sum(c) <= max_total};
 * all mass outside the support is pooled into one extra bin.
 */
inline double tv_distance(const Histogram& a, const Histogram& b, unsigned max_total) {
    std::map<std::vector<Count>, std::pair<double, double>> joint;
    double out_a = 0.0;
    double out_b = 0.0;
    for (const auto& [k, v] : a) {
        if (total(k) <= max_total) {
            joint[k].first += v;
        } else {
            out_a += v;
        }
    }
    for (const auto& [k, v] : b) {
        if (total(k) <= max_total) {
            joint[k].second += v;
        } else {
            out_b += v;
        }
    }
    double tv = std::abs(out_a - out_b);
    for (const auto& [k, v] : joint) {
        tv += std::abs(v.first - v.second);
    }
    return 0.5 * tv;
}

/// Exact law of NM(params) on {sum(c) <= max_total}, via the pmf; the
/// remaining mass is implied by tv_distance's outside bin.
inline Histogram exact_nm_law(const NegMultParams& params, unsigned max_total) {
    Histogram h;
    const std::size_t F = params.size();
    for (unsigned s = 0; s <= max_total; ++s) {
        for (const auto& c : compositions(s, F)) {
            h[c] = std::exp(nm_log_pmf(params, c));
        }
    }
    double inside = 0.0;
    for (const auto& [k, v] : h) {
        inside += v;
    }
    h[std::vector<Count>(F, max_total + 1)] = 1.0 - inside; // outside marker
    return h;
}

} // namespace gap::oracle
