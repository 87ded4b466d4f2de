#pragma once

// Gibbs sampling of (H, C) given V and the three Monte Carlo EM schemes
// for the dictionary: MCEM-C, MCEM-H and MCEM-CH.

#include "gap/distributions.hpp"
#include "gap/error.hpp"
#include "gap/marginal.hpp"
#include "gap/model.hpp"
#include "gap/parallel.hpp"
#include "gap/rng.hpp"
#include "gap/sparse.hpp"

#include <cmath>
#include <ctime>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gap {

enum class Algorithm { c, h, ch };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::c:
        return "c";
    case Algorithm::h:
        return "h";
    case Algorithm::ch:
        return "ch";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "c") {
        return Algorithm::c;
    }
    if (s == "h") {
        return Algorithm::h;
    }
    if (s == "ch") {
        return Algorithm::ch;
    }
    throw ParameterError("unknown algorithm '" + std::string(s) + "' (valid: c, h, ch)");
}

struct McemConfig {
    int n_iters = 500;
    int n_gibbs = 300;
    int burn_in = 150;
    Algorithm algorithm = Algorithm::c;
    std::uint64_t seed = 0;
    /// Lower clamp applied after the MCEM-H update only.
    double w_floor = 0.0;
    int trace_every = 1;
    /// Term budget for the per-iteration C_ML column; 0 disables it.
    BigInt ml_budget = 0;
    /// Worker threads over documents; 0 means all cores.
    unsigned threads = 1;

    int kept_samples() const { return n_gibbs - burn_in; }

    void validate() const {
        if (n_iters < 0) {
            throw ParameterError("mcem: n_iters must be non-negative");
        }
        if (n_gibbs < 1 || burn_in < 0 || burn_in >= n_gibbs) {
            throw ParameterError("mcem: need 0 <= burn_in < n_gibbs");
        }
        if (trace_every < 1) {
            throw ParameterError("mcem: trace_every must be at least 1");
        }
        if (!(w_floor >= 0.0)) {
            throw ParameterError("mcem: w_floor must be non-negative");
        }
    }
};

/**
 * Monte Carlo sufficient statistics over the J kept Gibbs samples:
 * sc_fk = sum_{j,n} c_fkn, sh_k = sum_{j,n} h_kn and
 * srat_fk = sum_{j,n} h_kn v_fn / [W~ H]_fn.
 */
struct SampleSums {
    Matrix sc;
    Vector sh;
    Matrix srat;
    int J = 0;
};

/// Current Gibbs sample plus one random stream per document.
struct GibbsState {
    Matrix H;
    ComponentTensor C;
    std::vector<Rng> rngs;

    /// Point document streams at coordinates (seed, iteration, n).
    void reseed(std::uint64_t seed, std::uint64_t iteration) {
        for (std::size_t n = 0; n < rngs.size(); ++n) {
            rngs[n] = Rng::substream(seed, {iteration, n});
        }
    }
};

namespace detail {

inline void check_dims(const GapModel& model, const SparseCountMatrix& V, const GibbsState& s) {
    if (V.rows() != model.features() || static_cast<std::size_t>(s.H.rows()) != model.components() ||
        static_cast<std::size_t>(s.H.cols()) != V.cols() || s.C.cells() != V.nnz() ||
        s.C.components() != model.components() || s.rngs.size() != V.cols()) {
        throw ShapeError("gibbs: state is inconsistent with V and W");
    }
}

// Multinomial split of every nonzero cell of document n under
// rho_fk proportional to w_fk h_kn.
inline void split_document(const GapModel& model, const SparseCountMatrix& V, std::size_t n,
                           GibbsState& s, std::vector<double>& rho) {
    const std::size_t K = model.components();
    const auto col = static_cast<Eigen::Index>(n);
    const auto doc = V.doc(n);
    const std::size_t offset = V.doc_offset(n);
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto f = static_cast<Eigen::Index>(doc[i].f);
        for (std::size_t k = 0; k < K; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            rho[k] = model.W(f, kk) * s.H(kk, col);
        }
        try {
            multinomial_sample(doc[i].v, rho, s.C.cell(offset + i), s.rngs[n]);
        } catch (const DegenerateError&) {
            throw DegenerateError("gibbs: cell (" + std::to_string(doc[i].f) + ", " +
                                  std::to_string(n) + ") has count " + std::to_string(doc[i].v) +
                                  " but [WH]_fn = 0");
        }
    }
}

// Per-document accumulators for the kept samples, laid out like the state.
struct GibbsAccumulators {
    std::vector<double> sc;   // cells x K
    std::vector<double> srat; // cells x K
    Matrix sh;                // K x N
};

// One Gibbs sweep of document n; optionally folds the new sample into acc.
inline void sweep_document(const GapModel& model, const Vector& column_sums,
                           const SparseCountMatrix& V, std::size_t n, GibbsState& s,
                           std::vector<double>& rho, GibbsAccumulators* acc) {
    const std::size_t K = model.components();
    const auto col = static_cast<Eigen::Index>(n);
    const auto doc = V.doc(n);
    const std::size_t offset = V.doc_offset(n);
    for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        double shape = model.alpha(kk);
        for (std::size_t i = 0; i < doc.size(); ++i) {
            shape += s.C.cell(offset + i)[k];
        }
        s.H(kk, col) = gamma_sample(shape, model.beta(kk) + column_sums(kk), s.rngs[n]);
    }
    split_document(model, V, n, s, rho);
    if (acc == nullptr) {
        return;
    }
    for (std::size_t k = 0; k < K; ++k) {
        acc->sh(static_cast<Eigen::Index>(k), col) += s.H(static_cast<Eigen::Index>(k), col);
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto f = static_cast<Eigen::Index>(doc[i].f);
        const auto cell = s.C.cell(offset + i);
        double rate = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            rate += model.W(f, static_cast<Eigen::Index>(k)) * s.H(static_cast<Eigen::Index>(k), col);
        }
        const double v = doc[i].v;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t at = (offset + i) * K + k;
            acc->sc[at] += cell[k];
            acc->srat[at] += s.H(static_cast<Eigen::Index>(k), col) * v / rate;
        }
    }
}

} // namespace detail

/**
 * Chain start: H at its prior mean alpha_k / beta_k and C drawn by one
 * multinomial split of V given that H. Document streams are derived from
 * (seed, 0, n); EM iteration i later uses (seed, i, n).
 */
inline GibbsState initial_state(const GapModel& model, const SparseCountMatrix& V,
                                std::uint64_t seed) {
    model.validate();
    const auto K = static_cast<Eigen::Index>(model.components());
    GibbsState s;
    s.H = Matrix(K, static_cast<Eigen::Index>(V.cols()));
    for (Eigen::Index k = 0; k < K; ++k) {
        s.H.row(k).setConstant(model.alpha(k) / model.beta(k));
    }
    s.C = ComponentTensor(V.nnz(), model.components());
    s.rngs.resize(V.cols());
    s.reseed(seed, 0);
    std::vector<double> rho(model.components());
    for (std::size_t n = 0; n < V.cols(); ++n) {
        detail::split_document(model, V, n, s, rho);
    }
    return s;
}

/**
 * One sweep: h_kn ~ Gamma(alpha_k + sum_f c_fkn, beta_k + sum_f w_fk) for
 * all (k, n), then c_fn ~ Mult(v_fn, rho_fn) with rho_fk proportional to
 * w_fk h_kn for every cell with v_fn > 0. Zero cells are never touched.
 */
inline void gibbs_sweep(GibbsState& state, const GapModel& model, const SparseCountMatrix& V,
                        unsigned threads = 1) {
    detail::check_dims(model, V, state);
    const Vector column_sums = model.column_norms();
    parallel_for(V.cols(), threads, [&](std::size_t n) {
        std::vector<double> rho(model.components());
        detail::sweep_document(model, column_sums, V, n, state, rho, nullptr);
    });
}

/**
 * Runs n_gibbs sweeps from the given state (warm restart) and accumulates
 * the statistics of the last n_gibbs - burn_in. The state is left at the
 * final sample. Documents evolve independently given W, so they are
 * processed in parallel and reduced in document order.
 */
inline SampleSums collect_sums(const GapModel& model, const SparseCountMatrix& V,
                               GibbsState& state, int n_gibbs, int burn_in,
                               unsigned threads = 1) {
    if (n_gibbs < 1 || burn_in < 0 || burn_in >= n_gibbs) {
        throw ParameterError("collect_sums: need 0 <= burn_in < n_gibbs");
    }
    detail::check_dims(model, V, state);
    const std::size_t K = model.components();
    const auto Ki = static_cast<Eigen::Index>(K);
    const Vector column_sums = model.column_norms();
    detail::GibbsAccumulators acc{std::vector<double>(V.nnz() * K, 0.0),
                             std::vector<double>(V.nnz() * K, 0.0),
                             Matrix::Zero(Ki, static_cast<Eigen::Index>(V.cols()))};
    parallel_for(V.cols(), threads, [&](std::size_t n) {
        std::vector<double> rho(K);
        for (int j = 0; j < n_gibbs; ++j) {
            detail::sweep_document(model, column_sums, V, n, state, rho,
                                   j >= burn_in ? &acc : nullptr);
        }
    });

    SampleSums sums{Matrix::Zero(static_cast<Eigen::Index>(model.features()), Ki),
                    Vector::Zero(Ki),
                    Matrix::Zero(static_cast<Eigen::Index>(model.features()), Ki),
                    n_gibbs - burn_in};
    const auto entries = V.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto f = static_cast<Eigen::Index>(entries[i].f);
        for (std::size_t k = 0; k < K; ++k) {
            sums.sc(f, static_cast<Eigen::Index>(k)) += acc.sc[i * K + k];
            sums.srat(f, static_cast<Eigen::Index>(k)) += acc.srat[i * K + k];
        }
    }
    for (Eigen::Index n = 0; n < acc.sh.cols(); ++n) {
        sums.sh += acc.sh.col(n);
    }
    return sums;
}

/// MCEM-CH: w_fk = sc_fk / sh_k.
inline Matrix mstep_ch(const SampleSums& sums) {
    if ((sums.sh.array() <= 0.0).any()) {
        throw DegenerateError("mstep_ch: sum of h over samples is zero for some component");
    }
    Matrix W = sums.sc;
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        W.col(k) /= sums.sh(k);
    }
    return W;
}

/// MCEM-H multiplicative update w_fk = w~_fk srat_fk / sh_k, then clamped
/// from below at w_floor. With w_floor = 0 exact zeros are absorbing.
inline Matrix mstep_h(const Matrix& W_prev, const SampleSums& sums, double w_floor = 0.0) {
    if ((sums.sh.array() <= 0.0).any()) {
        throw DegenerateError("mstep_h: sum of h over samples is zero for some component");
    }
    if (W_prev.rows() != sums.srat.rows() || W_prev.cols() != sums.srat.cols()) {
        throw ShapeError("mstep_h: W and statistics dimensions differ");
    }
    Matrix W = W_prev.cwiseProduct(sums.srat);
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        W.col(k) /= sums.sh(k);
    }
    if (w_floor > 0.0) {
        W = W.cwiseMax(w_floor);
    }
    return W;
}

/**
 * MCEM-C closed form w_fk = (beta_k / alpha_k) sc_fk / (J N): the exact
 * minimizer of the Monte Carlo estimate of Q_C, i.e. the solution of the
 * diagonal-plus-rank-one system A_k w_k = b_k.
 */
inline Matrix mstep_c(const Vector& alpha, const Vector& beta, const SampleSums& sums,
                      std::size_t N) {
    if (sums.J < 1 || N == 0) {
        throw ParameterError("mstep_c: need J >= 1 and N >= 1");
    }
    Matrix W = sums.sc / (static_cast<double>(sums.J) * static_cast<double>(N));
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        W.col(k) *= beta(k) / alpha(k);
    }
    return W;
}

/// Deterministic start w_fk = (1/K) (beta_k / alpha_k) v-bar_f.
inline Matrix init_w(const SparseCountMatrix& V, std::size_t K, const Vector& alpha,
                     const Vector& beta) {
    if (static_cast<std::size_t>(alpha.size()) != K || static_cast<std::size_t>(beta.size()) != K) {
        throw ShapeError("init_w: alpha and beta must have K entries");
    }
    const Vector means = V.row_means();
    Matrix W(means.size(), static_cast<Eigen::Index>(K));
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        W.col(k) = means * (beta(k) / alpha(k) / static_cast<double>(K));
    }
    return W;
}

struct TraceRecord {
    int iter = 0;
    double cpu_seconds = 0.0;
    std::vector<double> norms;
    std::optional<double> c_ml;
};

struct McemResult {
    GapModel model;
    std::vector<TraceRecord> trace;
};

/// Receives every recorded iteration together with the iterate itself.
using TraceSink = std::function<void(const TraceRecord&, const GapModel&)>;

/**
 * Monte Carlo EM for the dictionary with a fixed number of iterations.
 *
 * Records iteration 0 (the initial W), every trace_every-th iteration and
 * the last one. cpu_seconds is process CPU time spent in the estimation
 * itself; time spent evaluating the optional C_ML column is excluded.
 */
inline McemResult run_mcem(const SparseCountMatrix& V, std::size_t K, const Vector& alpha,
                           const Vector& beta, const McemConfig& config,
                           const TraceSink& sink = {}) {
    config.validate();
    GapModel model(init_w(V, K, alpha, beta), alpha, beta);
    McemResult result;

    std::clock_t start = std::clock();
    double excluded = 0.0;
    auto record = [&](int iter) {
        const std::clock_t paused = std::clock();
        TraceRecord r;
        r.iter = iter;
        r.cpu_seconds = static_cast<double>(paused - start) / CLOCKS_PER_SEC - excluded;
        const Vector norms = model.column_norms();
        r.norms.assign(norms.data(), norms.data() + norms.size());
        if (config.ml_budget > 0) {
            try {
                r.c_ml = marginal_nll(model, V, config.ml_budget, config.threads);
            } catch (const BudgetError&) {
                r.c_ml.reset();
            }
        }
        if (sink) {
            sink(r, model);
        }
        result.trace.push_back(std::move(r));
        excluded += static_cast<double>(std::clock() - paused) / CLOCKS_PER_SEC;
    };

    record(0);
    if (config.n_iters == 0) {
        result.model = model;
        return result;
    }

    GibbsState state = initial_state(model, V, config.seed);
    for (int iter = 1; iter <= config.n_iters; ++iter) {
        state.reseed(config.seed, static_cast<std::uint64_t>(iter));
        const SampleSums sums =
            collect_sums(model, V, state, config.n_gibbs, config.burn_in, config.threads);
        Matrix W;
        switch (config.algorithm) {
        case Algorithm::c:
            W = mstep_c(model.alpha, model.beta, sums, V.cols());
            break;
        case Algorithm::h:
            W = mstep_h(model.W, sums, config.w_floor);
            break;
        case Algorithm::ch:
            W = mstep_ch(sums);
            break;
        }
        if (!W.allFinite()) {
            throw NumericalError("mcem-" + std::string(to_string(config.algorithm)) +
                                 ": non-finite dictionary entry at iteration " +
                                 std::to_string(iter));
        }
        model.W = std::move(W);
        if (iter % config.trace_every == 0 || iter == config.n_iters) {
            record(iter);
        }
    }
    result.model = model;
    return result;
}

} // namespace gap
