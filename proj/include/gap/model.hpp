#pragma once

#include "gap/distributions.hpp"
#include "gap/error.hpp"
#include "gap/parallel.hpp"
#include "gap/rng.hpp"
#include "gap/sparse.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace gap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Gamma-Poisson factorization model.
 *
 * Dictionary W (F x K, non-negative) and per-component Gamma shape
 * alpha_k and rate beta_k of the activations.
 */
struct GapModel {
    Matrix W;
    Vector alpha;
    Vector beta;

    GapModel() = default;
    GapModel(Matrix w, Vector a, Vector b) : W(std::move(w)), alpha(std::move(a)), beta(std::move(b)) {
        validate();
    }

    /// Model with every alpha_k = alpha and beta_k = beta.
    static GapModel with_scalar_hyper(Matrix w, double alpha, double beta) {
        const auto K = w.cols();
        return GapModel(std::move(w), Vector::Constant(K, alpha), Vector::Constant(K, beta));
    }

    std::size_t features() const { return static_cast<std::size_t>(W.rows()); }
    std::size_t components() const { return static_cast<std::size_t>(W.cols()); }

    void validate() const {
        if (alpha.size() != W.cols() || beta.size() != W.cols()) {
            throw ShapeError("model: alpha and beta must have one entry per column of W");
        }
        if (W.cols() == 0) {
            throw ShapeError("model: K must be at least 1");
        }
        for (Eigen::Index i = 0; i < W.size(); ++i) {
            const double x = W.data()[i];
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw ParameterError("model: W entries must be non-negative and finite");
            }
        }
        for (Eigen::Index k = 0; k < W.cols(); ++k) {
            if (!(alpha(k) > 0.0) || !std::isfinite(alpha(k)) || !(beta(k) > 0.0) ||
                !std::isfinite(beta(k))) {
                throw ParameterError("model: alpha_k and beta_k must be positive and finite");
            }
        }
    }

    /// ||w_k||_1 for every column.
    Vector column_norms() const { return W.colwise().sum().transpose(); }
};

/// Output of the hierarchical generator: all three levels.
struct HierarchicalSample {
    Matrix H;
    ComponentTensor C;
    SparseCountMatrix V;
};

/// Output of the H-free generators.
struct CompositeSample {
    ComponentTensor C;
    SparseCountMatrix V;
};

namespace detail {

// Assembles (C, V) from per-document dense F x K component blocks
// (row-major, feature-major), keeping only features with positive totals.
inline CompositeSample assemble(std::size_t F, std::size_t K,
                                const std::vector<std::vector<Count>>& blocks) {
    std::vector<std::vector<DocEntry>> docs(blocks.size());
    std::size_t cells = 0;
    for (std::size_t n = 0; n < blocks.size(); ++n) {
        for (std::size_t f = 0; f < F; ++f) {
            std::uint64_t v = 0;
            for (std::size_t k = 0; k < K; ++k) {
                v += blocks[n][f * K + k];
            }
            if (v > 0) {
                docs[n].push_back({f, static_cast<Count>(v)});
            }
        }
        cells += docs[n].size();
    }
    CompositeSample out{ComponentTensor(cells, K), SparseCountMatrix::from_documents(F, docs)};
    std::size_t i = 0;
    for (std::size_t n = 0; n < blocks.size(); ++n) {
        for (const auto& e : docs[n]) {
            auto cell = out.C.cell(i++);
            for (std::size_t k = 0; k < K; ++k) {
                cell[k] = blocks[n][e.f * K + k];
            }
        }
    }
    return out;
}

template <typename PerDoc>
CompositeSample generate_by_document(const GapModel& model, std::size_t N, Rng& rng,
                                     unsigned threads, PerDoc&& per_doc) {
    model.validate();
    const std::size_t F = model.features();
    const std::size_t K = model.components();
    const std::uint64_t master = rng.next_seed();
    std::vector<std::vector<Count>> blocks(N, std::vector<Count>(F * K, 0));
    parallel_for(N, threads, [&](std::size_t n) {
        Rng doc_rng = Rng::substream(master, {n});
        per_doc(n, doc_rng, blocks[n]);
    });
    return assemble(F, K, blocks);
}

} // namespace detail

/**
 * Composite GaP draw: h_kn ~ Gamma(alpha_k, beta_k),
 * c_fkn ~ Poisson(w_fk h_kn), v_fn = sum_k c_fkn.
 *
 * One 64-bit master seed is drawn from rng; document n then uses its own
 * substream, so the result does not depend on the thread count.
 */
inline HierarchicalSample generate_hierarchical(const GapModel& model, std::size_t N, Rng& rng,
                                                unsigned threads = 1) {
    const std::size_t F = model.features();
    const std::size_t K = model.components();
    Matrix H(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
    auto composite = detail::generate_by_document(
        model, N, rng, threads, [&](std::size_t n, Rng& r, std::vector<Count>& block) {
            const auto col = static_cast<Eigen::Index>(n);
            for (std::size_t k = 0; k < K; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                H(kk, col) = gamma_sample(model.alpha(kk), model.beta(kk), r);
            }
            for (std::size_t f = 0; f < F; ++f) {
                for (std::size_t k = 0; k < K; ++k) {
                    const auto kk = static_cast<Eigen::Index>(k);
                    block[f * K + k] =
                        poisson_sample(model.W(static_cast<Eigen::Index>(f), kk) * H(kk, col), r);
                }
            }
        });
    return {std::move(H), std::move(composite.C), std::move(composite.V)};
}

/// H-free draw: c_kn ~ NM(alpha_k, p_.k) with p_fk = w_fk / (||w_k||_1 + beta_k).
inline CompositeSample generate_nm(const GapModel& model, std::size_t N, Rng& rng,
                                   unsigned threads = 1) {
    const std::size_t F = model.features();
    const std::size_t K = model.components();
    std::vector<NegMultParams> params;
    for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const Vector wk = model.W.col(kk);
        params.push_back(NegMultParams::from_mixture(model.alpha(kk), model.beta(kk),
                                                     {wk.data(), F}));
    }
    return detail::generate_by_document(
        model, N, rng, threads, [&](std::size_t, Rng& r, std::vector<Count>& block) {
            for (std::size_t k = 0; k < K; ++k) {
                const auto c = nm_sample(params[k], r);
                for (std::size_t f = 0; f < F; ++f) {
                    block[f * K + k] = c[f];
                }
            }
        });
}

/// H-free draw: L_kn ~ NB(alpha_k, ||w_k|| / (||w_k|| + beta_k)),
/// c_kn ~ Mult(L_kn, w_k / ||w_k||).
inline CompositeSample generate_compound(const GapModel& model, std::size_t N, Rng& rng,
                                         unsigned threads = 1) {
    const std::size_t F = model.features();
    const std::size_t K = model.components();
    std::vector<Vector> columns;
    for (std::size_t k = 0; k < K; ++k) {
        columns.emplace_back(model.W.col(static_cast<Eigen::Index>(k)));
    }
    return detail::generate_by_document(
        model, N, rng, threads, [&](std::size_t, Rng& r, std::vector<Count>& block) {
            for (std::size_t k = 0; k < K; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                const auto c =
                    nm_sample_compound(model.alpha(kk), model.beta(kk), {columns[k].data(), F}, r);
                for (std::size_t f = 0; f < F; ++f) {
                    block[f * K + k] = c[f];
                }
            }
        });
}

/// Generalized KL divergence D(V | Vhat); +inf when vhat_fn = 0 < v_fn.
inline double kl_divergence(const SparseCountMatrix& V, const Matrix& Vhat) {
    if (static_cast<std::size_t>(Vhat.rows()) != V.rows() ||
        static_cast<std::size_t>(Vhat.cols()) != V.cols()) {
        throw ShapeError("kl_divergence: V and Vhat dimensions differ");
    }
    double d = Vhat.sum();
    for (std::size_t n = 0; n < V.cols(); ++n) {
        for (const auto& e : V.doc(n)) {
            const double v = e.v;
            const double vh = Vhat(static_cast<Eigen::Index>(e.f), static_cast<Eigen::Index>(n));
            if (!(vh > 0.0)) {
                return kInf;
            }
            d += v * std::log(v / vh) - v;
        }
    }
    return d;
}

/**
 * -log p(V, H | W, beta): D_KL(V | WH) + R_alpha(H, beta) + constant, where
 * the constant collects sum log v_fn! - v log v + v and N sum_k log Gamma(alpha_k),
 * making the value an exact negative log density.
 */
inline double joint_nll(const GapModel& model, const SparseCountMatrix& V, const Matrix& H) {
    model.validate();
    if (static_cast<std::size_t>(H.rows()) != model.components() ||
        static_cast<std::size_t>(H.cols()) != V.cols() || V.rows() != model.features()) {
        throw ShapeError("joint_nll: inconsistent dimensions");
    }
    if ((H.array() <= 0.0).any()) {
        throw ParameterError("joint_nll: H must be positive");
    }
    const double kl = kl_divergence(V, model.W * H);
    const auto N = static_cast<double>(V.cols());
    double reg = 0.0;
    double cst = 0.0;
    for (Eigen::Index k = 0; k < H.rows(); ++k) {
        const double a = model.alpha(k);
        const double b = model.beta(k);
        for (Eigen::Index n = 0; n < H.cols(); ++n) {
            reg += (1.0 - a) * std::log(H(k, n)) + b * H(k, n);
        }
        reg -= N * a * std::log(b);
        cst += N * log_gamma(a);
    }
    for (const auto& e : V.entries()) {
        const double v = e.v;
        cst += log_factorial(e.v) - v * std::log(v) + v;
    }
    return kl + reg + cst;
}

} // namespace gap
