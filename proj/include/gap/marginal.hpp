#pragma once

// Closed-form marginal likelihood -log p(V | W, beta) by exact enumeration
// of the admissible component tensors.

#include "gap/error.hpp"
#include "gap/model.hpp"
#include "gap/parallel.hpp"
#include "gap/special.hpp"

#include <cmath>
#include <cstddef>
#include <iterator>
#include <map>
#include <span>
#include <vector>

namespace gap {

/// p_fk = w_fk / (||w_k||_1 + beta_k) and p0_k = beta_k / (||w_k||_1 + beta_k).
struct EventProbs {
    Matrix p;
    Vector p0;
};

inline EventProbs event_probs(const GapModel& model) {
    model.validate();
    EventProbs e{Matrix(model.W.rows(), model.W.cols()), Vector(model.W.cols())};
    for (Eigen::Index k = 0; k < model.W.cols(); ++k) {
        const double denom = model.W.col(k).sum() + model.beta(k);
        e.p.col(k) = model.W.col(k) / denom;
        e.p0(k) = model.beta(k) / denom;
    }
    return e;
}

/**
 * The length-K non-negative integer vectors summing to v, visited in
 * ascending lexicographic order: (0,..,0,v) first, (v,0,..,0) last.
 */
class Compositions {
  public:
    class iterator {
      public:
        using iterator_category = std::input_iterator_tag;
        using value_type = std::vector<Count>;
        using difference_type = std::ptrdiff_t;
        using pointer = const value_type*;
        using reference = const value_type&;

        iterator() = default;
        explicit iterator(std::size_t K, Count v) : current_(K, 0), done_(false) {
            current_.back() = v;
        }

        reference operator*() const { return current_; }
        pointer operator->() const { return &current_; }

        iterator& operator++() {
            // Largest i < K-1 with a positive tail sum gets incremented;
            // the decremented tail collapses onto the last coordinate.
            const std::size_t K = current_.size();
            Count tail = current_[K - 1];
            for (std::size_t i = K - 1; i-- > 0;) {
                if (tail > 0) {
                    ++current_[i];
                    for (std::size_t j = i + 1; j + 1 < K; ++j) {
                        current_[j] = 0;
                    }
                    current_[K - 1] = tail - 1;
                    return *this;
                }
                tail += current_[i];
            }
            done_ = true;
            return *this;
        }
        void operator++(int) { ++*this; }

        friend bool operator==(const iterator& it, std::default_sentinel_t) { return it.done_; }

      private:
        std::vector<Count> current_;
        bool done_ = true;
    };

    Compositions(Count v, std::size_t K) : v_(v), K_(K) {
        if (K == 0) {
            throw ParameterError("compositions: K must be at least 1");
        }
    }

    iterator begin() const { return iterator(K_, v_); }
    std::default_sentinel_t end() const { return {}; }

    /// C(v + K - 1, K - 1).
    BigInt size() const { return binomial(v_ + K_ - 1, K_ - 1); }

  private:
    Count v_;
    std::size_t K_;
};

inline std::vector<std::vector<Count>> enumerate_compositions(Count v, std::size_t K) {
    std::vector<std::vector<Count>> out;
    for (const auto& c : Compositions(v, K)) {
        out.push_back(c);
    }
    return out;
}

/// #C = prod over nonzero cells of C(v_fn + K - 1, K - 1), exact.
inline BigInt admissible_cardinality(const SparseCountMatrix& V, std::size_t K) {
    BigInt card = 1;
    for (const auto& e : V.entries()) {
        card *= binomial(e.v + K - 1, K - 1);
    }
    return card;
}

inline const BigInt kDefaultBudget = 100'000'000;

/// Split of C_ML / N into the data/parameter interaction, the column-norm
/// group regularizer sum_k alpha_k log(||w_k||_1 + beta_k), and the constant.
struct MarginalDecomposition {
    double interaction = 0.0;
    double regularizer = 0.0;
    double constant = 0.0;

    double per_document() const { return interaction + regularizer + constant; }
};

namespace detail {

// The admissible set factorizes over documents, C = C_1 x ... x C_N, and
// so does the summand. The sum is therefore a product of per-document sums,
// each enumerated by an odometer over that document's nonzero cells.
class DocumentEnumerator {
  public:
    DocumentEnumerator(const GapModel& model, const Matrix& log_p)
        : model_(model), log_p_(log_p), K_(model.components()) {}

    /// log sum_{C_n} prod_k Gamma(s_k + a_k) / (Gamma(a_k) prod_f c_fk!) prod p_fk^c_fk.
    double log_sum(std::span<const DocEntry> doc) const {
        const std::size_t K = K_;
        std::uint64_t total = 0;
        for (const auto& e : doc) {
            total += e.v;
        }
        // lgamma(alpha_k + s) - lgamma(alpha_k) for s = 0..total.
        std::vector<double> shape_table(K * (total + 1));
        for (std::size_t k = 0; k < K; ++k) {
            const double a = model_.alpha(static_cast<Eigen::Index>(k));
            const double base = log_gamma(a);
            for (std::uint64_t s = 0; s <= total; ++s) {
                shape_table[k * (total + 1) + s] = log_gamma(a + static_cast<double>(s)) - base;
            }
        }

        // Per cell: surviving compositions and their cell-local log weight.
        struct Cell {
            std::vector<Count> counts; // flattened, K per composition
            std::vector<double> weight;
        };
        std::vector<Cell> cells(doc.size());
        for (std::size_t i = 0; i < doc.size(); ++i) {
            const auto f = static_cast<Eigen::Index>(doc[i].f);
            for (const auto& c : Compositions(doc[i].v, K)) {
                double w = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    if (c[k] == 0) {
                        continue;
                    }
                    const double lp = log_p_(f, static_cast<Eigen::Index>(k));
                    if (lp == -kInf) {
                        w = -kInf;
                        break;
                    }
                    w += static_cast<double>(c[k]) * lp - log_factorial(c[k]);
                }
                if (w == -kInf) {
                    continue;
                }
                cells[i].counts.insert(cells[i].counts.end(), c.begin(), c.end());
                cells[i].weight.push_back(w);
            }
            if (cells[i].weight.empty()) {
                return -kInf;
            }
        }

        LogSumExp acc;
        std::vector<std::size_t> idx(cells.size(), 0);
        std::vector<std::uint64_t> sums(K, 0);
        for (;;) {
            std::fill(sums.begin(), sums.end(), 0);
            double term = 0.0;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                term += cells[i].weight[idx[i]];
                const Count* c = cells[i].counts.data() + idx[i] * K;
                for (std::size_t k = 0; k < K; ++k) {
                    sums[k] += c[k];
                }
            }
            for (std::size_t k = 0; k < K; ++k) {
                term += shape_table[k * (total + 1) + sums[k]];
            }
            acc.add(term);

            std::size_t i = 0;
            for (; i < cells.size(); ++i) {
                if (++idx[i] < cells[i].weight.size()) {
                    break;
                }
                idx[i] = 0;
            }
            if (i == cells.size()) {
                break;
            }
        }
        return acc.value();
    }

  private:
    const GapModel& model_;
    const Matrix& log_p_;
    std::size_t K_;
};

struct DocumentSums {
    std::vector<double> log_sums; // one per document
};

inline BigInt document_terms(std::span<const DocEntry> doc, std::size_t K) {
    BigInt t = 1;
    for (const auto& e : doc) {
        t *= binomial(e.v + K - 1, K - 1);
    }
    return t;
}

inline DocumentSums document_log_sums(const GapModel& model, const SparseCountMatrix& V,
                                      const BigInt& budget, unsigned threads) {
    model.validate();
    if (V.rows() != model.features()) {
        throw ShapeError("marginal: V has " + std::to_string(V.rows()) + " rows, W has " +
                         std::to_string(model.features()));
    }
    const std::size_t K = model.components();

    // Identical documents share one enumeration.
    std::map<std::vector<DocEntry>, std::size_t> index_of;
    std::vector<std::span<const DocEntry>> unique_docs;
    std::vector<std::size_t> doc_to_unique(V.cols());
    BigInt terms = 0;
    for (std::size_t n = 0; n < V.cols(); ++n) {
        const auto doc = V.doc(n);
        auto [it, inserted] =
            index_of.try_emplace(std::vector<DocEntry>(doc.begin(), doc.end()), unique_docs.size());
        if (inserted) {
            unique_docs.push_back(doc);
            terms += document_terms(doc, K);
        }
        doc_to_unique[n] = it->second;
    }
    if (terms > budget) {
        throw BudgetError(admissible_cardinality(V, K).str(), terms.str(), budget.str());
    }

    const auto ep = event_probs(model);
    Matrix log_p = ep.p.array().log().matrix();
    const DocumentEnumerator enumerator(model, log_p);
    std::vector<double> unique_sums(unique_docs.size());
    parallel_for(unique_docs.size(), threads,
                 [&](std::size_t u) { unique_sums[u] = enumerator.log_sum(unique_docs[u]); });

    DocumentSums out;
    out.log_sums.reserve(V.cols());
    for (std::size_t n = 0; n < V.cols(); ++n) {
        out.log_sums.push_back(unique_sums[doc_to_unique[n]]);
    }
    return out;
}

} // namespace detail

/**
 * Number of summands the closed-form evaluation enumerates: the sum over
 * distinct documents of prod_f C(v_fn + K - 1, K - 1).
 */
inline BigInt enumeration_terms(const SparseCountMatrix& V, std::size_t K) {
    std::map<std::vector<DocEntry>, bool> seen;
    BigInt terms = 0;
    for (std::size_t n = 0; n < V.cols(); ++n) {
        const auto doc = V.doc(n);
        if (seen.try_emplace(std::vector<DocEntry>(doc.begin(), doc.end()), true).second) {
            terms += detail::document_terms(doc, K);
        }
    }
    return terms;
}

/**
 * C_ML(W) = -log p(V | W, beta), exact.
 *
 * Throws BudgetError (before any enumeration) when the number of summands
 * exceeds budget. Returns +inf when V has a positive count that no
 * component can produce.
 */
inline double marginal_nll(const GapModel& model, const SparseCountMatrix& V,
                           const BigInt& budget = kDefaultBudget, unsigned threads = 1) {
    const auto sums = detail::document_log_sums(model, V, budget, threads);
    double log_lik = 0.0;
    for (double s : sums.log_sums) {
        log_lik += s;
    }
    const auto N = static_cast<double>(V.cols());
    for (Eigen::Index k = 0; k < model.W.cols(); ++k) {
        const double denom = model.W.col(k).sum() + model.beta(k);
        log_lik += N * model.alpha(k) * std::log(model.beta(k) / denom);
    }
    return -log_lik;
}

inline MarginalDecomposition marginal_nll_decomposed(const GapModel& model,
                                                     const SparseCountMatrix& V,
                                                     const BigInt& budget = kDefaultBudget,
                                                     unsigned threads = 1) {
    const auto sums = detail::document_log_sums(model, V, budget, threads);
    MarginalDecomposition d;
    double log_sum = 0.0;
    for (double s : sums.log_sums) {
        log_sum += s;
    }
    d.interaction = V.cols() > 0 ? -log_sum / static_cast<double>(V.cols()) : 0.0;
    for (Eigen::Index k = 0; k < model.W.cols(); ++k) {
        d.regularizer += model.alpha(k) * std::log(model.W.col(k).sum() + model.beta(k));
        d.constant -= model.alpha(k) * std::log(model.beta(k));
    }
    return d;
}

struct GridPoint {
    double w1 = 0.0;
    double w2 = 0.0;
    double c_ml = 0.0;
};

/**
 * C_ML over a steps x steps grid of (w_1, w_2) in [lo, hi]^2 for a
 * single-feature, two-component model. steps = 1 evaluates (lo, lo) only.
 */
inline std::vector<GridPoint> marginal_nll_grid(const SparseCountMatrix& V, const Vector& alpha,
                                                const Vector& beta, double lo, double hi,
                                                std::size_t steps,
                                                const BigInt& budget = kDefaultBudget,
                                                unsigned threads = 1) {
    if (V.rows() != 1 || alpha.size() != 2 || beta.size() != 2) {
        throw ShapeError("grid: only F = 1, K = 2 is supported");
    }
    if (steps == 0 || !(lo >= 0.0) || !(hi >= lo)) {
        throw ParameterError("grid: need steps >= 1 and 0 <= lo <= hi");
    }
    std::vector<GridPoint> grid(steps * steps);
    const double step = steps > 1 ? (hi - lo) / static_cast<double>(steps - 1) : 0.0;
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double w1 = lo + step * static_cast<double>(i / steps);
        const double w2 = lo + step * static_cast<double>(i % steps);
        Matrix W(1, 2);
        W << w1, w2;
        grid[i] = {w1, w2, marginal_nll(GapModel(W, alpha, beta), V, budget, 1)};
    });
    return grid;
}

} // namespace gap
