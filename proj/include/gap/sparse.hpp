#pragma once

#include "gap/error.hpp"
#include "gap/special.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gap {

/// (row, column, value) triplet of a count matrix.
struct Triplet {
    std::size_t f = 0;
    std::size_t n = 0;
    Count v = 0;
};

/// Nonzero entry of one document (column): feature index and count.
struct DocEntry {
    std::size_t f = 0;
    Count v = 0;

    friend bool operator==(const DocEntry&, const DocEntry&) = default;
    friend auto operator<=>(const DocEntry&, const DocEntry&) = default;
};

/**
 * F x N matrix of non-negative counts, stored by document.
 *
 * Only positive entries are stored; entries of document n are contiguous
 * and sorted by feature index. A flat "cell" index over the stored entries
 * (document-major) is shared with ComponentTensor.
 */
class SparseCountMatrix {
  public:
    SparseCountMatrix() : offsets_(1, 0) {}

    SparseCountMatrix(std::size_t F, std::size_t N)
        : F_(F), N_(N), offsets_(N + 1, 0) {}

    /// Builds from triplets in any order. Zero-valued triplets are dropped;
    /// duplicates and out-of-range indices are rejected.
    static SparseCountMatrix from_triplets(std::size_t F, std::size_t N,
                                           std::vector<Triplet> triplets) {
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.n != b.n ? a.n < b.n : a.f < b.f;
        });
        SparseCountMatrix m(F, N);
        m.entries_.reserve(triplets.size());
        for (std::size_t i = 0; i < triplets.size(); ++i) {
            const auto& t = triplets[i];
            if (t.f >= F || t.n >= N) {
                throw ShapeError("triplet (" + std::to_string(t.f) + ", " + std::to_string(t.n) +
                                 ") outside " + std::to_string(F) + " x " + std::to_string(N));
            }
            if (i > 0 && triplets[i - 1].f == t.f && triplets[i - 1].n == t.n) {
                throw ParameterError("duplicate entry (" + std::to_string(t.f) + ", " +
                                     std::to_string(t.n) + ")");
            }
            if (t.v == 0) {
                continue;
            }
            m.entries_.push_back({t.f, t.v});
            ++m.offsets_[t.n + 1];
        }
        for (std::size_t n = 0; n < N; ++n) {
            m.offsets_[n + 1] += m.offsets_[n];
        }
        return m;
    }

    /// Builds from per-document entry lists (each sorted by feature, positive counts).
    static SparseCountMatrix from_documents(std::size_t F,
                                            const std::vector<std::vector<DocEntry>>& docs) {
        SparseCountMatrix m(F, docs.size());
        for (std::size_t n = 0; n < docs.size(); ++n) {
            for (const auto& e : docs[n]) {
                if (e.f >= F || e.v == 0) {
                    throw ShapeError("document entry out of range or zero");
                }
                m.entries_.push_back(e);
            }
            m.offsets_[n + 1] = m.entries_.size();
        }
        return m;
    }

    static SparseCountMatrix from_dense(const Eigen::MatrixXd& dense) {
        std::vector<Triplet> t;
        for (Eigen::Index n = 0; n < dense.cols(); ++n) {
            for (Eigen::Index f = 0; f < dense.rows(); ++f) {
                const double x = dense(f, n);
                if (x < 0.0 || x != std::floor(x)) {
                    throw ParameterError("dense counts must be non-negative integers");
                }
                if (x > 0.0) {
                    t.push_back({static_cast<std::size_t>(f), static_cast<std::size_t>(n),
                                 static_cast<Count>(x)});
                }
            }
        }
        return from_triplets(static_cast<std::size_t>(dense.rows()),
                             static_cast<std::size_t>(dense.cols()), std::move(t));
    }

    std::size_t rows() const noexcept { return F_; }
    std::size_t cols() const noexcept { return N_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    std::span<const DocEntry> doc(std::size_t n) const {
        return {entries_.data() + offsets_[n], offsets_[n + 1] - offsets_[n]};
    }
    /// Flat cell index of the first entry of document n.
    std::size_t doc_offset(std::size_t n) const { return offsets_[n]; }
    std::span<const DocEntry> entries() const noexcept { return entries_; }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (std::size_t n = 0; n < N_; ++n) {
            for (const auto& e : doc(n)) {
                t.push_back({e.f, n, e.v});
            }
        }
        return t;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(F_),
                                                  static_cast<Eigen::Index>(N_));
        for (std::size_t n = 0; n < N_; ++n) {
            for (const auto& e : doc(n)) {
                d(static_cast<Eigen::Index>(e.f), static_cast<Eigen::Index>(n)) = e.v;
            }
        }
        return d;
    }

    /// Per-feature empirical mean over documents (v-bar_f).
    Eigen::VectorXd row_means() const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(F_));
        for (const auto& e : entries_) {
            m(static_cast<Eigen::Index>(e.f)) += e.v;
        }
        if (N_ > 0) {
            m /= static_cast<double>(N_);
        }
        return m;
    }

    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (const auto& e : entries_) {
            s += e.v;
        }
        return s;
    }

    Count max_count() const {
        Count m = 0;
        for (const auto& e : entries_) {
            m = std::max(m, e.v);
        }
        return m;
    }

    friend bool operator==(const SparseCountMatrix&, const SparseCountMatrix&) = default;

  private:
    std::size_t F_ = 0;
    std::size_t N_ = 0;
    std::vector<DocEntry> entries_;
    std::vector<std::size_t> offsets_;
};

/**
 * Latent F x K x N component counts, stored only for the nonzero cells of
 * the count matrix it splits: cell i (flat index into SparseCountMatrix
 * entries) owns a length-K vector summing to that cell's count.
 */
class ComponentTensor {
  public:
    ComponentTensor() = default;
    ComponentTensor(std::size_t n_cells, std::size_t K) : K_(K), counts_(n_cells * K, 0) {}

    std::size_t components() const noexcept { return K_; }
    std::size_t cells() const noexcept { return K_ == 0 ? 0 : counts_.size() / K_; }

    std::span<Count> cell(std::size_t i) { return {counts_.data() + i * K_, K_}; }
    std::span<const Count> cell(std::size_t i) const { return {counts_.data() + i * K_, K_}; }

    /// True when every cell splits its count of v exactly.
    bool conserves(const SparseCountMatrix& v) const {
        if (cells() != v.nnz()) {
            return false;
        }
        const auto entries = v.entries();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            std::uint64_t s = 0;
            for (Count c : cell(i)) {
                s += c;
            }
            if (s != entries[i].v) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const ComponentTensor&, const ComponentTensor&) = default;

  private:
    std::size_t K_ = 0;
    std::vector<Count> counts_;
};

} // namespace gap
