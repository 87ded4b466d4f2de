#pragma once

// Dataset ingestion (UCI bag-of-words docword format), synthetic datasets,
// model persistence and trace CSV output.

#include "gap/error.hpp"
#include "gap/inference.hpp"
#include "gap/model.hpp"
#include "gap/sparse.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gap {

struct DocwordHeader {
    std::size_t n_docs = 0;
    std::size_t n_vocab = 0;
    std::size_t nnz = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Splits on blanks and parses every token as a signed integer.
inline bool parse_ints(std::string_view line, std::vector<long long>& out) {
    out.clear();
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        if (i == line.size()) {
            break;
        }
        long long x = 0;
        const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), x);
        if (ec != std::errc() ||
            (ptr != line.data() + line.size() && *ptr != ' ' && *ptr != '\t' && *ptr != '\r')) {
            return false;
        }
        out.push_back(x);
        i = static_cast<std::size_t>(ptr - line.data());
    }
    return true;
}

} // namespace detail

/**
 * Reads a UCI docword file: three header lines D, W, NNZ followed by NNZ
 * lines "docID wordID count" with 1-based IDs. Returns the W x D count
 * matrix (features are words, columns are documents).
 */
inline SparseCountMatrix load_docword(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<long long> tok;

    std::array<long long, 3> header{};
    for (auto& h : header) {
        do {
            if (!std::getline(in, line)) {
                throw ParseError(line_no + 1, "unexpected end of input in docword header");
            }
            ++line_no;
        } while (detail::trim(line).empty());
        if (!detail::parse_ints(line, tok) || tok.size() != 1) {
            throw ParseError(line_no, "expected a single integer in docword header");
        }
        h = tok[0];
    }
    if (header[0] <= 0 || header[1] <= 0 || header[2] < 0) {
        throw ParseError(line_no, "docword header values must be positive");
    }
    const DocwordHeader hdr{static_cast<std::size_t>(header[0]),
                            static_cast<std::size_t>(header[1]),
                            static_cast<std::size_t>(header[2])};
    if (hdr.nnz > hdr.n_docs * hdr.n_vocab) {
        throw ParseError(line_no, "NNZ exceeds D x W");
    }

    std::vector<Triplet> triplets;
    triplets.reserve(hdr.nnz);
    while (triplets.size() < hdr.nnz && std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        if (!detail::parse_ints(line, tok) || tok.size() != 3) {
            throw ParseError(line_no, "expected 'docID wordID count'");
        }
        if (tok[2] <= 0) {
            throw ParameterError("line " + std::to_string(line_no) + ": count must be positive");
        }
        if (tok[0] < 1 || static_cast<std::size_t>(tok[0]) > hdr.n_docs || tok[1] < 1 ||
            static_cast<std::size_t>(tok[1]) > hdr.n_vocab) {
            throw ShapeError("line " + std::to_string(line_no) + ": ID out of range");
        }
        triplets.push_back({static_cast<std::size_t>(tok[1] - 1),
                            static_cast<std::size_t>(tok[0] - 1), static_cast<Count>(tok[2])});
    }
    if (triplets.size() != hdr.nnz) {
        throw ParseError(line_no + 1, "expected " + std::to_string(hdr.nnz) + " entries, found " +
                                          std::to_string(triplets.size()));
    }
    try {
        return SparseCountMatrix::from_triplets(hdr.n_vocab, hdr.n_docs, std::move(triplets));
    } catch (const ParameterError& e) {
        throw ParameterError(std::string("docword: ") + e.what());
    }
}

/// Writes V in docword format, entries ordered by document then word.
inline void save_docword(std::ostream& out, const SparseCountMatrix& V) {
    out << V.cols() << '\n' << V.rows() << '\n' << V.nnz() << '\n';
    for (std::size_t n = 0; n < V.cols(); ++n) {
        for (const auto& e : V.doc(n)) {
            out << (n + 1) << ' ' << (e.f + 1) << ' ' << e.v << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing docword output");
    }
}

// ---- model persistence ---------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const GapModel& model) {
    nlohmann::json j;
    j["format"] = "gap-model";
    j["version"] = kModelFormatVersion;
    j["F"] = model.features();
    j["K"] = model.components();
    j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
    j["beta"] = std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size());
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(model.W.size()));
    for (Eigen::Index f = 0; f < model.W.rows(); ++f) {
        for (Eigen::Index k = 0; k < model.W.cols(); ++k) {
            w.push_back(model.W(f, k));
        }
    }
    j["W"] = std::move(w);
    return j;
}

inline GapModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "gap-model") {
            throw FormatError("model: not a gap-model document");
        }
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("model: version mismatch (file " + std::to_string(version) +
                              ", supported " + std::to_string(kModelFormatVersion) + ")");
        }
        const auto F = j.at("F").get<std::size_t>();
        const auto K = j.at("K").get<std::size_t>();
        const auto alpha = j.at("alpha").get<std::vector<double>>();
        const auto beta = j.at("beta").get<std::vector<double>>();
        const auto w = j.at("W").get<std::vector<double>>();
        if (alpha.size() != K || beta.size() != K || w.size() != F * K) {
            throw FormatError("model: array lengths do not match F and K");
        }
        Matrix W(static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(K));
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t k = 0; k < K; ++k) {
                W(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = w[f * K + k];
            }
        }
        return GapModel(std::move(W), Eigen::Map<const Vector>(alpha.data(), alpha.size()),
                        Eigen::Map<const Vector>(beta.data(), beta.size()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: malformed payload: ") + e.what());
    }
}

inline void save_model(std::ostream& out, const GapModel& model) {
    out << model_to_json(model).dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing model output");
    }
}

inline GapModel load_model(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: malformed payload: ") + e.what());
    }
    return model_from_json(j);
}

// ---- trace CSV -----------------------------------------------------------

/// Shortest decimal string that reads back to exactly x.
inline std::string format_double(double x) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

/// Header `iter,cpu_seconds,norm_w_1,...,norm_w_K[,c_ml]` then one row per record.
/// A record without a C_ML value leaves that cell empty.
inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace,
                            std::size_t K, bool with_cml) {
    out << "iter,cpu_seconds";
    for (std::size_t k = 1; k <= K; ++k) {
        out << ",norm_w_" << k;
    }
    if (with_cml) {
        out << ",c_ml";
    }
    out << '\n';
    for (const auto& r : trace) {
        out << r.iter << ',' << format_double(r.cpu_seconds);
        for (double x : r.norms) {
            out << ',' << format_double(x);
        }
        if (with_cml) {
            out << ',';
            if (r.c_ml) {
                out << format_double(*r.c_ml);
            }
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("failed writing trace output");
    }
}

// ---- synthetic data --------------------------------------------------------

/// 4 x 2 ground-truth dictionary of the small synthetic study (Dirichlet(1) columns).
inline Matrix make_preset_w1() {
    Matrix W(4, 2);
    W << 0.638, 0.075,
         0.009, 0.568,
         0.044, 0.126,
         0.309, 0.231;
    return W;
}

/// 100 x make_preset_w1(): same patterns, a hundred times the expected counts.
inline Matrix make_preset_w2() { return 100.0 * make_preset_w1(); }

struct SyntheticSpec {
    Matrix w_true;
    Vector alpha;
    Vector beta;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

/// Draws V from the hierarchical model; deterministic in spec.seed.
inline SparseCountMatrix generate_dataset(const SyntheticSpec& spec, unsigned threads = 1) {
    Rng rng(spec.seed);
    return generate_hierarchical(GapModel(spec.w_true, spec.alpha, spec.beta), spec.n, rng, threads)
        .V;
}

} // namespace gap
