#include "gap/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace gap;

namespace {

SparseCountMatrix parse(const std::string& text) {
    std::istringstream in(text);
    return load_docword(in);
}

std::size_t parse_error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST(Docword, SmallExample) {
    const auto V = parse("2\n3\n3\n1 1 2\n1 3 1\n2 2 5\n");
    EXPECT_EQ(V.rows(), 3u);
    EXPECT_EQ(V.cols(), 2u);
    Matrix expected(3, 2);
    expected << 2, 0,
                0, 5,
                1, 0;
    EXPECT_EQ(V.to_dense(), expected);
}

TEST(Docword, EmptyBodyAndBlankLines) {
    const auto V = parse("4\n2\n0\n");
    EXPECT_EQ(V.cols(), 4u);
    EXPECT_EQ(V.nnz(), 0u);
    EXPECT_EQ(parse("\n1\n\n1\n1\n\n1 1 7\n").total(), 7u);
}

TEST(Docword, MalformedInputReportsLine) {
    EXPECT_EQ(parse_error_line("2\n3\n"), 3u);
    EXPECT_EQ(parse_error_line("2\nx\n1\n1 1 1\n"), 2u);
    EXPECT_EQ(parse_error_line("2\n3\n2\n1 1 1\n1 2\n"), 5u);
    EXPECT_EQ(parse_error_line("2\n3\n3\n1 1 1\n2 2 2\n"), 6u);
    EXPECT_EQ(parse_error_line("0\n3\n0\n"), 3u);
    EXPECT_EQ(parse_error_line("1\n1\n2\n"), 3u);
}

TEST(Docword, DomainErrors) {
    EXPECT_THROW(parse("1\n2\n1\n1 1 0\n"), ParameterError);
    EXPECT_THROW(parse("1\n2\n1\n1 3 1\n"), ShapeError);
    EXPECT_THROW(parse("1\n2\n1\n2 1 1\n"), ShapeError);
    EXPECT_THROW(parse("1\n2\n2\n1 1 1\n1 1 4\n"), ParameterError);
}

TEST(Docword, RoundTripProperty) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto F = 1 + rng() % 8;
        const auto N = 1 + rng() % 8;
        std::vector<Triplet> t;
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t n = 0; n < N; ++n) {
                if (rng() % 3 == 0) {
                    t.push_back({f, n, static_cast<Count>(1 + rng() % 100)});
                }
            }
        }
        const auto V = SparseCountMatrix::from_triplets(F, N, t);
        std::ostringstream out;
        save_docword(out, V);
        EXPECT_EQ(parse(out.str()), V);
    }
}

TEST(Docword, NipsCorpusIfPresent) {
    const char* path = std::getenv("GAP_NIPS_DOCWORD");
    if (path == nullptr) {
        GTEST_SKIP() << "set GAP_NIPS_DOCWORD to the UCI docword.nips.txt to run";
    }
    std::ifstream in(path);
    ASSERT_TRUE(in) << path;
    const auto V = load_docword(in);
    EXPECT_EQ(V.cols(), 1500u);
    EXPECT_EQ(V.rows(), 12419u);
    EXPECT_EQ(V.nnz(), 746316u);
}

TEST(ModelJson, RoundTrip) {
    Matrix W(2, 3);
    W << 0.1, 1.0 / 3.0, 2e-300,
         7.25, 0.0, 1e10;
    Vector alpha(3);
    alpha << 1.0, 0.5, 2.0;
    Vector beta(3);
    beta << 1.0 / 7.0, 3.0, 1.0;
    const GapModel m(W, alpha, beta);
    std::stringstream io;
    save_model(io, m);
    const auto back = load_model(io);
    EXPECT_EQ(back.W, m.W);
    EXPECT_EQ(back.alpha, m.alpha);
    EXPECT_EQ(back.beta, m.beta);
}

TEST(ModelJson, RejectsBadPayloads) {
    std::stringstream truncated;
    save_model(truncated, GapModel::with_scalar_hyper(Matrix::Ones(2, 2), 1.0, 1.0));
    const std::string full = truncated.str();
    std::istringstream cut(full.substr(0, full.size() / 2));
    EXPECT_THROW(load_model(cut), FormatError);

    auto j = model_to_json(GapModel::with_scalar_hyper(Matrix::Ones(2, 2), 1.0, 1.0));
    j["version"] = 2;
    EXPECT_THROW(model_from_json(j), FormatError);
    j["version"] = 1;
    j["K"] = 3;
    EXPECT_THROW(model_from_json(j), FormatError);
    j["K"] = 2;
    j["format"] = "other";
    EXPECT_THROW(model_from_json(j), FormatError);
    j["format"] = "gap-model";
    j.erase("W");
    EXPECT_THROW(model_from_json(j), FormatError);
}

TEST(TraceCsv, FormatAndEmptyCell) {
    std::vector<TraceRecord> trace(2);
    trace[0] = {0, 0.5, {1.0, 0.25}, 12.5};
    trace[1] = {3, 1.0, {0.1, 2.0}, std::nullopt};
    std::ostringstream out;
    write_trace_csv(out, trace, 2, true);
    EXPECT_EQ(out.str(), "iter,cpu_seconds,norm_w_1,norm_w_2,c_ml\n"
                         "0,0.5,1,0.25,12.5\n"
                         "3,1,0.1,2,\n");
    std::ostringstream plain;
    write_trace_csv(plain, trace, 2, false);
    EXPECT_EQ(plain.str().substr(0, plain.str().find('\n')), "iter,cpu_seconds,norm_w_1,norm_w_2");
}

TEST(FormatDouble, ShortestRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, 0.0}) {
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(SyntheticData, PresetDictionaries) {
    const Matrix W1 = make_preset_w1();
    ASSERT_EQ(W1.rows(), 4);
    ASSERT_EQ(W1.cols(), 2);
    EXPECT_NEAR(W1.col(0).sum(), 1.0, 1e-12);
    EXPECT_NEAR(W1.col(1).sum(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(W1(1, 1), 0.568);
    EXPECT_EQ(make_preset_w2(), 100.0 * W1);
}

TEST(SyntheticData, DeterministicAndCentred) {
    const SyntheticSpec spec{make_preset_w2(), Vector::Ones(2), Vector::Ones(2), 20'000, 42};
    const auto a = generate_dataset(spec);
    EXPECT_EQ(a, generate_dataset(spec, 4));
    const Vector expected = make_preset_w2().rowwise().sum();
    const Vector means = a.row_means();
    for (Eigen::Index f = 0; f < 4; ++f) {
        // sd of v_f is about sqrt(sum_k w_fk^2 + mean); 3 SE.
        const double sd = std::sqrt(make_preset_w2().row(f).squaredNorm() + expected(f));
        EXPECT_NEAR(means(f), expected(f), 3.0 * sd / std::sqrt(20'000.0));
    }
}
