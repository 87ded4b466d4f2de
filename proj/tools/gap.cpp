// gap: command-line harness for the Gamma-Poisson factorization library.
//
//   gap generate  --preset w1 --n 100 --seed 0 --out v1.docword
//   gap fit       --data v1.docword --k 3 --algorithm c --seed 0 --out-model m.json --out-trace t.csv
//   gap eval-ml   --data v1.docword --model m.json --decompose
//   gap ml-grid   --data f1.docword --min 0 --max 4 --steps 41 --out grid.csv
//
// Exit codes: 0 success, 2 usage, 3 I/O or malformed input file,
// 4 domain error, 5 enumeration budget exceeded.

#include "gap/gap.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kDomain = 4, kBudget = 5 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw gap::IoError("cannot open '" + path + "' for writing");
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw gap::IoError("cannot open '" + path + "' for reading");
    }
    return in;
}

gap::SparseCountMatrix read_data(const std::string& path) {
    auto in = open_in(path);
    return gap::load_docword(in);
}

void write_manifest(const std::string& path, const std::string& subcommand,
                    nlohmann::json params, const std::vector<std::string>& argv) {
    nlohmann::json m;
    m["subcommand"] = subcommand;
    m["library_version"] = gap::kVersion;
    m["parameters"] = std::move(params);
    m["argv"] = argv;
    auto out = open_out(path);
    out << m.dump(2) << '\n';
}

gap::BigInt parse_budget(const std::string& s) {
    try {
        gap::BigInt b(s);
        if (b < 0) {
            throw UsageError("budget must be non-negative");
        }
        return b;
    } catch (const std::runtime_error&) {
        throw UsageError("invalid budget '" + s + "'");
    }
}

unsigned resolve_threads(unsigned threads) { return threads == 0 ? gap::default_threads() : threads; }

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string preset;
    std::string w_file;
    std::size_t n = 0;
    double alpha = 1.0;
    double beta = 1.0;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 0;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv) {
    if (a.preset.empty() == a.w_file.empty()) {
        throw UsageError("exactly one of --preset and --w is required");
    }
    gap::Matrix W;
    if (!a.preset.empty()) {
        W = a.preset == "w1" ? gap::make_preset_w1() : gap::make_preset_w2();
    } else {
        auto in = open_in(a.w_file);
        W = gap::load_model(in).W;
    }
    const auto K = W.cols();
    gap::SyntheticSpec spec{W, gap::Vector::Constant(K, a.alpha), gap::Vector::Constant(K, a.beta),
                            a.n, a.seed};
    const unsigned threads = resolve_threads(a.threads);
    const auto V = gap::generate_dataset(spec, threads);
    {
        auto out = open_out(a.out);
        gap::save_docword(out, V);
    }
    write_manifest(a.out + ".manifest.json", "generate",
                   {{"preset", a.preset},
                    {"w_file", a.w_file},
                    {"W", gap::model_to_json(gap::GapModel(W, spec.alpha, spec.beta))["W"]},
                    {"F", W.rows()},
                    {"K", K},
                    {"n", a.n},
                    {"alpha", a.alpha},
                    {"beta", a.beta},
                    {"seed", a.seed},
                    {"threads", threads},
                    {"out", a.out}},
                   argv);
    std::cout << "wrote " << V.rows() << " x " << V.cols() << " dataset (" << V.nnz()
              << " nonzeros) to " << a.out << '\n';
    return kOk;
}

// ---- fit ----------------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::size_t k = 0;
    std::string algorithm = "c";
    int iters = 500;
    int gibbs = 300;
    int burn_in = -1;
    double alpha = 1.0;
    double beta = 1.0;
    std::uint64_t seed = 0;
    int trace_every = 1;
    std::string eval_ml_budget = gap::kDefaultBudget.str();
    double w_floor = 0.0;
    std::string out_model;
    std::string out_trace;
    unsigned threads = 0;
};

int cmd_fit(const FitArgs& a, const std::vector<std::string>& argv) {
    const auto V = read_data(a.data);
    gap::McemConfig config;
    config.n_iters = a.iters;
    config.n_gibbs = a.gibbs;
    config.burn_in = a.burn_in >= 0 ? a.burn_in : a.gibbs / 2;
    config.algorithm = gap::parse_algorithm(a.algorithm);
    config.seed = a.seed;
    config.w_floor = a.w_floor;
    config.trace_every = a.trace_every;
    config.ml_budget = parse_budget(a.eval_ml_budget);
    config.threads = resolve_threads(a.threads);
    if (config.burn_in >= config.n_gibbs) {
        throw UsageError("--burn-in must be smaller than --gibbs");
    }
    const gap::Vector alpha = gap::Vector::Constant(static_cast<Eigen::Index>(a.k), a.alpha);
    const gap::Vector beta = gap::Vector::Constant(static_cast<Eigen::Index>(a.k), a.beta);

    const auto result = gap::run_mcem(V, a.k, alpha, beta, config);
    {
        auto out = open_out(a.out_model);
        gap::save_model(out, result.model);
    }
    if (!a.out_trace.empty()) {
        auto out = open_out(a.out_trace);
        gap::write_trace_csv(out, result.trace, a.k, config.ml_budget > 0);
    }
    write_manifest(a.out_model + ".manifest.json", "fit",
                   {{"data", a.data},
                    {"K", a.k},
                    {"algorithm", a.algorithm},
                    {"iters", config.n_iters},
                    {"gibbs", config.n_gibbs},
                    {"burn_in", config.burn_in},
                    {"alpha", a.alpha},
                    {"beta", a.beta},
                    {"seed", a.seed},
                    {"trace_every", config.trace_every},
                    {"eval_ml_budget", config.ml_budget.str()},
                    {"w_floor", config.w_floor},
                    {"threads", config.threads},
                    {"out_model", a.out_model},
                    {"out_trace", a.out_trace}},
                   argv);
    std::cout << "final column norms:";
    for (double x : result.trace.back().norms) {
        std::cout << ' ' << gap::format_double(x);
    }
    std::cout << '\n';
    return kOk;
}

// ---- eval-ml ------------------------------------------------------------------

struct EvalArgs {
    std::string data;
    std::string model;
    std::string budget = gap::kDefaultBudget.str();
    bool decompose = false;
    std::string out = "eval_ml.json";
    unsigned threads = 0;
};

int cmd_eval_ml(const EvalArgs& a, const std::vector<std::string>& argv) {
    const auto V = read_data(a.data);
    gap::GapModel model;
    {
        auto in = open_in(a.model);
        model = gap::load_model(in);
    }
    const auto budget = parse_budget(a.budget);
    const unsigned threads = resolve_threads(a.threads);
    nlohmann::json params = {{"data", a.data},   {"model", a.model},         {"budget", budget.str()},
                             {"decompose", a.decompose}, {"threads", threads}, {"out", a.out}};
    nlohmann::json record;
    record["cardinality"] = gap::admissible_cardinality(V, model.components()).str();
    record["terms"] = gap::enumeration_terms(V, model.components()).str();
    try {
        const double c_ml = gap::marginal_nll(model, V, budget, threads);
        record["c_ml"] = c_ml;
        std::cout << gap::format_double(c_ml) << '\n';
        if (a.decompose) {
            const auto d = gap::marginal_nll_decomposed(model, V, budget, threads);
            record["interaction"] = d.interaction;
            record["regularizer"] = d.regularizer;
            record["constant"] = d.constant;
            std::cout << "interaction " << gap::format_double(d.interaction) << '\n'
                      << "regularizer " << gap::format_double(d.regularizer) << '\n'
                      << "constant " << gap::format_double(d.constant) << '\n';
        }
    } catch (const gap::BudgetError& e) {
        record["error"] = e.what();
        auto out = open_out(a.out);
        out << record.dump(2) << '\n';
        write_manifest(a.out + ".manifest.json", "eval-ml", params, argv);
        throw;
    }
    auto out = open_out(a.out);
    out << record.dump(2) << '\n';
    write_manifest(a.out + ".manifest.json", "eval-ml", params, argv);
    return kOk;
}

// ---- ml-grid ------------------------------------------------------------------

struct GridArgs {
    std::string data;
    double alpha = 1.0;
    double beta = 1.0;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t steps = 21;
    std::string budget = gap::kDefaultBudget.str();
    std::string out;
    unsigned threads = 0;
};

int cmd_ml_grid(const GridArgs& a, const std::vector<std::string>& argv) {
    const auto V = read_data(a.data);
    if (V.rows() != 1) {
        throw UsageError("ml-grid supports single-feature data only (F = 1, K = 2), got F = " +
                         std::to_string(V.rows()));
    }
    const unsigned threads = resolve_threads(a.threads);
    const auto grid = gap::marginal_nll_grid(V, gap::Vector::Constant(2, a.alpha),
                                             gap::Vector::Constant(2, a.beta), a.lo, a.hi, a.steps,
                                             parse_budget(a.budget), threads);
    {
        auto out = open_out(a.out);
        out << "w1,w2,c_ml\n";
        for (const auto& g : grid) {
            out << gap::format_double(g.w1) << ',' << gap::format_double(g.w2) << ','
                << gap::format_double(g.c_ml) << '\n';
        }
    }
    write_manifest(a.out + ".manifest.json", "ml-grid",
                   {{"data", a.data},
                    {"alpha", a.alpha},
                    {"beta", a.beta},
                    {"min", a.lo},
                    {"max", a.hi},
                    {"steps", a.steps},
                    {"budget", a.budget},
                    {"threads", threads},
                    {"out", a.out}},
                   argv);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"Gamma-Poisson matrix factorization: data generation, MCEM fitting and "
                 "closed-form marginal likelihood"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gap::kVersion);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Draw a synthetic count matrix from the model");
    auto* preset = generate->add_option("--preset", gen.preset, "Built-in dictionary")
                       ->check(CLI::IsMember({"w1", "w2"}));
    generate->add_option("--w", gen.w_file, "Model file supplying W")
        ->check(CLI::ExistingFile)
        ->excludes(preset);
    generate->add_option("--n", gen.n, "Number of documents")->required()->check(CLI::PositiveNumber);
    generate->add_option("--alpha", gen.alpha, "Gamma shape for every component")
        ->check(CLI::PositiveNumber);
    generate->add_option("--beta", gen.beta, "Gamma rate for every component")
        ->check(CLI::PositiveNumber);
    generate->add_option("--seed", gen.seed, "Random seed")->required();
    generate->add_option("--out", gen.out, "Output docword file")->required();
    generate->add_option("--threads", gen.threads, "Worker threads (0 = all cores)");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate W by Monte Carlo EM");
    fit_cmd->add_option("--data", fit.data, "Input docword file")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--k", fit.k, "Number of components")->required()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--algorithm", fit.algorithm, "M-step: c, h or ch")
        ->check(CLI::IsMember({"c", "h", "ch"}));
    fit_cmd->add_option("--iters", fit.iters, "EM iterations")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--gibbs", fit.gibbs, "Gibbs sweeps per E-step")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--burn-in", fit.burn_in, "Discarded sweeps (default: half of --gibbs)")
        ->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--alpha", fit.alpha, "Gamma shape")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--beta", fit.beta, "Gamma rate")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--seed", fit.seed, "Random seed")->required();
    fit_cmd->add_option("--trace-every", fit.trace_every, "Trace period")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--eval-ml-budget", fit.eval_ml_budget,
                        "Term budget for per-iteration C_ML (0 disables)");
    fit_cmd->add_option("--w-floor", fit.w_floor, "Lower clamp for MCEM-H")
        ->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--out-model", fit.out_model, "Output model file")->required();
    fit_cmd->add_option("--out-trace", fit.out_trace, "Output trace CSV");
    fit_cmd->add_option("--threads", fit.threads, "Worker threads (0 = all cores)");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval-ml", "Closed-form marginal negative log-likelihood");
    eval->add_option("--data", ev.data, "Input docword file")->required()->check(CLI::ExistingFile);
    eval->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
    eval->add_option("--budget", ev.budget, "Maximum number of enumerated terms");
    eval->add_flag("--decompose", ev.decompose, "Also print interaction/regularizer/constant");
    eval->add_option("--out", ev.out, "JSON record path");
    eval->add_option("--threads", ev.threads, "Worker threads (0 = all cores)");

    GridArgs gr;
    auto* grid = app.add_subcommand("ml-grid", "C_ML over a (w1, w2) grid for F = 1, K = 2");
    grid->add_option("--data", gr.data, "Input docword file (one feature)")
        ->required()
        ->check(CLI::ExistingFile);
    grid->add_option("--alpha", gr.alpha, "Gamma shape")->check(CLI::PositiveNumber);
    grid->add_option("--beta", gr.beta, "Gamma rate")->check(CLI::PositiveNumber);
    grid->add_option("--min", gr.lo, "Smallest grid value")->check(CLI::NonNegativeNumber);
    grid->add_option("--max", gr.hi, "Largest grid value")->check(CLI::NonNegativeNumber);
    grid->add_option("--steps", gr.steps, "Grid points per axis")->check(CLI::PositiveNumber);
    grid->add_option("--budget", gr.budget, "Maximum number of enumerated terms per point");
    grid->add_option("--out", gr.out, "Output CSV")->required();
    grid->add_option("--threads", gr.threads, "Worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(gen, args);
        }
        if (fit_cmd->parsed()) {
            return cmd_fit(fit, args);
        }
        if (eval->parsed()) {
            return cmd_eval_ml(ev, args);
        }
        if (grid->parsed()) {
            return cmd_ml_grid(gr, args);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const gap::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << '\n';
        return kBudget;
    } catch (const gap::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const gap::ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kIo;
    } catch (const gap::FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kIo;
    } catch (const gap::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    }
    return kUsage;
}
