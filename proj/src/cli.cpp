#include "sphdir/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "sphdir/classify.hpp"
#include "sphdir/csv.hpp"
#include "sphdir/experiment.hpp"
#include "sphdir/inference.hpp"
#include "sphdir/mixtures.hpp"
#include "sphdir/regression.hpp"
#include "sphdir/sampling.hpp"

namespace sphdir {

namespace {

std::string join(const Vector& v) {
    std::ostringstream os;
    os << std::setprecision(10);
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os.str();
}

std::vector<std::string> coord_header(Eigen::Index D, const std::string& prefix = "y") {
    std::vector<std::string> h;
    for (Eigen::Index j = 0; j < D; ++j) h.push_back(prefix + std::to_string(j + 1));
    return h;
}

Vector parse_vector(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (...) {
            throw ParseError("invalid number '" + item + "' in vector");
        }
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void print_params(std::ostream& out, const SphericalParams& p) {
    out << "m: " << join(p.m().coords()) << '\n'
        << "rho: " << p.rho() << '\n'
        << "gamma: " << p.gamma() << '\n';
}

struct Options {
    std::string family = "sc";
    std::string input, input2, output, design, config, preset, assignments, criterion = "bic", algorithm = "auto";
    std::string label_column, direction;
    Eigen::Index n = 100;
    int d = 2;
    double rho = 0.5;
    double tol = 1e-6;
    int max_iter = 100;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    int bootstrap = 0;
    bool project = false;
    bool no_intercept = false;
    int folds = 10;
    int repeats = 1;
    int kmax = 10;
    int starts = 10;
    int replicates = 0;
    int reps = 7;
    bool csv = false;
};

CsvLoadOptions load_options(const Options& o) {
    CsvLoadOptions lo;
    lo.project_to_sphere = o.project;
    if (!o.label_column.empty()) lo.label_column = o.label_column;
    return lo;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const Family family = parse_family(o.family);
    RngStream rng(o.seed, o.stream);
    UnitVector m = UnitVector::basis(o.d + 1, 0);
    if (!o.direction.empty()) {
        const Vector v = parse_vector(o.direction);
        if (v.size() != o.d + 1) throw DimensionError("direction needs d + 1 coordinates");
        m = UnitVector::project(v);
    }
    const DirectionalSample Y = sample(SphericalParams::from_direction(family, m, o.rho), o.n, rng);
    if (o.output.empty()) write_matrix_csv(out, coord_header(Y.ambient()), Y.rows());
    else write_matrix_csv(o.output, coord_header(Y.ambient()), Y.rows());
    return 0;
}

int cmd_fit(const Options& o, std::ostream& out) {
    const Family family = parse_family(o.family);
    const DirectionalSample Y = load_directional_csv(o.input, load_options(o));
    const FitOptions fo{o.tol, o.max_iter};
    FitResult fit = o.algorithm == "nr"       ? fit_nr(Y, family, fo)
                    : o.algorithm == "hybrid" ? fit_hybrid(Y, family, fo)
                    : o.algorithm == "auto"   ? fit_mle(Y, family, fo)
                                              : throw ParseError("unknown algorithm '" + o.algorithm + "'");
    out << std::setprecision(10) << "family: " << to_string(family) << '\n' << "n: " << Y.n() << '\n'
        << "d: " << Y.dim() << '\n';
    print_params(out, fit.params);
    out << "mu: " << join(fit.params.mu()) << '\n'
        << "loglik: " << fit.loglik << '\n'
        << "algorithm: " << to_string(fit.algorithm) << '\n'
        << "iterations: " << fit.iterations << '\n'
        << "converged: " << (fit.converged ? "yes" : "no") << '\n';
    return fit.converged ? 0 : 2;
}

int cmd_lrt(const Options& o, std::ostream& out, std::ostream& err) {
    const Family family = parse_family(o.family);
    const DirectionalSample a = load_directional_csv(o.input, load_options(o));
    const DirectionalSample b = load_directional_csv(o.input2, load_options(o));
    TwoSampleTestResult t = lrt_two_sample(a, b, family);
    out << std::setprecision(10) << "family: " << to_string(family) << '\n'
        << "lambda: " << t.lambda << '\n'
        << "df: " << t.df << '\n'
        << "p_asymptotic: " << t.p_asymptotic << '\n';
    if (o.bootstrap > 0) {
        const BootstrapResult boot = lrt_bootstrap_pvalue(t, a.n(), b.n(), o.bootstrap, RngStream(o.seed, o.stream));
        out << "p_bootstrap: " << boot.p_value << '\n'
            << "bootstrap_replicates: " << boot.replicates << '\n'
            << "bootstrap_dropped: " << boot.dropped << '\n';
        if (boot.warning) err << "warning: more than 5% of bootstrap replicates failed\n";
    }
    out << "h0_m: " << join(t.h0.m.coords()) << '\n'
        << "h0_rho: " << t.h0.rho_first << ", " << t.h0.rho_second << '\n'
        << "h1_m1: " << join(t.h1_first.params.m().coords()) << '\n'
        << "h1_rho1: " << t.h1_first.params.rho() << '\n'
        << "h1_m2: " << join(t.h1_second.params.m().coords()) << '\n'
        << "h1_rho2: " << t.h1_second.params.rho() << '\n';
    return 0;
}

int cmd_regress(const Options& o, std::ostream& out) {
    const Family family = parse_family(o.family);
    const DirectionalSample Y = load_directional_csv(o.input, load_options(o));
    const Matrix covariates = load_matrix_csv(o.design);
    const DesignMatrix X = o.no_intercept ? DesignMatrix(covariates) : DesignMatrix::with_intercept(covariates);
    const RegressionModel model = fit_regression(Y, X, family, {o.tol, o.max_iter});
    const PredictedDirections pred = predict(model, X);
    out << std::setprecision(10) << "family: " << to_string(family) << '\n'
        << "n: " << Y.n() << '\n'
        << "p: " << X.p() << '\n'
        << "loglik: " << model.loglik << '\n'
        << "converged: " << (model.converged ? "yes" : "no") << '\n'
        << "simplex_fallback: " << (model.used_simplex ? "yes" : "no") << '\n'
        << "fit_metric: " << fit_metric(Y, pred) << '\n'
        << "coefficients (row j = covariate, column k = coordinate; se in brackets):\n";
    for (Eigen::Index j = 0; j < model.B.rows(); ++j) {
        out << "  ";
        for (Eigen::Index k = 0; k < model.B.cols(); ++k)
            out << (k ? "  " : "") << model.B(j, k) << " [" << model.se[k * model.B.rows() + j] << "]";
        out << '\n';
    }
    if (!o.output.empty()) {
        Matrix m(Y.n(), Y.ambient() + 1);
        m.leftCols(Y.ambient()) = pred.directions;
        m.col(Y.ambient()) = pred.gammas;
        auto header = coord_header(Y.ambient(), "m");
        header.push_back("gamma");
        write_matrix_csv(o.output, header, m);
    }
    return model.converged ? 0 : 2;
}

int cmd_classify(const Options& o, std::ostream& out) {
    const Family family = parse_family(o.family);
    if (o.label_column.empty()) throw ParseError("--label-column is required");
    const LabeledCsv data = load_labeled_csv(o.input, load_options(o));
    const CvSummary cv = cross_validate(data.data, family, o.folds, o.repeats, RngStream(o.seed, o.stream));
    out << std::setprecision(10) << "family: " << to_string(family) << '\n'
        << "n: " << data.data.Y.n() << '\n'
        << "groups: " << data.data.J << '\n'
        << "folds: " << o.folds << '\n'
        << "repeats: " << cv.accuracies.size() << '\n'
        << "mean_accuracy: " << cv.mean << '\n'
        << "median_accuracy: " << cv.median << '\n'
        << "skipped_folds: " << cv.skipped_folds << '\n';
    const Classifier clf = train(data.data, family);
    for (int j = 0; j < data.data.J; ++j) {
        out << "group " << data.label_names[static_cast<std::size_t>(j)] << ":\n";
        out << "  m: " << join(clf.groups[static_cast<std::size_t>(j)].m().coords()) << '\n'
            << "  rho: " << clf.groups[static_cast<std::size_t>(j)].rho() << '\n';
    }
    return 0;
}

int cmd_cluster(const Options& o, std::ostream& out) {
    const Family family = parse_family(o.family);
    std::optional<std::vector<int>> truth;
    DirectionalSample Y = [&] {
        if (o.label_column.empty()) return load_directional_csv(o.input, load_options(o));
        LabeledCsv l = load_labeled_csv(o.input, load_options(o));
        truth = l.data.labels;
        return l.data.Y;
    }();
    if (o.criterion != "bic" && o.criterion != "icl") throw ParseError("criterion must be bic or icl");
    EmOptions eo;
    eo.n_starts = o.starts;
    eo.tol = o.tol;
    const SelectionResult sel = select_k(Y, family, o.kmax, eo, RngStream(o.seed, o.stream));
    out << std::setprecision(10) << "family: " << to_string(family) << '\n';
    out << std::setw(4) << "K" << std::setw(18) << "loglik" << std::setw(18) << "BIC" << std::setw(18) << "ICL";
    if (truth) out << std::setw(10) << "ARI";
    out << '\n';
    for (const auto& row : sel.rows) {
        out << std::setw(4) << row.K;
        if (!row.ok) {
            out << "  failed: " << row.message << '\n';
            continue;
        }
        out << std::fixed << std::setprecision(3) << std::setw(18) << row.loglik << std::setw(18) << row.bic
            << std::setw(18) << row.icl;
        if (truth) out << std::setw(10) << adjusted_rand_index(map_assignments(sel.model(row.K).W), *truth);
        out << '\n';
        out.unsetf(std::ios::fixed);
    }
    const int chosen = o.criterion == "bic" ? sel.best_bic : sel.best_icl;
    out << std::setprecision(10) << "best_bic: " << sel.best_bic << '\n'
        << "best_icl: " << sel.best_icl << '\n'
        << "chosen (" << o.criterion << "): " << chosen << '\n';
    const MixtureModel& model = sel.model(chosen);
    for (int j = 0; j < model.K; ++j) {
        out << "component " << j + 1 << ": p = " << model.p[j] << ", rho = " << model.components[static_cast<std::size_t>(j)].rho()
            << ", m = " << join(model.components[static_cast<std::size_t>(j)].m().coords()) << '\n';
    }
    if (!o.assignments.empty()) {
        const auto a = map_assignments(model.W);
        Matrix m(static_cast<Eigen::Index>(a.size()), 1);
        for (std::size_t i = 0; i < a.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = a[i];
        write_matrix_csv(o.assignments, {"cluster"}, m);
    }
    return 0;
}

int cmd_experiment(const Options& o, std::ostream& out, std::ostream& err) {
    ExperimentSpec spec;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ParseError("cannot open '" + o.config + "'");
        spec = parse_experiment_config(in);
    } else if (!o.preset.empty()) {
        spec = preset_spec(parse_preset(o.preset));
    } else {
        throw ParseError("experiment needs --preset or --config");
    }
    if (o.replicates > 0) spec.replicates = o.replicates;
    if (o.seed != 1) spec.base_seed = o.seed;
    const auto start = std::chrono::steady_clock::now();
    const ReportTable table = run_experiment(spec);
    err << "wall time: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";
    if (o.csv) table.write_csv(out);
    else table.write_text(out);
    if (!o.output.empty()) {
        std::ofstream f(o.output);
        if (!f) throw ParseError("cannot write '" + o.output + "'");
        table.write_csv(f);
    }
    return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
    const Family family = parse_family(o.family);
    const BenchResult b = bench_mle(family, o.n, o.d, o.rho, o.reps, o.seed);
    out << std::setprecision(6) << "family: " << to_string(family) << '\n'
        << "n: " << o.n << '\n'
        << "d: " << o.d << '\n'
        << "repetitions: " << b.repetitions << '\n'
        << "nr_median_s: " << b.nr_seconds << '\n'
        << "hybrid_median_s: " << b.hybrid_seconds << '\n'
        << "hybrid_over_nr: " << b.hybrid_seconds / b.nr_seconds << '\n';
    return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spherical Cauchy and Poisson-kernel-based distributions on the sphere", "sphdir"};
    app.require_subcommand(1, 1);
    Options o;

    auto family = [&](CLI::App* c) {
        c->add_option("--family", o.family, "sc or pkb")->check(CLI::IsMember({"sc", "pkb", "SC", "PKB"}));
    };
    auto seed = [&](CLI::App* c) {
        c->add_option("--seed", o.seed, "RNG seed");
        c->add_option("--stream", o.stream, "RNG stream index");
    };

    auto* sim = app.add_subcommand("simulate", "Draw a sample and write it as CSV");
    family(sim);
    seed(sim);
    sim->add_option("--n", o.n, "sample size")->check(CLI::PositiveNumber);
    sim->add_option("--d", o.d, "sphere dimension (ambient d + 1)")->check(CLI::PositiveNumber);
    sim->add_option("--rho", o.rho, "concentration in [0, 1)")->check(CLI::Range(0.0, 0.999999999));
    sim->add_option("--direction", o.direction, "location, comma-separated (default e1)");
    sim->add_option("--output,-o", o.output, "output CSV (default stdout)");

    auto* fit = app.add_subcommand("fit", "Maximum likelihood fit of one sample");
    family(fit);
    fit->add_option("--input,-i", o.input, "CSV of unit vectors")->required();
    fit->add_option("--algorithm", o.algorithm, "nr, hybrid or auto")->check(CLI::IsMember({"nr", "hybrid", "auto"}));
    fit->add_flag("--project", o.project, "normalize rows onto the sphere");
    fit->add_option("--tol", o.tol);
    fit->add_option("--max-iter", o.max_iter);

    auto* lrt = app.add_subcommand("lrt", "Likelihood-ratio test of equal locations");
    family(lrt);
    seed(lrt);
    lrt->add_option("--sample1", o.input, "first sample CSV")->required();
    lrt->add_option("--sample2", o.input2, "second sample CSV")->required();
    lrt->add_option("--bootstrap", o.bootstrap, "parametric bootstrap replicates (0 = none)");
    lrt->add_flag("--project", o.project);

    auto* reg = app.add_subcommand("regress", "Spherical regression");
    family(reg);
    reg->add_option("--response,-i", o.input, "CSV of unit response vectors")->required();
    reg->add_option("--design,-x", o.design, "CSV of covariates")->required();
    reg->add_flag("--no-intercept", o.no_intercept, "do not prepend a column of ones");
    reg->add_flag("--project", o.project);
    reg->add_option("--predictions,-o", o.output, "write fitted directions and gammas to CSV");
    reg->add_option("--tol", o.tol);
    reg->add_option("--max-iter", o.max_iter);

    auto* cls = app.add_subcommand("classify", "Discriminant analysis with cross-validation");
    family(cls);
    seed(cls);
    cls->add_option("--input,-i", o.input)->required();
    cls->add_option("--label-column", o.label_column)->required();
    cls->add_option("--folds", o.folds)->check(CLI::Range(2, 1000000));
    cls->add_option("--repeats", o.repeats)->check(CLI::PositiveNumber);
    cls->add_flag("--project", o.project);

    auto* clu = app.add_subcommand("cluster", "Mixture-model clustering with BIC/ICL selection");
    family(clu);
    seed(clu);
    clu->add_option("--input,-i", o.input)->required();
    clu->add_option("--label-column", o.label_column, "ground-truth column, excluded from the data; enables ARI");
    clu->add_option("--kmax", o.kmax)->check(CLI::PositiveNumber);
    clu->add_option("--criterion", o.criterion)->check(CLI::IsMember({"bic", "icl"}));
    clu->add_option("--starts", o.starts)->check(CLI::PositiveNumber);
    clu->add_option("--assignments", o.assignments, "write MAP assignments of the chosen model to CSV");
    clu->add_flag("--project", o.project);

    auto* exp = app.add_subcommand("experiment", "Run a simulation preset");
    exp->add_option("--preset", o.preset, "mle-speed, type1-power, regression-fit, discrim, mixture-recovery");
    exp->add_option("--config", o.config, "key=value configuration file");
    exp->add_option("--replicates", o.replicates)->check(CLI::PositiveNumber);
    exp->add_option("--seed", o.seed, "base seed");
    exp->add_flag("--csv", o.csv, "print CSV instead of the text table");
    exp->add_option("--output,-o", o.output, "also write the CSV report to a file");

    auto* bench = app.add_subcommand("bench", "Time NR and hybrid fits (median of repetitions)");
    family(bench);
    bench->add_option("--n", o.n)->check(CLI::PositiveNumber);
    bench->add_option("--d", o.d)->check(CLI::PositiveNumber);
    bench->add_option("--rho", o.rho)->check(CLI::Range(0.0, 0.999999999));
    bench->add_option("--reps", o.reps)->check(CLI::PositiveNumber);
    bench->add_option("--seed", o.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    for (auto& c : o.family) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    try {
        if (sim->parsed()) return cmd_simulate(o, out);
        if (fit->parsed()) return cmd_fit(o, out);
        if (lrt->parsed()) return cmd_lrt(o, out, err);
        if (reg->parsed()) return cmd_regress(o, out);
        if (cls->parsed()) return cmd_classify(o, out);
        if (clu->parsed()) return cmd_cluster(o, out);
        if (exp->parsed()) return cmd_experiment(o, out, err);
        if (bench->parsed()) return cmd_bench(o, out);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace sphdir
