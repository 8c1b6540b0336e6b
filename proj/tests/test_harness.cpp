#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sphdir/cli.hpp"
#include "sphdir/csv.hpp"
#include "sphdir/experiment.hpp"
#include "sphdir/sampling.hpp"

using namespace sphdir;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sphdir_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        const fs::path p = path / name;
        std::ofstream(p) << text;
        return p.string();
    }
};

struct CliRun {
    int code;
    std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "sphdir");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string sample_csv(Family f, int d, double rho, Eigen::Index n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    const DirectionalSample Y = sample(SphericalParams::from_direction(f, UnitVector::basis(d + 1, 0), rho), n, rng);
    std::vector<std::string> header;
    for (int j = 0; j <= d; ++j) header.push_back("y" + std::to_string(j + 1));
    std::ostringstream os;
    write_matrix_csv(os, header, Matrix(Y.rows()));
    return os.str();
}

void set_threads(const char* value) { ::setenv("SPHDIR_THREADS", value, 1); }

}  // namespace

TEST_CASE("CSV reader") {
    std::istringstream in("a,\"b\",c\n1,2,3\n\"4\",5.5,-6e-1\n");
    const CsvTable t = read_csv(in);
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.cells.size() == 2);
    const Matrix m = numeric_columns(t);
    CHECK(m(1, 0) == 4.0);
    CHECK(m(1, 2) == Approx(-0.6));
    CHECK(numeric_columns(t, std::string("b")).cols() == 2);
}

TEST_CASE("CSV errors") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), ParseError);
    std::istringstream ragged("a,b\n1,2\n3\n");
    CHECK_THROWS_AS(read_csv(ragged), ParseError);
    std::istringstream text("a,b\n1,x\n");
    CHECK_THROWS_AS(numeric_columns(read_csv(text)), ParseError);
    CHECK_THROWS_AS(read_csv_file("/nonexistent/file.csv"), ParseError);

    TempDir dir;
    const std::string zero = dir.write("zero.csv", "x,y\n0,0\n1,0\n");
    CHECK_THROWS_AS(load_directional_csv(zero, {true, std::nullopt}), GeometryError);
    const std::string off = dir.write("off.csv", "x,y\n3,4\n");
    CHECK_THROWS(load_directional_csv(off));
    CHECK(load_directional_csv(off, {true, std::nullopt}).rows()(0, 1) == Approx(0.8));
}

TEST_CASE("labeled CSV maps labels to 1..J") {
    TempDir dir;
    const std::string p = dir.write("lab.csv", "x,y,g\n1,0,10\n0,1,2\n-1,0,10\n0,-1,2\n");
    const LabeledCsv l = load_labeled_csv(p, {false, std::string("g")});
    CHECK(l.label_names == std::vector<std::string>{"2", "10"});
    CHECK(l.data.labels == std::vector<int>{2, 1, 2, 1});
    CHECK(l.data.Y.ambient() == 2);

    const std::string q = dir.write("names.csv", "x,y,g\n1,0,b\n0,1,a\n");
    CHECK(load_labeled_csv(q, {false, std::string("g")}).data.labels == std::vector<int>{2, 1});
    CHECK_THROWS_AS(load_labeled_csv(q, {false, std::string("missing")}), ParseError);
}

TEST_CASE("preset grids have the expected sizes") {
    CHECK(preset_spec(Preset::MleSpeed).grid.size() == 70);
    CHECK(preset_spec(Preset::Type1Power).grid.size() == 72);
    CHECK(preset_spec(Preset::RegressionFit).grid.size() == 48);
    CHECK(preset_spec(Preset::Discrim).grid.size() == 96);
    CHECK(preset_spec(Preset::MixtureRecovery).grid.size() == 128);
    for (Preset p : {Preset::MleSpeed, Preset::Type1Power, Preset::RegressionFit, Preset::Discrim,
                     Preset::MixtureRecovery})
        CHECK(parse_preset(to_string(p)) == p);
    CHECK_THROWS_AS(parse_preset("nope"), ParseError);
}

TEST_CASE("experiment config parsing") {
    std::istringstream in("# comment\nd = 2,5\nreplicates=12\npreset=regression-fit\nn=200  # trailing\nseed=7\n");
    const ExperimentSpec s = parse_experiment_config(in);
    CHECK(s.preset == Preset::RegressionFit);
    CHECK(s.replicates == 12);
    CHECK(s.base_seed == 7);
    CHECK(s.grid.size() == 2 * 1 * 2 * 2);
    for (const GridCell& c : s.grid) {
        CHECK(c.n == 200);
        CHECK((c.d == 2 || c.d == 5));
    }
    std::istringstream bad_key("preset=discrim\nfoo=1\n");
    CHECK_THROWS_AS(parse_experiment_config(bad_key), ParseError);
    std::istringstream no_preset("n=5\n");
    CHECK_THROWS_AS(parse_experiment_config(no_preset), ParseError);
    std::istringstream no_eq("preset=discrim\nn\n");
    CHECK_THROWS_AS(parse_experiment_config(no_eq), ParseError);
}

TEST_CASE("cells differing only in the model share data") {
    GridCell a{100, 0, 3, 0.0, 0, Family::PKB, Family::SC};
    GridCell b = a;
    b.model = Family::PKB;
    CHECK(a.data_key(Preset::RegressionFit) == b.data_key(Preset::RegressionFit));
    b.data = Family::SC;
    CHECK(a.data_key(Preset::RegressionFit) != b.data_key(Preset::RegressionFit));
}

TEST_CASE("experiments are reproducible across runs and thread counts") {
    ExperimentSpec s = preset_spec(Preset::Type1Power);
    apply_experiment_setting(s, "d", "2");
    apply_experiment_setting(s, "theta", "0,30");
    apply_experiment_setting(s, "n", "20");
    apply_experiment_setting(s, "n2", "30");
    apply_experiment_setting(s, "replicates", "20");
    set_threads("1");
    std::ostringstream a, b, c;
    run_experiment(s).write_csv(a);
    run_experiment(s).write_csv(b);
    set_threads("4");
    run_experiment(s).write_csv(c);
    ::unsetenv("SPHDIR_THREADS");
    CHECK(a.str() == b.str());
    CHECK(a.str() == c.str());

    const ReportTable t = run_experiment(s);
    CHECK(t.rows.size() == s.grid.size());
    for (const ReportRow& r : t.rows) {
        CHECK(r.value >= 0.0);
        CHECK(r.value <= 1.0);
        CHECK(r.replicates + r.failures == 20);
    }
    CHECK_THROWS_AS(t.find("no such cell", "rejection_rate"), std::out_of_range);
}

TEST_CASE("each preset runs on a tiny grid") {
    struct Case {
        Preset p;
        std::vector<std::pair<std::string, std::string>> settings;
    };
    const std::vector<Case> cases{
        {Preset::MleSpeed, {{"n", "200"}, {"d", "2"}, {"timing_repetitions", "1"}}},
        {Preset::RegressionFit, {{"n", "50"}, {"d", "2"}}},
        {Preset::Discrim, {{"n", "30"}, {"d", "2"}, {"theta", "30"}}},
        {Preset::MixtureRecovery, {{"n", "150"}, {"d", "2"}, {"K", "2"}, {"model", "sc"}, {"family", "sc"}}},
    };
    for (const Case& c : cases) {
        ExperimentSpec s = preset_spec(c.p);
        for (const auto& [k, v] : c.settings) apply_experiment_setting(s, k, v);
        apply_experiment_setting(s, "replicates", "3");
        const ReportTable t = run_experiment(s);
        CHECK(!t.rows.empty());
        std::ostringstream text;
        t.write_text(text);
        CHECK(!text.str().empty());
    }
}

TEST_CASE("CLI subcommands and exit codes") {
    TempDir dir;
    const std::string a = dir.write("a.csv", sample_csv(Family::SC, 2, 0.6, 200, 1));
    const std::string b = dir.write("b.csv", sample_csv(Family::SC, 2, 0.6, 150, 2));

    CliRun r = run_cli({"fit", "-i", a, "--algorithm", "hybrid"});
    CHECK(r.code == 0);
    CHECK(r.out.find("rho") != std::string::npos);

    r = run_cli({"lrt", "--sample1", a, "--sample2", b, "--bootstrap", "19", "--seed", "3"});
    CHECK(r.code == 0);

    const std::string sim = (dir.path / "sim.csv").string();
    r = run_cli({"simulate", "--family", "pkb", "--n", "50", "--d", "3", "--rho", "0.5", "-o", sim});
    CHECK(r.code == 0);
    CHECK(load_directional_csv(sim).n() == 50);

    std::ostringstream design;
    design << "x\n";
    for (int i = 0; i < 200; ++i) design << (i % 7) * 0.3 - 1.0 << '\n';
    const std::string x = dir.write("x.csv", design.str());
    const std::string pred = (dir.path / "pred.csv").string();
    r = run_cli({"regress", "-i", a, "-x", x, "-o", pred});
    CHECK(r.code == 0);
    CHECK(load_matrix_csv(pred).rows() == 200);

    std::ostringstream labeled;
    labeled << std::setprecision(17) << "y1,y2,y3,g\n";
    {
        const Matrix ya = load_matrix_csv(a);
        for (Eigen::Index i = 0; i < 100; ++i) labeled << ya(i, 0) << ',' << ya(i, 1) << ',' << ya(i, 2) << ",1\n";
        for (Eigen::Index i = 100; i < 200; ++i) labeled << -ya(i, 0) << ',' << ya(i, 1) << ',' << ya(i, 2) << ",2\n";
    }
    const std::string lab = dir.write("lab.csv", labeled.str());
    r = run_cli({"classify", "-i", lab, "--label-column", "g", "--folds", "5", "--repeats", "2"});
    CHECK(r.code == 0);
    r = run_cli({"cluster", "-i", lab, "--label-column", "g", "--kmax", "3", "--starts", "2"});
    CHECK(r.code == 0);
    CHECK(r.out.find("ARI") != std::string::npos);

    r = run_cli({"bench", "--n", "500", "--reps", "1"});
    CHECK(r.code == 0);

    r = run_cli({"experiment", "--preset", "type1-power", "--replicates", "2", "--csv",
                 "--config", dir.write("cfg.txt", "preset=type1-power\nd=2\nn=20\nn2=20\ntheta=0\n")});
    CHECK(r.code == 0);
    CHECK(r.out.find("rejection_rate") != std::string::npos);

    CHECK(run_cli({"fit", "--bogus"}).code == 1);
    CHECK(run_cli({"fit"}).code == 1);
    CHECK(run_cli({"fit", "-i", "/nonexistent.csv"}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"fit", "-i", a, "--algorithm", "nr", "--max-iter", "1", "--tol", "1e-300"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
}
