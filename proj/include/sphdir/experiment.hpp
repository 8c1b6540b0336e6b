#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sphdir/core.hpp"

namespace sphdir {

enum class Preset { MleSpeed, Type1Power, RegressionFit, Discrim, MixtureRecovery };

std::string_view to_string(Preset preset);
Preset parse_preset(std::string_view text);

// One grid point. Fields that a preset does not use stay at zero.
struct GridCell {
    Eigen::Index n = 0;   // sample size (first sample for the LRT, per group for discrimination)
    Eigen::Index n2 = 0;  // second LRT sample
    int d = 0;
    double theta_deg = 0.0;
    int K = 0;
    Family data = Family::SC;
    Family model = Family::SC;

    std::string describe(Preset preset) const;
    // Stream key of the simulated data; cells differing only in the fitted model share data.
    std::uint64_t data_key(Preset preset) const;
};

// Axis values from which a preset grid is expanded.
struct GridAxes {
    std::vector<Eigen::Index> n;
    std::vector<Eigen::Index> n2;  // paired with n (type1-power)
    std::vector<int> d;
    std::vector<double> theta_deg;
    std::vector<int> K;
    std::vector<Family> data{Family::SC, Family::PKB};
    std::vector<Family> model{Family::SC, Family::PKB};
    // type1-power: d in {2,4,6,9} at theta = 0 and {3,5,7,10} otherwise
    bool shifted_power_dims = true;
};

struct ExperimentSpec {
    Preset preset = Preset::Type1Power;
    GridAxes axes;
    std::vector<GridCell> grid;  // expanded from axes by expand_grid
    int replicates = 0;
    std::uint64_t base_seed = 20240101;
    int mixture_starts = 3;
    double regression_scale = 1.2;  // sd of the simulated coefficient entries
    double alpha = 0.05;
    int timing_repetitions = 7;
};

// Full default grid and replicate count of a preset (mle-speed: 10 replicates).
ExperimentSpec preset_spec(Preset preset);
std::vector<GridCell> expand_grid(Preset preset, const GridAxes& axes);

// key=value lines ('#' comments). Keys: preset, replicates, seed, family, model, n, n2, d, theta, K,
// starts, scale, alpha. List-valued keys (comma-separated) filter the preset grid.
ExperimentSpec parse_experiment_config(std::istream& in);
// Applies one key=value setting to a spec.
void apply_experiment_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);

struct ReportRow {
    std::string cell;
    std::string statistic;
    double value = 0.0;
    double mc_stderr = 0.0;
    int replicates = 0;
    int failures = 0;
};

struct ReportTable {
    std::string title;
    std::vector<ReportRow> rows;
    std::vector<std::pair<std::string, std::string>> metadata;

    void write_text(std::ostream& out) const;
    void write_csv(std::ostream& out) const;
    // Throws std::out_of_range when absent.
    const ReportRow& find(const std::string& cell, const std::string& statistic) const;
};

ReportTable run_experiment(const ExperimentSpec& spec);

struct BenchResult {
    double nr_seconds = 0.0;      // median
    double hybrid_seconds = 0.0;  // median
    int repetitions = 0;
};

// Median wall time of NR and hybrid fits of one simulated sample (single thread, warm cache).
BenchResult bench_mle(Family family, Eigen::Index n, int d, double rho, int repetitions, std::uint64_t seed);

}  // namespace sphdir
