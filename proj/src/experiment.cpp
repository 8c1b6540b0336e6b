#include "sphdir/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sphdir/classify.hpp"
#include "sphdir/inference.hpp"
#include "sphdir/mixtures.hpp"
#include "sphdir/parallel.hpp"
#include "sphdir/regression.hpp"
#include "sphdir/sampling.hpp"

namespace sphdir {

std::string_view to_string(Preset preset) {
    switch (preset) {
        case Preset::MleSpeed: return "mle-speed";
        case Preset::Type1Power: return "type1-power";
        case Preset::RegressionFit: return "regression-fit";
        case Preset::Discrim: return "discrim";
        case Preset::MixtureRecovery: return "mixture-recovery";
    }
    return "?";
}

Preset parse_preset(std::string_view text) {
    for (Preset p : {Preset::MleSpeed, Preset::Type1Power, Preset::RegressionFit, Preset::Discrim,
                     Preset::MixtureRecovery})
        if (to_string(p) == text) return p;
    throw ParseError("unknown preset '" + std::string(text) + "'");
}

std::string GridCell::describe(Preset preset) const {
    std::ostringstream os;
    switch (preset) {
        case Preset::MleSpeed: os << "n=" << n << " d=" << d << " data=" << to_string(data); break;
        case Preset::Type1Power:
            os << "theta=" << theta_deg << " n=(" << n << "," << n2 << ") d=" << d << " data=" << to_string(data)
               << " model=" << to_string(model);
            break;
        case Preset::RegressionFit:
            os << "n=" << n << " d=" << d << " data=" << to_string(data) << " model=" << to_string(model);
            break;
        case Preset::Discrim:
            os << "theta=" << theta_deg << " n=" << n << " d=" << d << " data=" << to_string(data)
               << " model=" << to_string(model);
            break;
        case Preset::MixtureRecovery:
            os << "n=" << n << " K=" << K << " d=" << d << " data=" << to_string(data) << " model=" << to_string(model);
            break;
    }
    return os.str();
}

std::uint64_t GridCell::data_key(Preset preset) const {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(preset) + 1);
    h = hash_combine(h, static_cast<std::uint64_t>(n));
    h = hash_combine(h, static_cast<std::uint64_t>(n2));
    h = hash_combine(h, static_cast<std::uint64_t>(d));
    h = hash_combine(h, static_cast<std::uint64_t>(std::llround(theta_deg * 1000.0)));
    h = hash_combine(h, static_cast<std::uint64_t>(K));
    return hash_combine(h, static_cast<std::uint64_t>(data));
}

std::vector<GridCell> expand_grid(Preset preset, const GridAxes& axes) {
    std::vector<GridCell> grid;
    switch (preset) {
        case Preset::MleSpeed:
            for (Family data : axes.data)
                for (int d : axes.d)
                    for (Eigen::Index n : axes.n) grid.push_back({n, 0, d, 0.0, 0, data, data});
            break;
        case Preset::Type1Power:
        {
            // a single-element n or n2 list is paired with every entry of the other
            const std::size_t pairs = std::max(axes.n.size(), axes.n2.size());
            if (axes.n.empty() || axes.n2.empty() || (axes.n.size() != pairs && axes.n.size() != 1) ||
                (axes.n2.size() != pairs && axes.n2.size() != 1))
                throw ParseError("n and n2 lists must have equal length (or one of them a single value)");
            for (Family data : axes.data)
                for (Family model : axes.model)
                    for (double theta : axes.theta_deg)
                        for (std::size_t i = 0; i < pairs; ++i)
                            for (int d : axes.d) {
                                const int dim = axes.shifted_power_dims && theta != 0.0 ? d + 1 : d;
                                grid.push_back({axes.n[axes.n.size() == 1 ? 0 : i], axes.n2[axes.n2.size() == 1 ? 0 : i],
                                                dim, theta, 0, data, model});
                            }
            break;
        }
        case Preset::RegressionFit:
            for (Family data : axes.data)
                for (Eigen::Index n : axes.n)
                    for (Family model : axes.model)
                        for (int d : axes.d) grid.push_back({n, 0, d, 0.0, 0, data, model});
            break;
        case Preset::Discrim:
            for (Family data : axes.data)
                for (double theta : axes.theta_deg)
                    for (Eigen::Index n : axes.n)
                        for (Family model : axes.model)
                            for (int d : axes.d) grid.push_back({n, 0, d, theta, 0, data, model});
            break;
        case Preset::MixtureRecovery:
            for (Family data : axes.data)
                for (Eigen::Index n : axes.n)
                    for (int K : axes.K)
                        for (int d : axes.d)
                            for (Family model : axes.model) grid.push_back({n, 0, d, 0.0, K, data, model});
            break;
    }
    return grid;
}

ExperimentSpec preset_spec(Preset preset) {
    ExperimentSpec spec;
    spec.preset = preset;
    GridAxes& a = spec.axes;
    switch (preset) {
        case Preset::MleSpeed:
            a.n = {100, 500, 1000, 2000, 5000, 10000, 20000};
            a.d = {2, 4, 6, 9, 19};
            spec.replicates = 10;
            break;
        case Preset::Type1Power:
            a.n = {50, 70, 100};
            a.n2 = {30, 50, 70};
            a.d = {2, 4, 6, 9};
            a.theta_deg = {0.0, 15.0, 30.0};
            a.model = {Family::SC};
            spec.replicates = 1000;
            break;
        case Preset::RegressionFit:
            a.n = {50, 100, 200};
            a.d = {2, 4, 6, 9};
            spec.replicates = 1000;
            break;
        case Preset::Discrim:
            a.n = {50, 100, 200};
            a.d = {2, 4, 6, 9};
            a.theta_deg = {15.0, 30.0};
            spec.replicates = 1000;
            break;
        case Preset::MixtureRecovery:
            a.n = {500, 1000};
            a.K = {2, 3, 4, 5};
            a.d = {2, 4, 6, 9};
            spec.replicates = 200;
            break;
    }
    spec.grid = expand_grid(preset, spec.axes);
    return spec;
}

namespace {

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ParseError("empty list value");
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
    std::vector<T> out;
    for (const auto& item : split_list(value)) {
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !is.eof()) throw ParseError("invalid value '" + item + "' for " + key);
        out.push_back(v);
    }
    return out;
}

std::vector<Family> parse_families(const std::string& value) {
    if (value == "both") return {Family::SC, Family::PKB};
    std::vector<Family> out;
    for (const auto& item : split_list(value)) out.push_back(parse_family(item));
    return out;
}

}  // namespace

void apply_experiment_setting(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    GridAxes& a = spec.axes;
    if (key == "preset") {
        const std::uint64_t seed = spec.base_seed;
        spec = preset_spec(parse_preset(value));
        spec.base_seed = seed;
        return;
    }
    if (key == "replicates") {
        spec.replicates = parse_list<int>(key, value).front();
        if (spec.replicates < 1) throw ParseError("replicates must be positive");
        return;
    }
    if (key == "seed") {
        spec.base_seed = parse_list<std::uint64_t>(key, value).front();
        return;
    }
    if (key == "starts") {
        spec.mixture_starts = parse_list<int>(key, value).front();
        return;
    }
    if (key == "scale") {
        spec.regression_scale = parse_list<double>(key, value).front();
        return;
    }
    if (key == "alpha") {
        spec.alpha = parse_list<double>(key, value).front();
        return;
    }
    if (key == "timing_repetitions") {
        spec.timing_repetitions = parse_list<int>(key, value).front();
        return;
    }
    if (key == "family") a.data = parse_families(value);
    else if (key == "model") a.model = parse_families(value);
    else if (key == "n") a.n = parse_list<Eigen::Index>(key, value);
    else if (key == "n2") a.n2 = parse_list<Eigen::Index>(key, value);
    else if (key == "d") {
        a.d = parse_list<int>(key, value);
        a.shifted_power_dims = false;
    } else if (key == "theta") a.theta_deg = parse_list<double>(key, value);
    else if (key == "K") a.K = parse_list<int>(key, value);
    else throw ParseError("unknown experiment key '" + key + "'");
    spec.grid = expand_grid(spec.preset, a);
}

ExperimentSpec parse_experiment_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> settings;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t\r"));
        if (line.empty()) continue;
        line.erase(line.find_last_not_of(" \t\r") + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        settings.emplace_back(key, value);
    }
    // preset first so the other keys refine its defaults
    ExperimentSpec spec;
    bool have_preset = false;
    for (const auto& [k, v] : settings)
        if (k == "preset") {
            apply_experiment_setting(spec, k, v);
            have_preset = true;
        }
    if (!have_preset) throw ParseError("config has no preset key");
    for (const auto& [k, v] : settings)
        if (k != "preset") apply_experiment_setting(spec, k, v);
    return spec;
}

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double median_seconds(F&& f, int repetitions) {
    std::vector<double> t;
    f();  // warm-up
    for (int r = 0; r < repetitions; ++r) {
        const auto start = Clock::now();
        f();
        t.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

std::vector<std::string> statistic_names(Preset preset) {
    switch (preset) {
        case Preset::MleSpeed: return {"hybrid_over_nr", "pkb_over_sc"};
        case Preset::Type1Power: return {"rejection_rate"};
        case Preset::RegressionFit: return {"fit_metric"};
        case Preset::Discrim: return {"accuracy"};
        case Preset::MixtureRecovery: return {"ari", "abs_k_error", "boundary_hit"};
    }
    return {};
}

std::vector<double> run_mle_speed(const ExperimentSpec& spec, const GridCell& c, RngStream& rng) {
    const UnitVector m = random_unit_vector(c.d, rng);
    const DirectionalSample Y = sample(SphericalParams::from_direction(c.data, m, 0.5), c.n, rng);
    const int reps = spec.timing_repetitions;
    const double nr = median_seconds([&] { fit_nr(Y, c.data); }, reps);
    const double hybrid = median_seconds([&] { fit_hybrid(Y, c.data); }, reps);
    const double sc = median_seconds([&] { fit_mle(Y, Family::SC); }, reps);
    const double pkb = median_seconds([&] { fit_mle(Y, Family::PKB); }, reps);
    return {hybrid / nr, pkb / sc};
}

std::vector<double> run_type1(const ExperimentSpec& spec, const GridCell& c, RngStream& rng) {
    const Eigen::Index D = c.d + 1;
    const double theta = c.theta_deg * std::acos(-1.0) / 180.0;
    const DirectionalSample a = sample(SphericalParams::from_direction(c.data, UnitVector::basis(D, 0), 0.3), c.n, rng);
    const DirectionalSample b = sample(SphericalParams::from_direction(c.data, rotated_basis(D, theta), 0.8), c.n2, rng);
    const TwoSampleTestResult t = lrt_two_sample(a, b, c.model);
    return {t.p_asymptotic < spec.alpha ? 1.0 : 0.0};
}

std::vector<double> run_regression(const ExperimentSpec& spec, const GridCell& c, RngStream& rng) {
    const Eigen::Index D = c.d + 1;
    Matrix B(2, D);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = spec.regression_scale * rng.normal();
    Matrix x(c.n, 1);
    for (Eigen::Index i = 0; i < c.n; ++i) x(i, 0) = rng.normal();
    const DesignMatrix X = DesignMatrix::with_intercept(x);
    const DirectionalSample Y = simulate_regression(B, X, c.data, rng);
    const RegressionModel model = fit_regression(Y, X, c.model);
    return {fit_metric(Y, predict(model, X))};
}

std::vector<double> run_discrim(const ExperimentSpec&, const GridCell& c, RngStream& rng) {
    const Eigen::Index D = c.d + 1;
    const double theta = c.theta_deg * std::acos(-1.0) / 180.0;
    const DirectionalSample a = sample(SphericalParams::from_direction(c.data, UnitVector::basis(D, 0), 0.5), c.n, rng);
    const DirectionalSample b = sample(SphericalParams::from_direction(c.data, rotated_basis(D, theta), 0.5), c.n, rng);
    std::vector<int> labels(static_cast<std::size_t>(2 * c.n), 1);
    std::fill(labels.begin() + c.n, labels.end(), 2);
    const LabeledSample data(DirectionalSample::concat(a, b), std::move(labels));
    return {cross_validate(data, c.model, 10, 1, rng.child(1)).mean};
}

std::vector<double> run_mixture(const ExperimentSpec& spec, const GridCell& c, RngStream& rng) {
    Vector p(c.K);
    for (int j = 0; j < c.K; ++j) p[j] = rng.gamma(5.0);
    p /= p.sum();
    std::vector<SphericalParams> components;
    for (int j = 0; j < c.K; ++j)
        components.push_back(SphericalParams::from_direction(c.data, random_unit_vector(c.d, rng), 0.7 + 0.2 * rng.uniform()));
    const LabeledDraw draw = sample_mixture(p, components, c.n, rng);
    EmOptions options;
    options.n_starts = spec.mixture_starts;
    const int k_max = c.K + 3;
    const SelectionResult sel = select_k(draw.Y, c.model, k_max, options, rng.child(1));
    const double ari = adjusted_rand_index(map_assignments(sel.model(sel.best_bic).W), draw.labels);
    return {ari, static_cast<double>(std::abs(sel.best_bic - c.K)), sel.best_bic == k_max ? 1.0 : 0.0};
}

std::vector<double> run_replicate(const ExperimentSpec& spec, const GridCell& c, RngStream& rng) {
    switch (spec.preset) {
        case Preset::MleSpeed: return run_mle_speed(spec, c, rng);
        case Preset::Type1Power: return run_type1(spec, c, rng);
        case Preset::RegressionFit: return run_regression(spec, c, rng);
        case Preset::Discrim: return run_discrim(spec, c, rng);
        case Preset::MixtureRecovery: return run_mixture(spec, c, rng);
    }
    return {};
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

}  // namespace

ReportTable run_experiment(const ExperimentSpec& spec) {
    if (spec.replicates < 1) throw DomainError("replicates must be positive");
    if (spec.grid.empty()) throw DomainError("experiment grid is empty");
    const std::vector<std::string> names = statistic_names(spec.preset);
    const std::size_t cells = spec.grid.size();
    const std::size_t reps = static_cast<std::size_t>(spec.replicates);
    std::vector<std::vector<double>> results(cells * reps);

    auto job = [&](std::size_t k) {
        const GridCell& c = spec.grid[k / reps];
        const std::size_t r = k % reps;
        RngStream rng(spec.base_seed, hash_combine(c.data_key(spec.preset), r));
        try {
            results[k] = run_replicate(spec, c, rng);
        } catch (const Error&) {
            results[k].clear();
        }
    };
    // timings are taken on a single thread
    parallel_for(results.size(), job, spec.preset == Preset::MleSpeed ? 1 : default_thread_count());

    ReportTable table;
    table.title = std::string(to_string(spec.preset));
    table.metadata = {{"preset", table.title},
                      {"base_seed", std::to_string(spec.base_seed)},
                      {"replicates", std::to_string(spec.replicates)},
                      {"cells", std::to_string(cells)}};
    if (spec.preset == Preset::MixtureRecovery) table.metadata.emplace_back("starts", std::to_string(spec.mixture_starts));
    if (spec.preset == Preset::RegressionFit) table.metadata.emplace_back("coefficient_sd", format_double(spec.regression_scale));
    if (spec.preset == Preset::Type1Power) table.metadata.emplace_back("alpha", format_double(spec.alpha));

    for (std::size_t ci = 0; ci < cells; ++ci) {
        const std::string cell = spec.grid[ci].describe(spec.preset);
        for (std::size_t s = 0; s < names.size(); ++s) {
            double sum = 0.0, sum2 = 0.0;
            int ok = 0, failed = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& v = results[ci * reps + r];
                if (v.size() != names.size() || !std::isfinite(v[s])) {
                    ++failed;
                    continue;
                }
                sum += v[s];
                sum2 += v[s] * v[s];
                ++ok;
            }
            ReportRow row{cell, names[s], std::nan(""), std::nan(""), ok, failed};
            if (ok > 0) {
                row.value = sum / ok;
                const double var = ok > 1 ? std::max(0.0, (sum2 - ok * row.value * row.value) / (ok - 1)) : 0.0;
                row.mc_stderr = std::sqrt(var / ok);
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

void ReportTable::write_text(std::ostream& out) const {
    out << "# " << title << '\n';
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << '\n';
    std::size_t wc = 4, ws = 9;
    for (const auto& r : rows) {
        wc = std::max(wc, r.cell.size());
        ws = std::max(ws, r.statistic.size());
    }
    out << std::left << std::setw(static_cast<int>(wc)) << "cell" << "  " << std::setw(static_cast<int>(ws))
        << "statistic" << "  " << std::right << std::setw(10) << "value" << "  " << std::setw(10) << "mc_se" << "  "
        << std::setw(6) << "reps" << "  " << std::setw(6) << "failed" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(wc)) << r.cell << "  " << std::setw(static_cast<int>(ws))
            << r.statistic << "  " << std::right << std::fixed << std::setprecision(4) << std::setw(10) << r.value
            << "  " << std::setw(10) << r.mc_stderr << "  " << std::setw(6) << r.replicates << "  " << std::setw(6)
            << r.failures << '\n';
        out.unsetf(std::ios::fixed);
    }
}

void ReportTable::write_csv(std::ostream& out) const {
    out << "cell,statistic,value,mc_stderr,replicates,failures\n" << std::setprecision(17);
    for (const auto& r : rows)
        out << '"' << r.cell << "\"," << r.statistic << ',' << r.value << ',' << r.mc_stderr << ',' << r.replicates
            << ',' << r.failures << '\n';
}

const ReportRow& ReportTable::find(const std::string& cell, const std::string& statistic) const {
    for (const auto& r : rows)
        if (r.cell == cell && r.statistic == statistic) return r;
    throw std::out_of_range("no report row for " + cell + " / " + statistic);
}

BenchResult bench_mle(Family family, Eigen::Index n, int d, double rho, int repetitions, std::uint64_t seed) {
    RngStream rng(seed, 0);
    const UnitVector m = random_unit_vector(d, rng);
    const DirectionalSample Y = sample(SphericalParams::from_direction(family, m, rho), n, rng);
    BenchResult out;
    out.repetitions = repetitions;
    out.nr_seconds = median_seconds([&] { fit_nr(Y, family); }, repetitions);
    out.hybrid_seconds = median_seconds([&] { fit_hybrid(Y, family); }, repetitions);
    return out;
}

}  // namespace sphdir
