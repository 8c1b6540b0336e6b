#include "sphdir/mixtures.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "sphdir/density.hpp"
#include "sphdir/parallel.hpp"
#include "sphdir/sampling.hpp"

namespace sphdir {

namespace {

constexpr double kCollapseMass = 1e-8;
// A component this concentrated sits on a handful of points; the likelihood is unbounded there.
constexpr double kSpikeRho = 1.0 - 1e-6;
const FitOptions kMStepOptions{1e-9, 100};

struct EStepOut {
    Matrix W;
    double loglik;
};

EStepOut e_step_full(const DirectionalSample& Y, const Vector& p, const std::vector<SphericalParams>& components) {
    const Eigen::Index K = static_cast<Eigen::Index>(components.size());
    if (p.size() != K) throw DimensionError("weight and component counts differ");
    Matrix L = component_log_densities(Y, components);
    L.rowwise() += p.array().log().matrix().transpose();
    EStepOut out{Matrix(Y.n(), K), 0.0};
    for (Eigen::Index i = 0; i < Y.n(); ++i) {
        const double top = L.row(i).maxCoeff();
        if (!std::isfinite(top)) {
            std::ostringstream os;
            os << "responsibilities underflow in every component at row " << i;
            throw NumericalError(os.str());
        }
        const Eigen::RowVectorXd e = (L.row(i).array() - top).exp().matrix();
        const double total = e.sum();
        out.W.row(i) = e / total;
        out.loglik += top + std::log(total);
    }
    return out;
}

}  // namespace

Matrix component_log_densities(const DirectionalSample& Y, const std::vector<SphericalParams>& components) {
    Matrix L(Y.n(), static_cast<Eigen::Index>(components.size()));
    for (std::size_t j = 0; j < components.size(); ++j) {
        if (components[j].ambient() != Y.ambient()) throw DimensionError("component and sample dimensions differ");
        L.col(static_cast<Eigen::Index>(j)) = logpdf_rows(Y, components[j]);
    }
    return L;
}

double mixture_loglik(const DirectionalSample& Y, const Vector& p, const std::vector<SphericalParams>& components) {
    return e_step_full(Y, p, components).loglik;
}

Matrix e_step(const DirectionalSample& Y, const Vector& p, const std::vector<SphericalParams>& components) {
    return e_step_full(Y, p, components).W;
}

MStepResult m_step(const DirectionalSample& Y, const Matrix& W, Family family,
                   const std::vector<SphericalParams>* warm) {
    if (W.rows() != Y.n()) throw DimensionError("responsibility matrix has the wrong row count");
    const Eigen::Index K = W.cols();
    if (warm && static_cast<Eigen::Index>(warm->size()) != K) throw DimensionError("warm start has the wrong size");
    MStepResult out{Vector(K), {}};
    const Vector mass = W.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < K; ++j) {
        if (!(mass[j] >= kCollapseMass)) {
            std::ostringstream os;
            os << "component " << j + 1 << " collapsed (responsibility mass " << mass[j] << ")";
            throw ComponentCollapse(static_cast<int>(j), os.str());
        }
    }
    out.p = mass / mass.sum();

    for (Eigen::Index j = 0; j < K; ++j) {
        const Vector w = W.col(j);
        const Weights weights(w.data(), static_cast<std::size_t>(w.size()));
        std::optional<Vector> start;
        if (warm) start = (*warm)[static_cast<std::size_t>(j)].mu();
        std::optional<FitResult> fit;
        try {
            fit = fit_mle(Y, family, kMStepOptions, weights, start);
        } catch (const Error&) {
            if (!warm) throw;
        }
        if (warm) {
            const SphericalParams previous = (*warm)[static_cast<std::size_t>(j)].with_family(family);
            if (!fit || !(fit->loglik >= loglik(Y, previous, weights))) {
                out.components.push_back(previous);
                continue;
            }
        }
        out.components.push_back(fit->params);
    }
    for (std::size_t j = 0; j < out.components.size(); ++j) {
        if (out.components[j].rho() >= kSpikeRho) {
            std::ostringstream os;
            os << "component " << j + 1 << " degenerated to a point mass (rho " << out.components[j].rho() << ")";
            throw ComponentCollapse(static_cast<int>(j), os.str());
        }
    }
    return out;
}

int mixture_parameter_count(int K, int d) { return (K - 1) + K * (d + 1); }

double responsibility_entropy(const Matrix& W) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < W.size(); ++i) {
        const double w = W.data()[i];
        if (w > 0.0) h -= w * std::log(w);
    }
    return h;
}

std::vector<int> map_assignments(const Matrix& W) {
    std::vector<int> out(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < W.cols(); ++j)
            if (W(i, j) > W(i, arg)) arg = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg) + 1;
    }
    return out;
}

ClusteringResult cluster(const MixtureModel& model) { return {map_assignments(model.W), model}; }

std::vector<int> spherical_kmeans(const DirectionalSample& Y, int K, RngStream& rng, int max_iter) {
    const Eigen::Index n = Y.n();
    if (K < 1 || K > n) throw DomainError("k-means needs 1 <= K <= n");
    const auto& rows = Y.rows();
    RowMatrix centers(K, Y.ambient());

    // k-means++ seeding with dissimilarity 1 - y'c
    centers.row(0) = rows.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Vector dist = (1.0 - (rows * centers.row(0).transpose()).array()).cwiseMax(0.0).matrix();
    for (int k = 1; k < K; ++k) {
        const double total = dist.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick < n - 1; ++pick) {
                u -= dist[pick];
                if (u <= 0.0) break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        centers.row(k) = rows.row(pick);
        dist = dist.cwiseMin((1.0 - (rows * centers.row(k).transpose()).array()).cwiseMax(0.0).matrix());
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iter; ++it) {
        const Matrix sim = rows * centers.transpose();
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index arg;
            sim.row(i).maxCoeff(&arg);
            if (labels[static_cast<std::size_t>(i)] != static_cast<int>(arg)) {
                labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
                changed = true;
            }
        }
        RowMatrix sums = RowMatrix::Zero(K, Y.ambient());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += rows.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int k = 0; k < K; ++k) {
            if (counts[static_cast<std::size_t>(k)] == 0 || sums.row(k).norm() < kDegenerateNorm) {
                // reseed an empty cluster at the worst-represented point
                Eigen::Index worst = 0;
                double worst_sim = std::numeric_limits<double>::infinity();
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double s = sim(i, labels[static_cast<std::size_t>(i)]);
                    if (s < worst_sim && counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] > 1) {
                        worst_sim = s;
                        worst = i;
                    }
                }
                --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(worst)])];
                labels[static_cast<std::size_t>(worst)] = k;
                ++counts[static_cast<std::size_t>(k)];
                centers.row(k) = rows.row(worst);
                changed = true;
            } else {
                centers.row(k) = sums.row(k).normalized();
            }
        }
        if (!changed) break;
    }
    return labels;
}

namespace {

struct StartOutcome {
    std::optional<MixtureModel> model;
    std::string diagnostics;
};

MixtureModel run_em(const DirectionalSample& Y, int K, Family family, const EmOptions& options, RngStream& rng) {
    const std::vector<int> labels = spherical_kmeans(Y, K, rng);
    Matrix W = Matrix::Zero(Y.n(), K);
    for (Eigen::Index i = 0; i < Y.n(); ++i) W(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    MStepResult params = m_step(Y, W, family);

    MixtureModel model;
    model.family = family;
    model.K = K;
    EStepOut e = e_step_full(Y, params.p, params.components);
    model.trace.push_back(e.loglik);
    for (int it = 1; it <= options.max_iter; ++it) {
        const double previous = e.loglik;
        params = m_step(Y, e.W, family, &params.components);
        e = e_step_full(Y, params.p, params.components);
        model.trace.push_back(e.loglik);
        model.em_iterations = it;
        if (e.loglik - previous < options.tol * std::abs(previous)) {
            model.converged = true;
            break;
        }
    }
    model.p = params.p;
    model.components = std::move(params.components);
    model.loglik = e.loglik;
    model.W = std::move(e.W);
    const double n = static_cast<double>(Y.n());
    model.bic = -2.0 * model.loglik + mixture_parameter_count(K, Y.dim()) * std::log(n);
    model.icl = model.bic + 2.0 * responsibility_entropy(model.W);
    return model;
}

}  // namespace

MixtureModel em_fit(const DirectionalSample& Y, int K, Family family, const EmOptions& options, const RngStream& rng) {
    if (K < 1) throw DomainError("a mixture needs K >= 1");
    if (Y.n() <= K) throw DomainError("a mixture needs more observations than components");
    const int starts = std::max(1, options.n_starts);
    std::vector<StartOutcome> outcomes(static_cast<std::size_t>(starts));
    parallel_for(outcomes.size(), [&](std::size_t s) {
        std::ostringstream diag;
        for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
            RngStream local = rng.child(hash_combine(s, static_cast<std::uint64_t>(attempt)));
            try {
                MixtureModel m = run_em(Y, K, family, options, local);
                m.restarts = attempt;
                outcomes[s].model = std::move(m);
                return;
            } catch (const ComponentCollapse& e) {
                diag << "start " << s + 1 << " attempt " << attempt + 1 << ": " << e.what() << "; ";
            } catch (const Error& e) {
                diag << "start " << s + 1 << " attempt " << attempt + 1 << ": " << e.what() << "; ";
                break;
            }
        }
        outcomes[s].diagnostics = diag.str();
    });

    std::optional<MixtureModel> best;
    std::string diagnostics;
    for (auto& o : outcomes) {
        if (o.model && (!best || o.model->loglik > best->loglik)) best = std::move(o.model);
        diagnostics += o.diagnostics;
    }
    if (!best) throw NumericalError("mixture fit failed in every start: " + diagnostics);
    return std::move(*best);
}

const MixtureModel& SelectionResult::model(int K) const {
    const auto& m = models.at(static_cast<std::size_t>(K - 1));
    if (!m) throw NumericalError("no fitted model for K = " + std::to_string(K));
    return *m;
}

SelectionResult select_k(const DirectionalSample& Y, Family family, int K_max, const EmOptions& options,
                         const RngStream& rng) {
    if (K_max < 1) throw DomainError("K_max must be at least 1");
    SelectionResult out;
    out.rows.resize(static_cast<std::size_t>(K_max));
    out.models.resize(static_cast<std::size_t>(K_max));
    parallel_for(out.rows.size(), [&](std::size_t idx) {
        const int K = static_cast<int>(idx) + 1;
        SelectionRow& row = out.rows[idx];
        row.K = K;
        try {
            MixtureModel m = em_fit(Y, K, family, options, rng.child(static_cast<std::uint64_t>(K)));
            row.ok = true;
            row.loglik = m.loglik;
            row.bic = m.bic;
            row.icl = m.icl;
            out.models[idx] = std::move(m);
        } catch (const Error& e) {
            row.message = e.what();
        }
    });
    double bic = std::numeric_limits<double>::infinity(), icl = bic;
    for (const auto& row : out.rows) {
        if (!row.ok) continue;
        if (row.bic < bic) {
            bic = row.bic;
            out.best_bic = row.K;
        }
        if (row.icl < icl) {
            icl = row.icl;
            out.best_icl = row.K;
        }
    }
    if (out.best_bic == 0) throw NumericalError("no value of K could be fitted");
    return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw DimensionError("partitions differ in length");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return 0.5 * x * (x - 1.0); };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& [key, c] : table) index += pairs(c);
    for (const auto& [key, c] : rows) sa += pairs(c);
    for (const auto& [key, c] : cols) sb += pairs(c);
    const double expected = sa * sb / pairs(n);
    const double maximum = 0.5 * (sa + sb);
    if (maximum - expected == 0.0) return 1.0;
    return (index - expected) / (maximum - expected);
}

LabeledDraw sample_mixture(const Vector& p, const std::vector<SphericalParams>& components, Eigen::Index n,
                           RngStream& rng) {
    if (p.size() != static_cast<Eigen::Index>(components.size()) || components.empty())
        throw DimensionError("weight and component counts differ");
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> counts(components.size(), 0);
    const double total = p.sum();
    for (auto& l : labels) {
        double u = rng.uniform() * total;
        std::size_t j = 0;
        for (; j + 1 < components.size(); ++j) {
            u -= p[static_cast<Eigen::Index>(j)];
            if (u <= 0.0) break;
        }
        l = static_cast<int>(j) + 1;
        ++counts[j];
    }
    RowMatrix rows(n, components.front().ambient());
    for (std::size_t j = 0; j < components.size(); ++j) {
        if (counts[j] == 0) continue;
        const DirectionalSample draw = sample(components[j], counts[j], rng);
        Eigen::Index next = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (labels[static_cast<std::size_t>(i)] == static_cast<int>(j) + 1) rows.row(i) = draw.rows().row(next++);
    }
    return {DirectionalSample(std::move(rows), DirectionalSample::OnInvalid::Project), std::move(labels)};
}

}  // namespace sphdir
