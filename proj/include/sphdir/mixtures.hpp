#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sphdir/mle.hpp"

namespace sphdir {

// A component whose responsibility mass fell below 1e-8, or whose rho reached 1 - 1e-6.
class ComponentCollapse : public NumericalError {
public:
    ComponentCollapse(int component, const std::string& what) : NumericalError(what), component_(component) {}
    int component() const noexcept { return component_; }

private:
    int component_;
};

struct MixtureModel {
    Family family = Family::SC;
    int K = 0;
    Vector p;
    std::vector<SphericalParams> components;
    double loglik = 0.0;
    Matrix W;  // n x K responsibilities
    double bic = 0.0;
    double icl = 0.0;
    int em_iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // observed log-likelihood after initialization and after each EM step
    int restarts = 0;           // k-means reseeds caused by collapsed components
};

struct ClusteringResult {
    std::vector<int> assignments;  // 1..K
    MixtureModel model;
};

struct EmOptions {
    double tol = 1e-6;  // relative log-likelihood gain
    int max_iter = 500;
    int n_starts = 10;
    int max_restarts = 3;
};

// n x K matrix of log f(y_i; component j).
Matrix component_log_densities(const DirectionalSample& Y, const std::vector<SphericalParams>& components);

double mixture_loglik(const DirectionalSample& Y, const Vector& p, const std::vector<SphericalParams>& components);

// Responsibilities by log-sum-exp. Throws NumericalError naming the row if every component underflows.
Matrix e_step(const DirectionalSample& Y, const Vector& p, const std::vector<SphericalParams>& components);

struct MStepResult {
    Vector p;
    std::vector<SphericalParams> components;
};

// Weighted MLE per column of W. `warm` (same K) seeds each fit and is kept when the new fit is not better.
MStepResult m_step(const DirectionalSample& Y, const Matrix& W, Family family,
                   const std::vector<SphericalParams>* warm = nullptr);

MixtureModel em_fit(const DirectionalSample& Y, int K, Family family, const EmOptions& options, const RngStream& rng);

// Number of free parameters (K - 1) + K (d + 1).
int mixture_parameter_count(int K, int d);
double responsibility_entropy(const Matrix& W);

std::vector<int> map_assignments(const Matrix& W);
ClusteringResult cluster(const MixtureModel& model);

enum class Criterion { BIC, ICL };

struct SelectionRow {
    int K = 0;
    bool ok = false;
    double loglik = 0.0;
    double bic = 0.0;
    double icl = 0.0;
    std::string message;
};

struct SelectionResult {
    std::vector<SelectionRow> rows;
    std::vector<std::optional<MixtureModel>> models;  // index K - 1
    int best_bic = 0;
    int best_icl = 0;
    const MixtureModel& model(int K) const;
};

SelectionResult select_k(const DirectionalSample& Y, Family family, int K_max, const EmOptions& options,
                         const RngStream& rng);

// Hubert-Arabie adjusted Rand index; labels may use any integer coding.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Spherical k-means (cosine dissimilarity) with k-means++ seeding. Labels are 0..K-1.
std::vector<int> spherical_kmeans(const DirectionalSample& Y, int K, RngStream& rng, int max_iter = 100);

struct LabeledDraw {
    DirectionalSample Y;
    std::vector<int> labels;  // 1..K
};

LabeledDraw sample_mixture(const Vector& p, const std::vector<SphericalParams>& components, Eigen::Index n,
                           RngStream& rng);

}  // namespace sphdir
