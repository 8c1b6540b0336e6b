#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sphdir/core.hpp"

namespace sphdir {

// Optional per-observation weights; an empty span means unit weights.
using Weights = std::span<const double>;

enum class Algorithm { NR, Hybrid };
std::string_view to_string(Algorithm algorithm);

struct FitOptions {
    double tol = 1e-6;
    int max_iter = 100;
};

struct FitResult {
    SphericalParams params;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
    Algorithm algorithm = Algorithm::NR;
    // NR iterations that needed step halving past 20 halvings and fell back to a hybrid step.
    int safeguard_steps = 0;
};

// Total log-likelihood including n log C_d, via the unconstrained-location forms.
double loglik(const DirectionalSample& sample, const SphericalParams& params, Weights weights = {});

// Same quantity written in (m, rho), evaluated from t_i = y_i'm.
double loglik_mrho(const Vector& t, Weights weights, Family family, int d, double rho);

struct ScoreHessian {
    Vector score;
    Matrix hessian;
};

// Analytic gradient and Hessian of the log-likelihood in mu. PKB requires gamma >= 1e-8.
ScoreHessian score_and_hessian(const DirectionalSample& sample, const SphericalParams& params,
                               Weights weights = {});

// Newton-Raphson on mu, started from the (weighted) sample mean unless start is given.
FitResult fit_nr(const DirectionalSample& sample, Family family, const FitOptions& options = {},
                 Weights weights = {}, const std::optional<Vector>& start = std::nullopt);

// Alternating Brent (rho) / fixed-point (m) ascent.
FitResult fit_hybrid(const DirectionalSample& sample, Family family, const FitOptions& options = {},
                     Weights weights = {}, const std::optional<UnitVector>& start = std::nullopt);

// NR, falling back to the hybrid algorithm when NR does not converge or throws.
FitResult fit_mle(const DirectionalSample& sample, Family family, const FitOptions& options = {},
                  Weights weights = {}, const std::optional<Vector>& start = std::nullopt);

namespace detail {

inline constexpr double kRhoUpper = 1.0 - 1e-9;

// argmax over [0, kRhoUpper] of loglik_mrho; returns `current` when Brent does not beat it.
double maximize_rho(const Vector& t, Weights weights, Family family, int d, double current);

// sum_i w_i y_i / (1 + rho^2 - 2 rho y_i'm), the fixed-point direction before normalization.
Vector fixed_point_sum(const DirectionalSample& sample, Weights weights, const Vector& m, double rho);

double weight_sum(Weights weights, Eigen::Index n);

}  // namespace detail

}  // namespace sphdir
