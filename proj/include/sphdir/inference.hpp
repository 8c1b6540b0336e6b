#pragma once

#include <optional>

#include "sphdir/mle.hpp"

namespace sphdir {

// Maximizer of the null log-likelihood: one shared direction, separate concentrations.
struct CommonLocationFit {
    UnitVector m;
    double rho_first = 0.0;
    double rho_second = 0.0;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct TwoSampleTestResult {
    double lambda = 0.0;
    int df = 0;
    double p_asymptotic = 1.0;
    std::optional<double> p_bootstrap;
    CommonLocationFit h0;
    FitResult h1_first;
    FitResult h1_second;
    Family family = Family::SC;
};

struct BootstrapResult {
    double p_value = 1.0;
    int replicates = 0;  // replicates that produced a statistic
    int dropped = 0;     // replicates whose fits failed
    bool warning = false;  // more than 5% of replicates dropped
};

CommonLocationFit fit_common_location(const DirectionalSample& first, const DirectionalSample& second, Family family,
                                      const FitOptions& options = {1e-10, 2000});

// Likelihood-ratio test of a shared location with unequal concentrations; df = d.
TwoSampleTestResult lrt_two_sample(const DirectionalSample& first, const DirectionalSample& second, Family family);

// Parametric bootstrap under the fitted null; p = (1 + #{stat* >= stat}) / (B' + 1).
BootstrapResult lrt_bootstrap_pvalue(const DirectionalSample& first, const DirectionalSample& second, Family family,
                                     int replicates, const RngStream& rng);
BootstrapResult lrt_bootstrap_pvalue(const TwoSampleTestResult& observed, Eigen::Index n_first,
                                     Eigen::Index n_second, int replicates, const RngStream& rng);

// Upper tail of chi-square with df degrees of freedom.
double chi_square_sf(double x, double df);

}  // namespace sphdir
