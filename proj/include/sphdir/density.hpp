#pragma once

#include "sphdir/core.hpp"

namespace sphdir {

// log C_d with C_d = Gamma((d+1)/2) / (2 pi^{(d+1)/2}), the reciprocal surface area of S^d.
double log_norm_const(int d);

// Unconstrained-location forms: log C_d - d log(sqrt(g^2+1) - y'mu) for SC, and
// log C_d - (d+1)/2 log(sqrt(g^2+1) - y'mu) - (d-1)/2 log(1 - rho^2) for PKB.
double sc_logpdf(const UnitVector& y, const SphericalParams& params);
double pkb_logpdf(const UnitVector& y, const SphericalParams& params);
// Family-dispatched.
double logpdf(const UnitVector& y, const SphericalParams& params);
double pdf(const UnitVector& y, const SphericalParams& params);

// (m, rho) forms, evaluated directly from the classical densities.
double sc_logpdf_mrho(const UnitVector& y, const UnitVector& m, double rho);
double pkb_logpdf_mrho(const UnitVector& y, const UnitVector& m, double rho);

// Row-wise log density over a sample (no dimension checks beyond the first).
Vector logpdf_rows(const DirectionalSample& sample, const SphericalParams& params);

// log f_SC - log f_PKB at a shared (m, rho), by direct subtraction of the two logpdfs.
double log_density_difference(const UnitVector& y, const UnitVector& m, double rho);
// Closed form of the same quantity in t = y'm:
// ((d-1)/2) [2 log(1 - rho^2) - log(1 + rho^2 - 2 rho t)], increasing in t.
double log_density_difference_closed(double t, double rho, int d);

namespace detail {

// Per-observation kernel pieces shared by density, likelihood and regression code.
// s = sqrt(gamma^2 + 1); kernel = s - alpha.
inline double family_power(Family family, int d) {
    return family == Family::SC ? static_cast<double>(d) : 0.5 * (d + 1);
}

// PKB concentration term -(d-1)/2 log(1 - rho^2) expressed in gamma:
// 1 - rho^2 = 2 / (s + 1), so the term is (d-1)/2 log((s+1)/2).
double pkb_concentration_term(double gamma, int d);

}  // namespace detail

}  // namespace sphdir
