#include "sphdir/density.hpp"

#include <cmath>
#include <numbers>

namespace sphdir {

namespace {

void check_dims(const UnitVector& y, Eigen::Index ambient) {
    if (y.ambient() != ambient) throw DimensionError("observation and location have different dimensions");
}

}  // namespace

double log_norm_const(int d) {
    if (d < 1) throw DomainError("sphere dimension d must be at least 1");
    const double h = 0.5 * (d + 1);
    return std::lgamma(h) - std::log(2.0) - h * std::log(std::numbers::pi);
}

double detail::pkb_concentration_term(double gamma, int d) {
    const double s = std::sqrt(gamma * gamma + 1.0);
    return 0.5 * (d - 1) * std::log(0.5 * (s + 1.0));
}

double sc_logpdf(const UnitVector& y, const SphericalParams& params) {
    check_dims(y, params.ambient());
    const int d = y.dim();
    const double s = std::sqrt(params.mu().squaredNorm() + 1.0);
    const double alpha = y.coords().dot(params.mu());
    return log_norm_const(d) - d * std::log(s - alpha);
}

double pkb_logpdf(const UnitVector& y, const SphericalParams& params) {
    check_dims(y, params.ambient());
    const int d = y.dim();
    const double gamma = params.gamma();
    const double s = std::sqrt(gamma * gamma + 1.0);
    const double alpha = y.coords().dot(params.mu());
    return log_norm_const(d) - 0.5 * (d + 1) * std::log(s - alpha) + detail::pkb_concentration_term(gamma, d);
}

double logpdf(const UnitVector& y, const SphericalParams& params) {
    return params.family() == Family::SC ? sc_logpdf(y, params) : pkb_logpdf(y, params);
}

double pdf(const UnitVector& y, const SphericalParams& params) { return std::exp(logpdf(y, params)); }

double sc_logpdf_mrho(const UnitVector& y, const UnitVector& m, double rho) {
    check_dims(y, m.ambient());
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
    const int d = y.dim();
    const double t = y.coords().dot(m.coords());
    return log_norm_const(d) + d * (std::log1p(-rho * rho) - std::log(1.0 + rho * rho - 2.0 * rho * t));
}

double pkb_logpdf_mrho(const UnitVector& y, const UnitVector& m, double rho) {
    check_dims(y, m.ambient());
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
    const int d = y.dim();
    const double t = y.coords().dot(m.coords());
    return log_norm_const(d) + std::log1p(-rho * rho) - 0.5 * (d + 1) * std::log(1.0 + rho * rho - 2.0 * rho * t);
}

Vector logpdf_rows(const DirectionalSample& sample, const SphericalParams& params) {
    if (sample.ambient() != params.ambient()) throw DimensionError("sample and location have different dimensions");
    const int d = sample.dim();
    const double gamma = params.gamma();
    const double s = std::sqrt(gamma * gamma + 1.0);
    const double power = detail::family_power(params.family(), d);
    double constant = log_norm_const(d);
    if (params.family() == Family::PKB) constant += detail::pkb_concentration_term(gamma, d);
    Vector alpha = sample.rows() * params.mu();
    return (constant - power * (s - alpha.array()).log()).matrix();
}

double log_density_difference(const UnitVector& y, const UnitVector& m, double rho) {
    return sc_logpdf_mrho(y, m, rho) - pkb_logpdf_mrho(y, m, rho);
}

double log_density_difference_closed(double t, double rho, int d) {
    return 0.5 * (d - 1) * (2.0 * std::log1p(-rho * rho) - std::log(1.0 + rho * rho - 2.0 * rho * t));
}

}  // namespace sphdir
