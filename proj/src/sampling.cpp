#include "sphdir/sampling.hpp"

#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

namespace sphdir {

DirectionalSample sample_sc(const SphericalParams& params, Eigen::Index n, RngStream& rng) {
    const int d = params.dim();
    const double rho = params.rho();
    if (!(rho < 1.0)) throw DomainError("rho must be below 1");
    DirectionalSample u = sample_uniform_sphere(d, n, rng);
    if (rho == 0.0) return u;

    const Vector shift = params.m().coords() * rho;
    RowMatrix rows = u.rows();
    const double scale = (1.0 - rho) * (1.0 + rho);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector v = rows.row(i).transpose() + shift;
        Vector y = v * (scale / v.squaredNorm()) + shift;
        rows.row(i) = y.transpose() / y.norm();
    }
    return DirectionalSample(std::move(rows));
}

double pkb_omega(int d, double lambda, double beta) {
    const double root = std::sqrt(1.0 - lambda * lambda);
    const double root_beta = std::sqrt(std::max(0.0, 1.0 - lambda * lambda / beta));
    return 0.5 * (d + 1) * std::log((1.0 + root) / (1.0 + root_beta)) - 0.5 * std::log1p(-beta);
}

namespace {

double envelope_log_bound(double lambda, double beta) {
    if (beta >= lambda / (2.0 - lambda))
        return std::log(2.0 / (1.0 + std::sqrt(1.0 - lambda * lambda / beta)));
    // interior stationary point lies beyond q = 1; the maximum sits at the pole q = 1
    return std::log1p(-beta) - std::log1p(-lambda);
}

}  // namespace

double PkbEnvelope::acceptance_probability(double rho) const {
    return std::exp(-omega - std::log1p(-rho * rho));
}

PkbEnvelope pkb_envelope(int d, double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("PKB envelope needs 0 < rho < 1");
    const double lambda = 2.0 * rho / (1.0 + rho * rho);
    double lo = std::max({0.0, lambda * (2.0 * lambda - 1.0), lambda * lambda}) + 1e-9;
    const double hi = 1.0 - 1e-9;
    if (!(lo < hi)) throw NumericalError("PKB sampler setup: empty search interval for beta");
    auto objective = [&](double b) { return pkb_omega(d, lambda, b); };
    std::uintmax_t iters = 500;
    // 1e-8 absolute tolerance on beta is ~ 27 bits on (0, 1)
    auto [beta, value] = boost::math::tools::brent_find_minima(objective, lo, hi, 27, iters);
    if (!std::isfinite(value) || beta <= lo || beta >= hi)
        throw NumericalError("PKB sampler setup: no interior minimum of omega found");
    return {lambda, beta, value, envelope_log_bound(lambda, beta)};
}

PkbSample sample_pkb(const SphericalParams& params, Eigen::Index n, RngStream& rng) {
    const int d = params.dim();
    const double rho = params.rho();
    if (n < 1) throw DomainError("sample size must be at least 1");
    if (rho == 0.0) {
        auto u = sample_uniform_sphere(d, n, rng);
        return {std::move(u), {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(n)}};
    }
    const PkbEnvelope env = pkb_envelope(d, rho);
    const double beta1 = env.beta / (1.0 - env.beta);
    const double beta2 = -1.0 + 1.0 / std::sqrt(1.0 - env.beta);
    const double half = 0.5 * (d + 1);
    const Vector m = params.m().coords();

    RowMatrix rows(n, d + 1);
    SamplerDiagnostics diag;
    Vector z(d + 1);
    for (Eigen::Index i = 0; i < n;) {
        const double log_u = std::log(rng.uniform());
        for (int j = 0; j <= d; ++j) z[j] = rng.normal();
        ++diag.proposals;
        const double mz = m.dot(z);
        const double norm = std::sqrt(z.squaredNorm() + beta1 * mz * mz);
        if (!(norm > 0.0)) continue;
        const double q = std::clamp((1.0 + beta2) * mz / norm, -1.0, 1.0);
        const double log_ratio =
            half * (-std::log1p(-env.lambda * q) + std::log1p(-env.beta * q * q) - env.log_bound);
        if (log_u <= log_ratio) {
            Vector x = (z + beta2 * mz * m) / norm;
            rows.row(i) = x.transpose() / x.norm();
            ++diag.accepted;
            ++i;
        }
    }
    return {DirectionalSample(std::move(rows)), diag};
}

DirectionalSample sample(const SphericalParams& params, Eigen::Index n, RngStream& rng) {
    if (params.family() == Family::SC) return sample_sc(params, n, rng);
    return sample_pkb(params, n, rng).sample;
}

}  // namespace sphdir
