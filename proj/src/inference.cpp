#include "sphdir/inference.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "sphdir/parallel.hpp"
#include "sphdir/sampling.hpp"

namespace sphdir {

namespace {

constexpr double kLambdaClamp = 1e-8;
const FitOptions kAlternativeOptions{1e-10, 200};

struct NullState {
    Vector m;
    double rho1;
    double rho2;
    double ll;
};

double null_loglik(const DirectionalSample& a, const DirectionalSample& b, Family family, const Vector& m,
                   double rho1, double rho2) {
    const int d = a.dim();
    return loglik_mrho(a.rows() * m, {}, family, d, rho1) + loglik_mrho(b.rows() * m, {}, family, d, rho2);
}

NullState profile_start(const DirectionalSample& a, const DirectionalSample& b, Family family, const Vector& m) {
    const int d = a.dim();
    const double r1 = detail::maximize_rho(a.rows() * m, {}, family, d, 0.0);
    const double r2 = detail::maximize_rho(b.rows() * m, {}, family, d, 0.0);
    return {m, r1, r2, null_loglik(a, b, family, m, r1, r2)};
}

}  // namespace

double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

CommonLocationFit fit_common_location(const DirectionalSample& first, const DirectionalSample& second, Family family,
                                      const FitOptions& options) {
    if (first.ambient() != second.ambient()) throw DimensionError("the two samples have different dimensions");
    const int d = first.dim();

    std::vector<Vector> candidates;
    const Vector pooled = first.mean() * static_cast<double>(first.n()) + second.mean() * static_cast<double>(second.n());
    if (pooled.norm() > kDegenerateNorm) candidates.push_back(pooled.normalized());
    for (const auto* s : {&first, &second}) {
        try {
            const FitResult fit = fit_mle(*s, family, kAlternativeOptions);
            if (fit.params.gamma() > kDegenerateNorm) candidates.push_back(fit.params.m().coords());
        } catch (const Error&) {
        }
    }
    if (candidates.empty()) throw NumericalError("null fit: no usable starting direction");

    NullState st = profile_start(first, second, family, candidates.front());
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        NullState alt = profile_start(first, second, family, candidates[c]);
        if (alt.ll > st.ll) st = alt;
    }

    CommonLocationFit out{UnitVector::project(st.m), st.rho1, st.rho2, st.ll, 0, false};
    for (int it = 1; it <= options.max_iter; ++it) {
        const double previous = st.ll;
        // fixed-point direction: both samples' score contributions, each scaled by its own rho
        Vector direction = st.rho1 * detail::fixed_point_sum(first, {}, st.m, st.rho1) +
                           st.rho2 * detail::fixed_point_sum(second, {}, st.m, st.rho2);
        if (st.rho1 == 0.0 && st.rho2 == 0.0) direction = pooled;
        if (direction.norm() > kDegenerateNorm) {
            const Vector m_new = direction.normalized();
            const double ll_new = null_loglik(first, second, family, m_new, st.rho1, st.rho2);
            if (ll_new >= st.ll) {
                st.m = m_new;
                st.ll = ll_new;
            }
        }
        st.rho1 = detail::maximize_rho(first.rows() * st.m, {}, family, d, st.rho1);
        st.rho2 = detail::maximize_rho(second.rows() * st.m, {}, family, d, st.rho2);
        st.ll = null_loglik(first, second, family, st.m, st.rho1, st.rho2);
        out.iterations = it;
        if (st.ll - previous < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.m = UnitVector::project(st.m);
    out.rho_first = st.rho1;
    out.rho_second = st.rho2;
    out.loglik = st.ll;
    return out;
}

TwoSampleTestResult lrt_two_sample(const DirectionalSample& first, const DirectionalSample& second, Family family) {
    if (first.ambient() != second.ambient()) throw DimensionError("the two samples have different dimensions");
    if (first.n() < 2 || second.n() < 2) throw DomainError("each sample needs at least 2 observations");

    auto alternative = [&](const DirectionalSample& s, const char* label) {
        FitResult fit = fit_mle(s, family, kAlternativeOptions);
        if (!fit.converged) throw ConvergenceError(std::string("H1 fit of ") + label + " sample did not converge");
        return fit;
    };
    FitResult h1a = alternative(first, "first");
    FitResult h1b = alternative(second, "second");
    CommonLocationFit h0 = fit_common_location(first, second, family);
    if (!h0.converged) throw ConvergenceError("H0 common-location fit did not converge");

    double lambda = 2.0 * (h1a.loglik + h1b.loglik - h0.loglik);
    if (lambda < 0.0) {
        if (lambda < -kLambdaClamp) {
            std::ostringstream os;
            os << "optimizer inconsistency: null log-likelihood exceeds the alternative (lambda = " << lambda << ")";
            throw NumericalError(os.str());
        }
        lambda = 0.0;
    }
    const int df = first.dim();
    return {lambda, df, chi_square_sf(lambda, df), std::nullopt, std::move(h0), std::move(h1a), std::move(h1b), family};
}

BootstrapResult lrt_bootstrap_pvalue(const TwoSampleTestResult& observed, Eigen::Index n_first,
                                     Eigen::Index n_second, int replicates, const RngStream& rng) {
    if (replicates < 1) throw DomainError("bootstrap needs at least one replicate");
    const Family family = observed.family;
    const SphericalParams null_first = SphericalParams::from_direction(family, observed.h0.m,
                                                                       std::min(observed.h0.rho_first, detail::kRhoUpper));
    const SphericalParams null_second = SphericalParams::from_direction(family, observed.h0.m,
                                                                        std::min(observed.h0.rho_second, detail::kRhoUpper));
    std::vector<double> stats(static_cast<std::size_t>(replicates), std::nan(""));
    parallel_for(stats.size(), [&](std::size_t b) {
        RngStream local = rng.child(b);
        try {
            const DirectionalSample a = sample(null_first, n_first, local);
            const DirectionalSample c = sample(null_second, n_second, local);
            stats[b] = lrt_two_sample(a, c, family).lambda;
        } catch (const Error&) {
        }
    });
    BootstrapResult out;
    int exceed = 0;
    for (double s : stats) {
        if (std::isnan(s)) {
            ++out.dropped;
            continue;
        }
        ++out.replicates;
        if (s >= observed.lambda - kLambdaClamp) ++exceed;
    }
    out.p_value = (1.0 + exceed) / (1.0 + out.replicates);
    out.warning = out.dropped > 0.05 * replicates;
    return out;
}

BootstrapResult lrt_bootstrap_pvalue(const DirectionalSample& first, const DirectionalSample& second, Family family,
                                     int replicates, const RngStream& rng) {
    const TwoSampleTestResult observed = lrt_two_sample(first, second, family);
    return lrt_bootstrap_pvalue(observed, first.n(), second.n(), replicates, rng);
}

}  // namespace sphdir
