#include "sphdir/mle.hpp"

#include <cmath>
#include <limits>

#include "sphdir/density.hpp"
#include "sphdir/optim.hpp"

namespace sphdir {

std::string_view to_string(Algorithm algorithm) { return algorithm == Algorithm::NR ? "nr" : "hybrid"; }

namespace detail {

double weight_sum(Weights weights, Eigen::Index n) {
    if (weights.empty()) return static_cast<double>(n);
    double total = 0.0;
    for (double w : weights) total += w;
    return total;
}

double maximize_rho(const Vector& t, Weights weights, Family family, int d, double current) {
    auto objective = [&](double rho) { return loglik_mrho(t, weights, family, d, rho); };
    const ScalarOptimum best = brent_maximize(objective, 0.0, kRhoUpper);
    const double at_current = objective(current);
    return best.value >= at_current ? best.x : current;
}

Vector fixed_point_sum(const DirectionalSample& sample, Weights weights, const Vector& m, double rho) {
    const Vector t = sample.rows() * m;
    Eigen::ArrayXd coef = 1.0 / (1.0 + rho * rho - 2.0 * rho * t.array());
    if (!weights.empty()) coef *= Eigen::Map<const Eigen::ArrayXd>(weights.data(), t.size());
    return sample.rows().transpose() * coef.matrix();
}

}  // namespace detail

namespace {

void check_weights(const DirectionalSample& sample, Weights weights) {
    if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != sample.n())
        throw DimensionError("weight vector length differs from the sample size");
}

void check_fit_input(const DirectionalSample& sample, Weights weights) {
    check_weights(sample, weights);
    if (weights.empty()) {
        if (sample.n() < 2) throw DomainError("maximum likelihood needs at least 2 observations");
        bool identical = true;
        for (Eigen::Index i = 1; i < sample.n() && identical; ++i)
            identical = (sample.rows().row(i) - sample.rows().row(0)).norm() < 1e-12;
        if (identical) throw DomainError("all observations are identical; the likelihood is unbounded");
    } else if (!(detail::weight_sum(weights, sample.n()) > 0.0)) {
        throw DomainError("weights sum to zero");
    }
}

Vector weighted_mean(const DirectionalSample& sample, Weights weights) {
    if (weights.empty()) return sample.mean();
    const Eigen::Map<const Vector> w(weights.data(), sample.n());
    return sample.rows().transpose() * w / detail::weight_sum(weights, sample.n());
}

}  // namespace

double loglik_mrho(const Vector& t, Weights weights, Family family, int d, double rho) {
    const Eigen::Index n = t.size();
    const double wsum = detail::weight_sum(weights, n);
    Eigen::ArrayXd logq = (1.0 + rho * rho - 2.0 * rho * t.array()).log();
    const double sum = weights.empty() ? logq.sum()
                                       : (logq * Eigen::Map<const Eigen::ArrayXd>(weights.data(), n)).sum();
    const double log1mr2 = std::log1p(-rho * rho);
    const double c = wsum * log_norm_const(d);
    if (family == Family::SC) return c + wsum * d * log1mr2 - d * sum;
    return c + wsum * log1mr2 - 0.5 * (d + 1) * sum;
}

double loglik(const DirectionalSample& sample, const SphericalParams& params, Weights weights) {
    check_weights(sample, weights);
    const Vector lp = logpdf_rows(sample, params);
    if (weights.empty()) return lp.sum();
    return lp.dot(Eigen::Map<const Vector>(weights.data(), sample.n()));
}

ScoreHessian score_and_hessian(const DirectionalSample& sample, const SphericalParams& params, Weights weights) {
    check_weights(sample, weights);
    if (sample.ambient() != params.ambient()) throw DimensionError("sample and location have different dimensions");
    const int d = sample.dim();
    const Eigen::Index D = sample.ambient();
    const Vector& mu = params.mu();
    const double g2 = mu.squaredNorm();
    const double gamma = std::sqrt(g2);
    if (params.family() == Family::PKB && gamma < 1e-8)
        throw SingularityError("PKB derivatives are singular at gamma < 1e-8");
    const double s = std::sqrt(g2 + 1.0);
    const double k = detail::family_power(params.family(), d);
    const auto& Y = sample.rows();
    const Eigen::Index n = sample.n();

    Eigen::ArrayXd c = 1.0 / (s - (Y * mu).array());  // 1 / (s - alpha_i)
    Eigen::ArrayXd wc = c;
    Eigen::ArrayXd wc2 = c * c;
    if (!weights.empty()) {
        const Eigen::Map<const Eigen::ArrayXd> w(weights.data(), n);
        wc *= w;
        wc2 *= w;
    }
    const double sum_wc = wc.sum();
    const double sum_wc2 = wc2.sum();
    const Vector ms = mu / s;
    const Vector y_wc = Y.transpose() * wc.matrix();
    const Vector y_wc2 = Y.transpose() * wc2.matrix();

    ScoreHessian out;
    out.score = -k * (sum_wc * ms - y_wc);

    // A = d^2 s / d mu d mu' = (I s - mu mu'/s) / (g^2 + 1)
    const Matrix A = (Matrix::Identity(D, D) * s - mu * mu.transpose() / s) / (g2 + 1.0);
    // sum_i w_i c_i^2 b_i b_i' with b_i = mu/s - y_i
    Matrix outer = (Y.transpose() * (Y.array().colwise() * wc2).matrix());
    outer += sum_wc2 * ms * ms.transpose();
    outer -= ms * y_wc2.transpose() + y_wc2 * ms.transpose();
    out.hessian = -k * (sum_wc * A - outer);

    if (params.family() == Family::PKB) {
        const double wsum = detail::weight_sum(weights, n);
        const double coef = wsum * 0.5 * (d - 1);
        const double sm1 = g2 / (s + 1.0);  // s - 1 without cancellation
        out.score -= coef * (ms / sm1 - 2.0 * mu / g2);
        const Matrix part1 = (A * sm1 - ms * ms.transpose()) / (sm1 * sm1);
        const Matrix part2 = (2.0 * g2 * Matrix::Identity(D, D) - 4.0 * mu * mu.transpose()) / (g2 * g2);
        out.hessian -= coef * (part1 - part2);
    }
    out.hessian = 0.5 * (out.hessian + out.hessian.transpose());
    return out;
}

namespace {

struct HybridState {
    Vector m;
    double rho;
    double ll;
};

// One Brent + fixed-point sweep from (m, rho); never decreases the log-likelihood.
HybridState hybrid_sweep(const DirectionalSample& sample, Weights weights, Family family, HybridState st) {
    const int d = sample.dim();
    Vector t = sample.rows() * st.m;
    st.rho = detail::maximize_rho(t, weights, family, d, st.rho);
    st.ll = loglik_mrho(t, weights, family, d, st.rho);

    const Vector direction = detail::fixed_point_sum(sample, weights, st.m, st.rho);
    const double norm = direction.norm();
    if (norm > kDegenerateNorm) {
        const Vector m_new = direction / norm;
        const Vector t_new = sample.rows() * m_new;
        const double ll_new = loglik_mrho(t_new, weights, family, d, st.rho);
        if (ll_new >= st.ll) {
            st.m = m_new;
            st.ll = ll_new;
        }
    }
    return st;
}

SphericalParams to_params(Family family, const Vector& m, double rho) {
    return {family, m * rho_to_gamma(std::min(rho, detail::kRhoUpper))};
}

}  // namespace

FitResult fit_hybrid(const DirectionalSample& sample, Family family, const FitOptions& options, Weights weights,
                     const std::optional<UnitVector>& start) {
    check_fit_input(sample, weights);
    Vector m;
    if (start) {
        if (start->ambient() != sample.ambient()) throw DimensionError("start direction has the wrong dimension");
        m = start->coords();
    } else {
        const Vector ybar = weighted_mean(sample, weights);
        if (ybar.norm() < kDegenerateNorm)
            throw NumericalError("hybrid initialization: the sample mean vector is zero");
        m = ybar.normalized();
    }
    const int d = sample.dim();
    HybridState st{m, 0.0, 0.0};
    const Vector t0 = sample.rows() * st.m;
    st.rho = detail::maximize_rho(t0, weights, family, d, 0.0);
    st.ll = loglik_mrho(t0, weights, family, d, st.rho);

    FitResult out{to_params(family, st.m, st.rho), st.ll, 0, false, {st.ll}, Algorithm::Hybrid, 0};
    for (int it = 1; it <= options.max_iter; ++it) {
        const double previous = st.ll;
        st = hybrid_sweep(sample, weights, family, st);
        out.trace.push_back(st.ll);
        out.iterations = it;
        if (st.ll - previous < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.params = to_params(family, st.m, st.rho);
    out.loglik = loglik(sample, out.params, weights);
    out.trace.back() = out.loglik;
    return out;
}

FitResult fit_nr(const DirectionalSample& sample, Family family, const FitOptions& options, Weights weights,
                 const std::optional<Vector>& start) {
    check_fit_input(sample, weights);
    Vector mu = start ? *start : weighted_mean(sample, weights);
    if (mu.size() != sample.ambient()) throw DimensionError("start location has the wrong dimension");

    if (family == Family::PKB && mu.norm() < 1e-6) {
        // derivatives are singular near the origin; enter through one hybrid sweep
        const Vector ybar = weighted_mean(sample, weights);
        Vector m = ybar.norm() > kDegenerateNorm ? Vector(ybar.normalized()) : Vector(UnitVector::basis(sample.ambient(), 0).coords());
        HybridState st = hybrid_sweep(sample, weights, family, {m, 0.0, 0.0});
        mu = to_params(family, st.m, std::max(st.rho, 1e-6)).mu();
    }

    double ll = loglik(sample, {family, mu}, weights);
    FitResult out{{family, mu}, ll, 0, false, {ll}, Algorithm::NR, 0};

    for (int it = 1; it <= options.max_iter; ++it) {
        out.iterations = it;
        bool moved = false;
        try {
            const ScoreHessian sh = score_and_hessian(sample, {family, mu}, weights);
            Eigen::LDLT<Matrix> ldlt(sh.hessian);
            Vector step = -ldlt.solve(sh.score);
            if (ldlt.info() == Eigen::Success && step.allFinite()) {
                const bool concave = (ldlt.vectorD().array() < 0.0).all();
                // Newton decrement: predicted gain of the full step
                const double predicted = 0.5 * sh.score.dot(step);
                if (concave && predicted >= 0.0 && predicted < 1e-3 * options.tol) {
                    out.trace.push_back(ll);
                    out.converged = true;
                    break;
                }
                double scale = 1.0;
                for (int h = 0; h <= 20; ++h, scale *= 0.5) {
                    const Vector candidate = mu + scale * step;
                    const double ll_c = loglik(sample, {family, candidate}, weights);
                    if (std::isfinite(ll_c) && ll_c >= ll) {
                        mu = candidate;
                        moved = true;
                        break;
                    }
                }
            }
        } catch (const SingularityError&) {
            // fall through to the hybrid sweep
        }
        double ll_new;
        if (moved) {
            ll_new = loglik(sample, {family, mu}, weights);
        } else {
            ++out.safeguard_steps;
            const double gamma = mu.norm();
            const Vector ybar = weighted_mean(sample, weights);
            Vector m = gamma > kDegenerateNorm ? Vector(mu / gamma)
                                               : (ybar.norm() > kDegenerateNorm ? Vector(ybar.normalized())
                                                                                : Vector(UnitVector::basis(sample.ambient(), 0).coords()));
            HybridState st = hybrid_sweep(sample, weights, family, {m, gamma_to_rho(gamma), ll});
            Vector cand = to_params(family, st.m, st.rho).mu();
            const double ll_c = loglik(sample, {family, cand}, weights);
            if (ll_c >= ll) mu = cand;
            ll_new = std::max(ll_c, ll);
        }
        out.trace.push_back(ll_new);
        const double gain = ll_new - ll;
        ll = ll_new;
        if (std::abs(gain) < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.params = SphericalParams(family, mu);
    out.loglik = ll;
    return out;
}

FitResult fit_mle(const DirectionalSample& sample, Family family, const FitOptions& options, Weights weights,
                  const std::optional<Vector>& start) {
    std::optional<FitResult> nr;
    try {
        nr = fit_nr(sample, family, options, weights, start);
        if (nr->converged) return *nr;
    } catch (const NumericalError&) {
    }
    std::optional<UnitVector> m0;
    if (nr && nr->params.gamma() > kDegenerateNorm) m0 = nr->params.m();
    FitResult hyb = fit_hybrid(sample, family, options, weights, m0);
    if (nr && nr->loglik > hyb.loglik) return *nr;
    return hyb;
}

}  // namespace sphdir
