#include "sphdir/regression.hpp"

#include <cmath>
#include <sstream>

#include "sphdir/density.hpp"
#include "sphdir/optim.hpp"
#include "sphdir/sampling.hpp"

namespace sphdir {

namespace {

constexpr double kPkbSingularGamma = 1e-8;

void check_shapes(const DirectionalSample& Y, const DesignMatrix& X, const Matrix& B) {
    if (Y.n() != X.n()) throw DimensionError("response and design have different row counts");
    if (B.rows() != X.p() || B.cols() != Y.ambient()) throw DimensionError("coefficient matrix has the wrong shape");
}

Vector vec(const Matrix& B) { return Eigen::Map<const Vector>(B.data(), B.size()); }

Matrix unvec(const Vector& beta, Eigen::Index p, Eigen::Index D) { return Eigen::Map<const Matrix>(beta.data(), p, D); }

// Log density, gradient and Hessian in mu for one observation.
struct ObsTerms {
    double ll;
    Vector grad;
    Matrix hess;
};

ObsTerms obs_terms(const Vector& y, const Vector& mu, Family family, int d, bool second_order) {
    const Eigen::Index D = mu.size();
    const double g2 = mu.squaredNorm();
    const double s = std::sqrt(g2 + 1.0);
    const double kernel = s - y.dot(mu);
    const double k = detail::family_power(family, d);
    const Vector b = mu / s - y;

    ObsTerms out;
    out.ll = -k * std::log(kernel);
    out.grad = -k * b / kernel;
    if (second_order) {
        const Matrix A = (Matrix::Identity(D, D) - mu * mu.transpose() / (s * s)) / s;
        out.hess = -k * (A / kernel - b * b.transpose() / (kernel * kernel));
    }
    if (family == Family::PKB) {
        const double c = 0.5 * (d - 1);
        out.ll += c * std::log(0.5 * (s + 1.0));
        out.grad += c * mu / (s * (s + 1.0));
        if (second_order) {
            out.hess += c * (Matrix::Identity(D, D) / (s * (s + 1.0)) -
                             (2.0 * s + 1.0) / (s * s * s * (s + 1.0) * (s + 1.0)) * mu * mu.transpose());
        }
    }
    return out;
}

}  // namespace

DesignMatrix::DesignMatrix(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.cols() < 1) throw DimensionError("design matrix has no columns");
    if (rows_.rows() < rows_.cols()) throw DimensionError("design matrix has fewer rows than columns");
    if (!rows_.allFinite()) throw DomainError("design matrix contains non-finite entries");
    Eigen::ColPivHouseholderQR<Matrix> qr(rows_);
    if (qr.rank() < rows_.cols()) throw DimensionError("design matrix is rank deficient");
}

DesignMatrix DesignMatrix::with_intercept(const Matrix& covariates) {
    Matrix X(covariates.rows(), covariates.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(covariates.cols()) = covariates;
    return DesignMatrix(std::move(X));
}

DesignMatrix DesignMatrix::subset(const std::vector<Eigen::Index>& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), p());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows_.row(idx[i]);
    return DesignMatrix(std::move(out));
}

double regression_loglik(const DirectionalSample& Y, const DesignMatrix& X, const Matrix& B, Family family) {
    check_shapes(Y, X, B);
    const int d = Y.dim();
    const Matrix M = X.rows() * B;
    double ll = static_cast<double>(Y.n()) * log_norm_const(d);
    for (Eigen::Index i = 0; i < Y.n(); ++i) ll += obs_terms(Y.row(i), M.row(i).transpose(), family, d, false).ll;
    return ll;
}

ScoreHessian regression_score_hessian(const DirectionalSample& Y, const DesignMatrix& X, const Matrix& B,
                                      Family family) {
    check_shapes(Y, X, B);
    const int d = Y.dim();
    const Eigen::Index p = X.p();
    const Eigen::Index D = Y.ambient();
    const Matrix M = X.rows() * B;
    Matrix G = Matrix::Zero(p, D);
    Matrix H = Matrix::Zero(p * D, p * D);
    for (Eigen::Index i = 0; i < Y.n(); ++i) {
        const Vector x = X.rows().row(i).transpose();
        const ObsTerms t = obs_terms(Y.row(i), M.row(i).transpose(), family, d, true);
        G += x * t.grad.transpose();
        const Matrix xx = x * x.transpose();
        for (Eigen::Index k = 0; k < D; ++k)
            for (Eigen::Index l = 0; l < D; ++l) H.block(k * p, l * p, p, p) += t.hess(k, l) * xx;
    }
    return {vec(G), 0.5 * (H + H.transpose())};
}

Matrix fisher_information(const RegressionModel& model, const DirectionalSample& Y, const DesignMatrix& X) {
    check_shapes(Y, X, model.B);
    const int d = Y.dim();
    const Eigen::Index p = X.p();
    const Eigen::Index D = Y.ambient();
    const Eigen::Index P = p * D;
    const double n = static_cast<double>(Y.n());
    const Matrix M = X.rows() * model.B;

    Matrix sc = Matrix::Zero(P, P);
    Matrix extra = Matrix::Zero(P, P);
    for (Eigen::Index i = 0; i < Y.n(); ++i) {
        const Vector x = X.rows().row(i).transpose();
        const Vector mu = M.row(i).transpose();
        const Vector y = Y.row(i);
        const double g2 = mu.squaredNorm();
        const double s = std::sqrt(g2 + 1.0);
        const double kernel = s - y.dot(mu);
        const Matrix xx = x * x.transpose();
        Vector v(P), w(P);
        const Vector r = mu - s * y;
        for (Eigen::Index k = 0; k < D; ++k) {
            v.segment(k * p, p) = mu[k] * x;
            w.segment(k * p, p) = r[k] * x;
        }
        Matrix Ixx = Matrix::Zero(P, P);
        for (Eigen::Index k = 0; k < D; ++k) Ixx.block(k * p, k * p, p, p) = xx;

        sc += (Ixx - v * v.transpose() / (s * s)) / (s * kernel) - w * w.transpose() / ((g2 + 1.0) * kernel * kernel);
        if (model.family == Family::PKB)
            extra += -Ixx / (s * (s + 1.0)) + (2.0 * s + 1.0) / (s * s * s * (s + 1.0) * (s + 1.0)) * v * v.transpose();
    }
    Matrix info = (d / n) * sc;
    if (model.family == Family::PKB) info = (d + 1.0) / (2.0 * d) * info + (d - 1.0) / (2.0 * n) * extra;
    info = 0.5 * (info + info.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(info, Eigen::EigenvaluesOnly);
    const double smallest = eig.eigenvalues().minCoeff();
    if (smallest < -1e-8 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff())) {
        std::ostringstream os;
        os << "observed information is not positive semi-definite (min eigenvalue " << smallest << ")";
        throw ConvergenceError(os.str());
    }
    return info;
}

namespace {

struct NrOutcome {
    Vector beta;
    double ll;
    int iterations;
    bool converged;
};

NrOutcome regression_nr(const DirectionalSample& Y, const DesignMatrix& X, Family family, Vector beta,
                        const FitOptions& options) {
    const Eigen::Index p = X.p();
    const Eigen::Index D = Y.ambient();
    auto ll_at = [&](const Vector& b) { return regression_loglik(Y, X, unvec(b, p, D), family); };
    double ll = ll_at(beta);
    NrOutcome out{beta, ll, 0, false};
    for (int it = 1; it <= options.max_iter; ++it) {
        out.iterations = it;
        const ScoreHessian sh = regression_score_hessian(Y, X, unvec(beta, p, D), family);
        const Matrix neg = -sh.hessian;
        Eigen::LDLT<Matrix> ldlt(neg);
        Vector step;
        const bool concave = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
        if (concave) {
            step = ldlt.solve(sh.score);
        } else {
            // shift the curvature until it is positive definite
            const double shift = neg.diagonal().cwiseAbs().maxCoeff() * 1e-3 + 1e-8;
            double tau = shift;
            for (int tries = 0; tries < 60; ++tries, tau *= 4.0) {
                Eigen::LLT<Matrix> llt(neg + tau * Matrix::Identity(neg.rows(), neg.cols()));
                if (llt.info() == Eigen::Success) {
                    step = llt.solve(sh.score);
                    break;
                }
            }
            if (step.size() == 0) return out;
        }
        const double decrement = 0.5 * sh.score.dot(step);
        double scale = 1.0;
        bool accepted = false;
        double ll_new = ll;
        Vector candidate;
        for (int h = 0; h <= 20; ++h, scale *= 0.5) {
            candidate = beta + scale * step;
            ll_new = ll_at(candidate);
            if (std::isfinite(ll_new) && ll_new >= ll) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.converged = concave && decrement < options.tol;
            return out;
        }
        const double gain = ll_new - ll;
        beta = candidate;
        ll = ll_new;
        out.beta = beta;
        out.ll = ll;
        if (gain < options.tol || (concave && decrement < 1e-3 * options.tol)) {
            out.converged = concave;
            if (out.converged) return out;
        }
    }
    return out;
}

bool any_gamma_below(const DesignMatrix& X, const Matrix& B, double threshold) {
    const Matrix M = X.rows() * B;
    return (M.rowwise().norm().array() < threshold).any();
}

}  // namespace

RegressionModel fit_regression(const DirectionalSample& Y, const DesignMatrix& X, Family family,
                               const FitOptions& options) {
    if (Y.n() != X.n()) throw DimensionError("response and design have different row counts");
    if (Y.n() <= X.p()) throw DomainError("regression needs more observations than covariates");
    const Eigen::Index p = X.p();
    const Eigen::Index D = Y.ambient();

    Vector start = Vector::Zero(p * D);
    if (family == Family::PKB) {
        const RegressionModel sc = fit_regression(Y, X, Family::SC, options);
        start = sc.beta_vec;
    }
    NrOutcome nr = regression_nr(Y, X, family, start, options);

    RegressionModel model;
    model.family = family;
    model.iterations = nr.iterations;
    Vector beta = nr.beta;
    double ll = nr.ll;
    model.converged = nr.converged;
    model.near_singular = family == Family::PKB && any_gamma_below(X, unvec(beta, p, D), kPkbSingularGamma);

    if (!nr.converged || model.near_singular) {
        auto objective = [&](const Vector& b) {
            const double v = regression_loglik(Y, X, unvec(b, p, D), family);
            return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
        };
        SimplexOptions so;
        so.max_evals = 4000 * p * D;
        const SimplexResult simplex = nelder_mead(objective, beta, so);
        if (-simplex.value >= ll) {
            beta = simplex.x;
            ll = -simplex.value;
        }
        model.used_simplex = true;
        model.converged = simplex.converged || nr.converged;
        model.iterations += static_cast<int>(simplex.evaluations);
    }

    model.B = unvec(beta, p, D);
    model.beta_vec = beta;
    model.loglik = ll;
    try {
        model.fisher = fisher_information(model, Y, X);
        const Matrix total = static_cast<double>(Y.n()) * model.fisher;
        Eigen::LDLT<Matrix> ldlt(total);
        const Matrix cov = ldlt.solve(Matrix::Identity(total.rows(), total.cols()));
        model.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    } catch (const ConvergenceError&) {
        model.fisher_valid = false;
        model.se = Vector::Constant(p * D, std::numeric_limits<double>::quiet_NaN());
    }
    return model;
}

PredictedDirections predict(const RegressionModel& model, const DesignMatrix& X_new) {
    if (X_new.p() != model.B.rows()) throw DimensionError("design has the wrong number of columns");
    const Matrix M = X_new.rows() * model.B;
    PredictedDirections out{RowMatrix(M.rows(), M.cols()), Vector(M.rows())};
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        const double g = M.row(i).norm();
        if (g < 1e-10) {
            std::ostringstream os;
            os << "predicted location of row " << i << " has no direction (|B'x| < 1e-10)";
            throw GeometryError(os.str());
        }
        out.directions.row(i) = M.row(i) / g;
        out.gammas[i] = g;
    }
    return out;
}

double fit_metric(const DirectionalSample& Y, const PredictedDirections& Yhat) {
    if (Y.n() != Yhat.directions.rows() || Y.ambient() != Yhat.directions.cols())
        throw DimensionError("responses and predictions have different shapes");
    if (Y.n() == 0) return 0.0;
    const double m = (Y.rows().array() * Yhat.directions.array()).rowwise().sum().mean();
    return std::clamp(m, -1.0, 1.0);
}

DirectionalSample simulate_regression(const Matrix& B, const DesignMatrix& X, Family family, RngStream& rng) {
    if (B.rows() != X.p()) throw DimensionError("coefficient matrix has the wrong shape");
    const Matrix M = X.rows() * B;
    RowMatrix rows(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        const SphericalParams params(family, M.row(i).transpose());
        rows.row(i) = sample(params, 1, rng).rows().row(0);
    }
    return DirectionalSample(std::move(rows), DirectionalSample::OnInvalid::Project);
}

}  // namespace sphdir
