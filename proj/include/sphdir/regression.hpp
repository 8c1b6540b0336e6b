#pragma once

#include "sphdir/mle.hpp"

namespace sphdir {

// n x p design; construction checks full column rank.
class DesignMatrix {
public:
    explicit DesignMatrix(Matrix rows);
    // Prepends a column of ones to the covariates.
    static DesignMatrix with_intercept(const Matrix& covariates);

    const Matrix& rows() const noexcept { return rows_; }
    Eigen::Index n() const noexcept { return rows_.rows(); }
    Eigen::Index p() const noexcept { return rows_.cols(); }
    DesignMatrix subset(const std::vector<Eigen::Index>& idx) const;

private:
    Matrix rows_;
};

struct RegressionModel {
    Family family = Family::SC;
    Matrix B;          // p x (d+1); mu_i = B' x_i
    Vector beta_vec;   // column-major vec(B): index k p + j holds B(j, k)
    double loglik = 0.0;
    Matrix fisher;     // per-observation observed information at B
    Vector se;         // sqrt(diag((n fisher)^-1)), same ordering as beta_vec
    bool converged = false;
    int iterations = 0;
    bool used_simplex = false;    // NR failed and Nelder-Mead produced the estimate
    bool near_singular = false;   // PKB fit with some gamma_i < 1e-8
    bool fisher_valid = true;     // false when the information matrix was not PSD
};

struct PredictedDirections {
    RowMatrix directions;  // n x (d+1)
    Vector gammas;
};

double regression_loglik(const DirectionalSample& Y, const DesignMatrix& X, const Matrix& B, Family family);

// Gradient in vec(B) and Hessian sum_i H_i (x) x_i x_i', where H_i is the per-observation Hessian in mu_i.
ScoreHessian regression_score_hessian(const DirectionalSample& Y, const DesignMatrix& X, const Matrix& B,
                                      Family family);

RegressionModel fit_regression(const DirectionalSample& Y, const DesignMatrix& X, Family family,
                               const FitOptions& options = {});

// Closed-form observed information (per observation), evaluated at model.B.
// Throws ConvergenceError when the result is not PSD within 1e-8.
Matrix fisher_information(const RegressionModel& model, const DirectionalSample& Y, const DesignMatrix& X);

PredictedDirections predict(const RegressionModel& model, const DesignMatrix& X_new);

// Mean of y_i' yhat_i.
double fit_metric(const DirectionalSample& Y, const PredictedDirections& Yhat);

// One response per design row from family(mu_i = B' x_i).
DirectionalSample simulate_regression(const Matrix& B, const DesignMatrix& X, Family family, RngStream& rng);

}  // namespace sphdir
