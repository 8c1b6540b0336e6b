#pragma once

// Reference computations written from the classical definitions, independent of the library's
// parameterization and derivative code.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// log of 1 / |S^d|
inline double log_c(int d) {
    const double a = 0.5 * (d + 1);
    return std::lgamma(a) - std::log(2.0) - a * std::log(std::numbers::pi);
}

// |S^{k}| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
inline double sphere_area(int k) {
    const double a = 0.5 * (k + 1);
    return 2.0 * std::pow(std::numbers::pi, a) / std::tgamma(a);
}

// SC: C_d ((1 - rho^2) / (1 + rho^2 - 2 rho t))^d
inline double log_sc(double t, double rho, int d) {
    return log_c(d) + d * (std::log(1.0 - rho * rho) - std::log(1.0 + rho * rho - 2.0 * rho * t));
}

// PKB: C_d (1 - rho^2) / (1 + rho^2 - 2 rho t)^{(d+1)/2}
inline double log_pkb(double t, double rho, int d) {
    return log_c(d) + std::log(1.0 - rho * rho) - 0.5 * (d + 1) * std::log(1.0 + rho * rho - 2.0 * rho * t);
}

inline double log_density(bool pkb, double t, double rho, int d) {
    return pkb ? log_pkb(t, rho, d) : log_sc(t, rho, d);
}

// Location vector -> (m, rho) with rho = (sqrt(g^2+1) - 1) / g.
inline double rho_of(const Vec& mu) {
    const double g = mu.norm();
    return g == 0.0 ? 0.0 : (std::sqrt(g * g + 1.0) - 1.0) / g;
}

// Log-likelihood of rows of Y (n x D) at location mu, optionally weighted.
inline double loglik(bool pkb, const Mat& Y, const Vec& mu, const Vec& w = Vec()) {
    const double g = mu.norm();
    const double rho = rho_of(mu);
    const int d = static_cast<int>(Y.cols()) - 1;
    double total = 0.0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        const double t = g == 0.0 ? 0.0 : Y.row(i).dot(mu) / g;
        total += (w.size() ? w[i] : 1.0) * log_density(pkb, t, rho, d);
    }
    return total;
}

// Regression log-likelihood with mu_i = B' x_i; B is p x D.
inline double regression_loglik(bool pkb, const Mat& Y, const Mat& X, const Mat& B) {
    double total = 0.0;
    const int d = static_cast<int>(Y.cols()) - 1;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        const Vec mu = B.transpose() * X.row(i).transpose();
        const double g = mu.norm();
        const double t = Y.row(i).dot(mu) / g;
        total += log_density(pkb, t, rho_of(mu), d);
    }
    return total;
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-4) {
    const Eigen::Index n = x.size();
    Mat H(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            auto at = [&](double si, double sj) {
                Vec y = x;
                y[i] += si * h;
                y[j] += sj * h;
                return f(y);
            };
            H(i, j) = H(j, i) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
        }
    }
    return H;
}

inline double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(b.norm(), 1e-8); }

inline double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

// Density of t = y'm for y on S^d.
inline double t_marginal(bool pkb, double t, double rho, int d) {
    if (t <= -1.0 || t >= 1.0) return 0.0;
    return sphere_area(d - 1) * std::pow(1.0 - t * t, 0.5 * (d - 2)) * std::exp(log_density(pkb, t, rho, d));
}

// Chi-square goodness of fit of t-values against the marginal on `bins` equal-width bins in t.
// Returns the p-value.
inline double t_marginal_gof(bool pkb, const std::vector<double>& t, double rho, int d, int bins = 40) {
    std::vector<double> expected(static_cast<std::size_t>(bins)), observed(static_cast<std::size_t>(bins), 0.0);
    const double width = 2.0 / bins;
    for (int b = 0; b < bins; ++b)
        expected[static_cast<std::size_t>(b)] =
            t.size() * integrate([&](double x) { return t_marginal(pkb, x, rho, d); }, -1.0 + b * width, -1.0 + (b + 1) * width);
    for (double v : t) {
        int b = static_cast<int>((v + 1.0) / width);
        b = std::clamp(b, 0, bins - 1);
        observed[static_cast<std::size_t>(b)] += 1.0;
    }
    // merge sparse bins from the left so every expected count is at least 5
    double stat = 0.0, acc_e = 0.0, acc_o = 0.0;
    int cells = 0;
    for (int b = 0; b < bins; ++b) {
        acc_e += expected[static_cast<std::size_t>(b)];
        acc_o += observed[static_cast<std::size_t>(b)];
        if (acc_e >= 5.0 || b == bins - 1) {
            stat += (acc_o - acc_e) * (acc_o - acc_e) / std::max(acc_e, 1e-300);
            ++cells;
            acc_e = acc_o = 0.0;
        }
    }
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(cells - 1), stat));
}

// Adjusted Rand index by explicit enumeration of all pairs.
inline double ari_bruteforce(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double both = 0, only_a = 0, only_b = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            only_a += sa;
            only_b += sb;
            total += 1;
        }
    const double expected = only_a * only_b / total;
    return (both - expected) / (0.5 * (only_a + only_b) - expected);
}

}  // namespace oracle
