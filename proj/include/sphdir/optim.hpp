#pragma once

#include <functional>

#include "sphdir/core.hpp"

namespace sphdir {

struct ScalarOptimum {
    double x;
    double value;
};

// Brent maximization of a univariate function on [lo, hi].
ScalarOptimum brent_maximize(const std::function<double(double)>& f, double lo, double hi, int max_iter = 200);

struct SimplexOptions {
    double initial_step = 0.1;
    double ftol = 1e-10;  // stop when the simplex value spread falls below this
    long max_evals = 200000;
};

struct SimplexResult {
    Vector x;
    double value;
    long evaluations;
    bool converged;
};

// Nelder-Mead minimization (standard reflection/expansion/contraction/shrink coefficients).
SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start,
                          const SimplexOptions& options = {});

}  // namespace sphdir
