#include "sphdir/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/tools/minima.hpp>

namespace sphdir {

ScalarOptimum brent_maximize(const std::function<double(double)>& f, double lo, double hi, int max_iter) {
    auto negated = [&](double x) {
        const double v = f(x);
        return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
    };
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    const int bits = std::numeric_limits<double>::digits / 2;
    auto [x, v] = boost::math::tools::brent_find_minima(negated, lo, hi, bits, iters);
    return {x, -v};
}

SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start,
                          const SimplexOptions& options) {
    const Eigen::Index k = start.size();
    std::vector<Vector> pts(static_cast<std::size_t>(k + 1), start);
    std::vector<double> vals(static_cast<std::size_t>(k + 1));
    long evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    for (Eigen::Index j = 0; j < k; ++j) {
        const double h = start[j] != 0.0 ? options.initial_step * std::max(1.0, std::abs(start[j])) : options.initial_step;
        pts[static_cast<std::size_t>(j + 1)][j] += h;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

    std::vector<std::size_t> order(pts.size());
    bool converged = false;
    while (evals < options.max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        if (std::abs(vals[worst] - vals[best]) <= options.ftol * (1.0 + std::abs(vals[best]))) {
            converged = true;
            break;
        }
        Vector centroid = Vector::Zero(k);
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (i != worst) centroid += pts[i];
        centroid /= static_cast<double>(k);

        const Vector reflected = centroid + (centroid - pts[worst]);
        const double fr = eval(reflected);
        if (fr < vals[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                pts[worst] = expanded;
                vals[worst] = fe;
            } else {
                pts[worst] = reflected;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = reflected;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                          : Vector(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = contracted;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    const auto idx = static_cast<std::size_t>(it - vals.begin());
    return {pts[idx], vals[idx], evals, converged};
}

}  // namespace sphdir
