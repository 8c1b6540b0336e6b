#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sphdir/mixtures.hpp"
#include "sphdir/mle.hpp"
#include "sphdir/sampling.hpp"

using namespace sphdir;
using Catch::Approx;

namespace {

struct Draw {
    Vector p;
    std::vector<SphericalParams> comps;
    LabeledDraw data;
};

Draw random_mixture(Family f, int d, int K, Eigen::Index n, RngStream& rng) {
    const Vector p = Vector::Constant(K, 1.0 / K);
    std::vector<SphericalParams> comps;
    for (int j = 0; j < K; ++j)
        comps.push_back(SphericalParams::from_direction(f, random_unit_vector(d, rng), 0.7 + 0.2 * rng.uniform()));
    LabeledDraw data = sample_mixture(p, comps, n, rng);
    return {p, std::move(comps), std::move(data)};
}

// Naive responsibilities straight from the densities.
Matrix naive_e_step(const DirectionalSample& Y, const Vector& p, const std::vector<SphericalParams>& comps) {
    Matrix W(Y.n(), static_cast<Eigen::Index>(comps.size()));
    for (Eigen::Index i = 0; i < Y.n(); ++i) {
        for (std::size_t j = 0; j < comps.size(); ++j) {
            const SphericalParams& c = comps[j];
            const double t = Y.rows().row(i).dot(c.m().coords());
            W(i, static_cast<Eigen::Index>(j)) =
                p[static_cast<Eigen::Index>(j)] * std::exp(oracle::log_density(c.family() == Family::PKB, t, c.rho(), Y.dim()));
        }
        W.row(i) /= W.row(i).sum();
    }
    return W;
}

EmOptions quick(int starts = 3) {
    EmOptions o;
    o.n_starts = starts;
    return o;
}

}  // namespace

TEST_CASE("E-step matches naive responsibilities") {
    RngStream rng(501, 0);
    for (Family f : {Family::SC, Family::PKB}) {
        const Draw m = random_mixture(f, 3, 3, 300, rng);
        Vector p(3);
        p << 0.2, 0.5, 0.3;
        const Matrix W = e_step(m.data.Y, p, m.comps);
        CHECK((W - naive_e_step(m.data.Y, p, m.comps)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((W.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("E-step special cases") {
    RngStream rng(502, 0);
    const Draw m = random_mixture(Family::SC, 2, 1, 50, rng);
    const Matrix W1 = e_step(m.data.Y, Vector::Ones(1), m.comps);
    CHECK((W1.array() == 1.0).all());

    std::vector<SphericalParams> same(2, m.comps[0]);
    Vector p(2);
    p << 0.3, 0.7;
    const Matrix W2 = e_step(m.data.Y, p, same);
    CHECK((W2.col(0).array() - 0.3).abs().maxCoeff() < 1e-12);
    CHECK((W2.col(1).array() - 0.7).abs().maxCoeff() < 1e-12);
}

TEST_CASE("M-step with one-hot and uniform responsibilities") {
    RngStream rng(503, 0);
    for (Family f : {Family::SC, Family::PKB}) {
        const Draw m = random_mixture(f, 2, 2, 400, rng);
        const Eigen::Index n = m.data.Y.n();
        Matrix W = Matrix::Zero(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) W(i, m.data.labels[static_cast<std::size_t>(i)] - 1) = 1.0;
        const MStepResult r = m_step(m.data.Y, W, f);
        for (int j = 0; j < 2; ++j) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = 0; i < n; ++i)
                if (m.data.labels[static_cast<std::size_t>(i)] == j + 1) idx.push_back(i);
            CHECK(r.p[j] == Approx(static_cast<double>(idx.size()) / n).epsilon(1e-12));
            const FitResult direct = fit_nr(m.data.Y.subset(idx), f);
            CHECK((r.components[static_cast<std::size_t>(j)].mu() - direct.params.mu()).norm() < 1e-5);
        }

        const MStepResult u = m_step(m.data.Y, Matrix::Constant(n, 2, 0.5), f);
        const FitResult pooled = fit_nr(m.data.Y, f);
        CHECK(u.p[0] == Approx(0.5));
        for (const SphericalParams& c : u.components) CHECK((c.mu() - pooled.params.mu()).norm() < 1e-5);
    }
}

TEST_CASE("M-step reports an empty component") {
    RngStream rng(504, 0);
    const Draw m = random_mixture(Family::SC, 2, 1, 50, rng);
    Matrix W = Matrix::Zero(50, 2);
    W.col(0).setOnes();
    CHECK_THROWS_AS(m_step(m.data.Y, W, Family::SC), ComponentCollapse);
}

TEST_CASE("K = 1 mixture equals the single-sample MLE") {
    RngStream rng(505, 0);
    for (Family f : {Family::SC, Family::PKB}) {
        const Draw m = random_mixture(f, 4, 1, 300, rng);
        const MixtureModel model = em_fit(m.data.Y, 1, f, quick(), RngStream(1, 0));
        const FitResult direct = fit_nr(m.data.Y, f);
        CHECK((model.components[0].mu() - direct.params.mu()).norm() < 1e-4);
        CHECK(std::abs(model.loglik - direct.loglik) < 1e-6);
        const double n = 300.0, k = 4 + 1;
        CHECK(model.bic == Approx(-2.0 * direct.loglik + k * std::log(n)).epsilon(1e-10));
    }
}

TEST_CASE("EM never decreases the log-likelihood") {
    RngStream rng(506, 0);
    int runs = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const Family f = rep % 2 == 0 ? Family::SC : Family::PKB;
        const int d = 2 + rep % 4, K = 2 + rep % 3;
        const Draw m = random_mixture(f, d, K, 150, rng);
        EmOptions o = quick(1);
        MixtureModel model;
        try {
            model = em_fit(m.data.Y, K, f, o, rng.child(static_cast<std::uint64_t>(rep)));
        } catch (const NumericalError&) {
            continue;
        }
        ++runs;
        for (std::size_t t = 1; t < model.trace.size(); ++t) CHECK(model.trace[t] >= model.trace[t - 1] - 1e-8);
        CHECK((model.W.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
        CHECK(model.p.sum() == Approx(1.0));
        CHECK(model.loglik == Approx(mixture_loglik(m.data.Y, model.p, model.components)).epsilon(1e-10));
    }
    CHECK(runs >= 95);
}

TEST_CASE("model selection on a single tight cluster picks K = 1") {
    RngStream rng(507, 0);
    const DirectionalSample Y =
        sample(SphericalParams::from_direction(Family::SC, random_unit_vector(2, rng), 0.9), 500, rng);
    const SelectionResult s = select_k(Y, Family::SC, 4, quick(), RngStream(2, 0));
    CHECK(s.best_bic == 1);
    CHECK(s.best_icl == 1);
    CHECK(s.rows.size() == 4);
}

TEST_CASE("fitted mixtures cluster as well as the true mixture") {
    RngStream rng(508, 0);
    for (Family f : {Family::SC, Family::PKB}) {
        const Draw m = random_mixture(f, 5, 3, 600, rng);
        const SelectionResult s = select_k(m.data.Y, f, 5, quick(), RngStream(3, 0));
        CHECK(s.best_bic == 3);
        const double bayes = adjusted_rand_index(map_assignments(naive_e_step(m.data.Y, m.p, m.comps)), m.data.labels);
        const ClusteringResult c = cluster(s.model(s.best_bic));
        CHECK(adjusted_rand_index(c.assignments, m.data.labels) > bayes - 0.03);
    }
}

TEST_CASE("adjusted Rand index") {
    const std::vector<int> a{1, 1, 2, 2, 3, 3, 3};
    CHECK(adjusted_rand_index(a, a) == Approx(1.0));
    CHECK(adjusted_rand_index(a, {7, 7, 5, 5, 0, 0, 0}) == Approx(1.0));
    CHECK(adjusted_rand_index(std::vector<int>(8, 1), {1, 1, 2, 2, 3, 3, 4, 4}) == Approx(0.0).margin(1e-12));

    RngStream rng(509, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 5 + rng.below(40);
        std::vector<int> x(n), y(n);
        const int kx = 1 + static_cast<int>(rng.below(4)), ky = 2 + static_cast<int>(rng.below(4));
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(kx)));
            y[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(ky)));
        }
        const double oracle_value = oracle::ari_bruteforce(x, y);
        if (!std::isfinite(oracle_value)) continue;
        CHECK(adjusted_rand_index(x, y) == Approx(oracle_value).margin(1e-12));
        std::vector<int> xr = x;
        for (int& v : xr) v = 10 - 3 * v;
        CHECK(adjusted_rand_index(xr, y) == Approx(oracle_value).margin(1e-12));
        CHECK(adjusted_rand_index(y, x) == Approx(oracle_value).margin(1e-12));
    }
}

TEST_CASE("spherical k-means labels and determinism") {
    RngStream rng(510, 0);
    const Draw m = random_mixture(Family::SC, 3, 3, 300, rng);
    RngStream a(4, 0), b(4, 0);
    const std::vector<int> la = spherical_kmeans(m.data.Y, 3, a), lb = spherical_kmeans(m.data.Y, 3, b);
    CHECK(la == lb);
    CHECK(*std::min_element(la.begin(), la.end()) == 0);
    CHECK(*std::max_element(la.begin(), la.end()) == 2);
    CHECK_THROWS_AS(spherical_kmeans(m.data.Y, 0, a), DomainError);
}

TEST_CASE("EM is invariant to the order of the observations") {
    RngStream rng(511, 0);
    const Draw m = random_mixture(Family::SC, 2, 2, 300, rng);
    const MixtureModel a = em_fit(m.data.Y, 2, Family::SC, quick(), RngStream(5, 0));
    std::vector<Eigen::Index> perm(300);
    for (Eigen::Index i = 0; i < 300; ++i) perm[static_cast<std::size_t>(i)] = 299 - i;
    const MixtureModel b = em_fit(m.data.Y.subset(perm), 2, Family::SC, quick(), RngStream(5, 0));
    CHECK(a.loglik == Approx(b.loglik).epsilon(1e-6));
}

TEST_CASE("mixture errors") {
    RngStream rng(512, 0);
    const Draw m = random_mixture(Family::SC, 2, 1, 5, rng);
    CHECK_THROWS_AS(em_fit(m.data.Y, 0, Family::SC, quick(), RngStream(1, 0)), DomainError);
    CHECK_THROWS_AS(em_fit(m.data.Y, 5, Family::SC, quick(), RngStream(1, 0)), DomainError);
    CHECK_THROWS_AS(e_step(m.data.Y, Vector::Ones(2), m.comps), DimensionError);
    CHECK(mixture_parameter_count(3, 2) == 11);
}
