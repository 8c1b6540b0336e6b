#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "sphdir/density.hpp"

using namespace sphdir;
using Catch::Approx;

TEST_CASE("normalizing constant is the reciprocal sphere area") {
    CHECK(log_norm_const(2) == Approx(-std::log(4.0 * std::acos(-1.0))));
    for (int d = 1; d <= 20; ++d) CHECK(log_norm_const(d) == Approx(-std::log(oracle::sphere_area(d))).epsilon(1e-13));
}

TEST_CASE("unconstrained-location forms equal the classical densities") {
    RngStream rng(11, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(8));
        const UnitVector m = random_unit_vector(d, rng);
        const UnitVector y = random_unit_vector(d, rng);
        const double rho = 0.95 * rng.uniform();
        const double t = y.coords().dot(m.coords());
        for (Family f : {Family::SC, Family::PKB}) {
            const SphericalParams p = SphericalParams::from_direction(f, m, rho);
            const double expected = oracle::log_density(f == Family::PKB, t, rho, d);
            CHECK(logpdf(y, p) == Approx(expected).epsilon(1e-11).margin(1e-11));
            CHECK(std::log(pdf(y, p)) == Approx(expected).epsilon(1e-11).margin(1e-11));
        }
        CHECK(sc_logpdf_mrho(y, m, rho) == Approx(oracle::log_sc(t, rho, d)).epsilon(1e-12).margin(1e-12));
        CHECK(pkb_logpdf_mrho(y, m, rho) == Approx(oracle::log_pkb(t, rho, d)).epsilon(1e-12).margin(1e-12));
    }
}

TEST_CASE("zero location gives the uniform density for both families") {
    const SphericalParams u_sc = SphericalParams::uniform(Family::SC, 4);
    const SphericalParams u_pkb = SphericalParams::uniform(Family::PKB, 4);
    RngStream rng(2, 0);
    const UnitVector y = random_unit_vector(3, rng);
    CHECK(logpdf(y, u_sc) == Approx(log_norm_const(3)));
    CHECK(logpdf(y, u_pkb) == Approx(log_norm_const(3)));
}

TEST_CASE("densities integrate to one on the 2-sphere") {
    for (double rho : {0.0, 0.3, 0.6, 0.9}) {
        for (Family f : {Family::SC, Family::PKB}) {
            const UnitVector m = UnitVector::basis(3, 0);
            const SphericalParams p = SphericalParams::from_direction(f, m, rho);
            // library density along the meridian, integrated with the S^2 area element 2 pi dt
            auto along = [&](double t) {
                Vector y(3);
                y << t, std::sqrt(std::max(0.0, 1.0 - t * t)), 0.0;
                return 2.0 * std::acos(-1.0) * pdf(UnitVector::project(y), p);
            };
            CHECK(oracle::integrate(along, -1.0, 1.0) == Approx(1.0).margin(1e-4));
        }
    }
}

TEST_CASE("densities integrate to one in higher dimensions") {
    for (int d : {3, 5, 9}) {
        for (double rho : {0.2, 0.7}) {
            for (bool pkb : {false, true}) {
                const double mass = oracle::integrate([&](double t) { return oracle::t_marginal(pkb, t, rho, d); }, -1.0, 1.0);
                CHECK(mass == Approx(1.0).margin(1e-6));
            }
        }
    }
}

TEST_CASE("log density difference") {
    RngStream rng(3, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(9));
        const UnitVector m = random_unit_vector(d, rng);
        const UnitVector y = random_unit_vector(d, rng);
        const double rho = 0.95 * rng.uniform();
        const double t = y.coords().dot(m.coords());
        const double expected = oracle::log_sc(t, rho, d) - oracle::log_pkb(t, rho, d);
        CHECK(log_density_difference(y, m, rho) == Approx(expected).margin(1e-10));
        CHECK(log_density_difference_closed(t, rho, d) == Approx(expected).margin(1e-10));
    }
    SECTION("d = 1 gives identical densities") {
        CHECK(log_density_difference_closed(0.3, 0.7, 1) == 0.0);
    }
    SECTION("increasing in t") {
        double previous = -1e300;
        for (double t = -1.0; t <= 1.0; t += 0.05) {
            const double v = log_density_difference_closed(t, 0.5, 4);
            CHECK(v > previous);
            previous = v;
        }
    }
    SECTION("worked value") {
        // d = 3, rho = 0.5, t = 0: (1)[2 log 0.75 - log 1.25]
        CHECK(log_density_difference_closed(0.0, 0.5, 3) == Approx(2.0 * std::log(0.75) - std::log(1.25)));
    }
}

TEST_CASE("row-wise log density matches pointwise evaluation") {
    RngStream rng(4, 0);
    const DirectionalSample s = sample_uniform_sphere(3, 50, rng);
    Vector mu(4);
    mu << 1.0, -2.0, 0.5, 0.3;
    for (Family f : {Family::SC, Family::PKB}) {
        const SphericalParams p(f, mu);
        const Vector lp = logpdf_rows(s, p);
        for (Eigen::Index i = 0; i < s.n(); ++i) CHECK(lp[i] == Approx(logpdf(UnitVector::project(s.row(i)), p)));
    }
}

TEST_CASE("density is maximal at the mode and decreases away from it") {
    const UnitVector m = UnitVector::basis(3, 0);
    for (Family f : {Family::SC, Family::PKB}) {
        const SphericalParams p = SphericalParams::from_direction(f, m, 0.6);
        double previous = 1e300;
        for (double angle = 0.0; angle <= 3.14; angle += 0.2) {
            Vector y(3);
            y << std::cos(angle), std::sin(angle), 0.0;
            const double v = logpdf(UnitVector::project(y), p);
            CHECK(v < previous);
            previous = v;
        }
    }
}
