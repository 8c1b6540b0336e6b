#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sphdir/errors.hpp"

namespace sphdir {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kUnitNormCheckTol = 1e-10;
inline constexpr double kUnitNormBuildTol = 1e-12;
inline constexpr double kDegenerateNorm = 1e-12;

enum class Family { SC, PKB };

std::string_view to_string(Family family);
// Accepts "sc" / "pkb" in any case; throws ParseError otherwise.
Family parse_family(std::string_view text);

// A point on S^d stored as d+1 coordinates.
class UnitVector {
public:
    // Validates |x| = 1 within kUnitNormCheckTol.
    explicit UnitVector(Vector coords);
    // Renormalizes; throws GeometryError on a zero vector.
    static UnitVector project(const Vector& coords);
    // Unit basis vector e_axis in R^{ambient}.
    static UnitVector basis(Eigen::Index ambient, Eigen::Index axis);

    const Vector& coords() const noexcept { return coords_; }
    Eigen::Index ambient() const noexcept { return coords_.size(); }
    int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
    double operator[](Eigen::Index i) const { return coords_[i]; }

private:
    struct Trusted {};
    UnitVector(Vector coords, Trusted) : coords_(std::move(coords)) {}
    Vector coords_;
};

// n points on a common S^d, one per row.
class DirectionalSample {
public:
    enum class OnInvalid { Reject, Project };

    explicit DirectionalSample(RowMatrix rows, OnInvalid policy = OnInvalid::Reject);

    Eigen::Index n() const noexcept { return rows_.rows(); }
    Eigen::Index ambient() const noexcept { return rows_.cols(); }
    int dim() const noexcept { return static_cast<int>(rows_.cols()) - 1; }
    const RowMatrix& rows() const noexcept { return rows_; }
    Vector row(Eigen::Index i) const { return rows_.row(i).transpose(); }

    // Sample mean vector (not normalized).
    Vector mean() const { return rows_.colwise().mean().transpose(); }

    // Rows selected by index, in the given order.
    DirectionalSample subset(const std::vector<Eigen::Index>& idx) const;
    static DirectionalSample concat(const DirectionalSample& a, const DirectionalSample& b);

private:
    RowMatrix rows_;
};

struct Normalized {
    UnitVector m;
    double gamma;
};

// rho = (sqrt(gamma^2+1) - 1) / gamma, written in the cancellation-free form gamma / (sqrt(gamma^2+1) + 1).
double gamma_to_rho(double gamma);
// gamma = 2 rho / (1 - rho^2).
double rho_to_gamma(double rho);
Normalized normalize(const Vector& mu);

// One SC or PKB law. The unconstrained location mu is stored; (m, rho) is derived.
class SphericalParams {
public:
    SphericalParams(Family family, Vector mu);
    static SphericalParams from_direction(Family family, const UnitVector& m, double rho);
    static SphericalParams uniform(Family family, Eigen::Index ambient);

    Family family() const noexcept { return family_; }
    const Vector& mu() const noexcept { return mu_; }
    Eigen::Index ambient() const noexcept { return mu_.size(); }
    int dim() const noexcept { return static_cast<int>(mu_.size()) - 1; }
    double gamma() const { return mu_.norm(); }
    double rho() const { return gamma_to_rho(gamma()); }
    // Throws GeometryError when gamma is below kDegenerateNorm.
    UnitVector m() const;

    SphericalParams with_family(Family family) const { return {family, mu_}; }

private:
    Family family_;
    Vector mu_;
};

// Reproducible random stream identified by (seed, stream_index). Two streams with
// the same pair produce the same variates regardless of which thread draws them.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return stream_; }

    double uniform();  // U(0,1), never exactly 0
    double normal();
    double gamma(double shape);
    std::uint64_t next_u64() { return engine_(); }
    // Uniform integer in [0, upper).
    std::uint64_t below(std::uint64_t upper);

    // Independent child stream; children of distinct keys never overlap in practice.
    RngStream child(std::uint64_t key) const;

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

DirectionalSample sample_uniform_sphere(int d, Eigen::Index n, RngStream& rng);
UnitVector random_unit_vector(int d, RngStream& rng);

// Orthogonal matrix (Householder reflection) with Q * e_0 = target.
Matrix reflection_to(const UnitVector& target);
// Haar-distributed orthogonal matrix of size ambient x ambient.
Matrix random_orthogonal(Eigen::Index ambient, RngStream& rng);
// Unit vector at angle theta (radians) from e_0 inside the (e_0, e_1) plane.
UnitVector rotated_basis(Eigen::Index ambient, double theta);

}  // namespace sphdir
