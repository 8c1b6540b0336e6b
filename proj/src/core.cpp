#include "sphdir/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace sphdir {

std::string_view to_string(Family family) {
    return family == Family::SC ? "sc" : "pkb";
}

Family parse_family(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "sc") return Family::SC;
    if (lower == "pkb" || lower == "pkbd") return Family::PKB;
    throw ParseError("unknown family '" + std::string(text) + "' (expected sc or pkb)");
}

UnitVector::UnitVector(Vector coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) throw DimensionError("unit vector needs at least 2 coordinates");
    const double norm = coords_.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormCheckTol) {
        std::ostringstream os;
        os << "vector is not on the unit sphere (norm " << norm << ")";
        throw GeometryError(os.str());
    }
}

UnitVector UnitVector::project(const Vector& coords) {
    if (coords.size() < 2) throw DimensionError("unit vector needs at least 2 coordinates");
    const double norm = coords.norm();
    if (!(norm >= kDegenerateNorm) || !std::isfinite(norm))
        throw GeometryError("cannot project a zero vector onto the sphere");
    return UnitVector(coords / norm, Trusted{});
}

UnitVector UnitVector::basis(Eigen::Index ambient, Eigen::Index axis) {
    if (ambient < 2 || axis < 0 || axis >= ambient) throw DimensionError("invalid basis vector");
    Vector e = Vector::Zero(ambient);
    e[axis] = 1.0;
    return UnitVector(std::move(e), Trusted{});
}

DirectionalSample::DirectionalSample(RowMatrix rows, OnInvalid policy) : rows_(std::move(rows)) {
    if (rows_.rows() < 1) throw DimensionError("a directional sample needs at least one row");
    if (rows_.cols() < 2) throw DimensionError("directional data need at least 2 columns");
    for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
        const double norm = rows_.row(i).norm();
        if (policy == OnInvalid::Project) {
            if (!(norm >= kDegenerateNorm) || !std::isfinite(norm)) {
                std::ostringstream os;
                os << "row " << i + 1 << " has zero norm and cannot be projected";
                throw GeometryError(os.str());
            }
            rows_.row(i) /= norm;
        } else if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormCheckTol) {
            std::ostringstream os;
            os << "row " << i + 1 << " is not on the unit sphere (norm " << norm << ")";
            throw GeometryError(os.str());
        }
    }
}

DirectionalSample DirectionalSample::subset(const std::vector<Eigen::Index>& idx) const {
    RowMatrix out(static_cast<Eigen::Index>(idx.size()), rows_.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows_.row(idx[k]);
    return DirectionalSample(std::move(out));
}

DirectionalSample DirectionalSample::concat(const DirectionalSample& a, const DirectionalSample& b) {
    if (a.ambient() != b.ambient()) throw DimensionError("cannot concatenate samples of different dimension");
    RowMatrix out(a.n() + b.n(), a.ambient());
    out.topRows(a.n()) = a.rows();
    out.bottomRows(b.n()) = b.rows();
    return DirectionalSample(std::move(out));
}

double gamma_to_rho(double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be non-negative");
    if (gamma == 0.0) return 0.0;
    if (std::isinf(gamma)) return 1.0;
    return gamma / (std::sqrt(gamma * gamma + 1.0) + 1.0);
}

double rho_to_gamma(double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
    return 2.0 * rho / ((1.0 - rho) * (1.0 + rho));
}

Normalized normalize(const Vector& mu) {
    if (mu.size() < 2) throw DimensionError("location vector needs at least 2 coordinates");
    const double gamma = mu.norm();
    if (!(gamma >= kDegenerateNorm)) throw GeometryError("degenerate location: direction undefined for a zero vector");
    return {UnitVector::project(mu), gamma};
}

SphericalParams::SphericalParams(Family family, Vector mu) : family_(family), mu_(std::move(mu)) {
    if (mu_.size() < 2) throw DimensionError("location vector needs at least 2 coordinates");
    if (!mu_.allFinite()) throw DomainError("location vector has non-finite entries");
}

SphericalParams SphericalParams::from_direction(Family family, const UnitVector& m, double rho) {
    return {family, m.coords() * rho_to_gamma(rho)};
}

SphericalParams SphericalParams::uniform(Family family, Eigen::Index ambient) {
    return {family, Vector::Zero(ambient)};
}

UnitVector SphericalParams::m() const { return normalize(mu_).m; }

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), stream_(stream_index), engine_(make_engine(seed, stream_index)) {}

double RngStream::uniform() {
    // 53 random bits mapped to (0, 1)
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
}

std::uint64_t RngStream::below(std::uint64_t upper) {
    if (upper == 0) throw DomainError("below(0) is empty");
    std::uniform_int_distribution<std::uint64_t> dist(0, upper - 1);
    return dist(engine_);
}

RngStream RngStream::child(std::uint64_t key) const { return {seed_, hash_combine(stream_, key)}; }

DirectionalSample sample_uniform_sphere(int d, Eigen::Index n, RngStream& rng) {
    if (d < 1) throw DomainError("sphere dimension d must be at least 1");
    if (n < 1) throw DomainError("sample size must be at least 1");
    RowMatrix rows(n, d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        double norm2 = 0.0;
        do {
            for (int j = 0; j <= d; ++j) rows(i, j) = rng.normal();
            norm2 = rows.row(i).squaredNorm();
        } while (norm2 < 1e-200);
        rows.row(i) /= std::sqrt(norm2);
    }
    return DirectionalSample(std::move(rows));
}

UnitVector random_unit_vector(int d, RngStream& rng) {
    return UnitVector::project(sample_uniform_sphere(d, 1, rng).row(0));
}

Matrix reflection_to(const UnitVector& target) {
    const Eigen::Index D = target.ambient();
    Vector v = -target.coords();
    v[0] += 1.0;  // v = e0 - target
    const double vv = v.squaredNorm();
    Matrix Q = Matrix::Identity(D, D);
    if (vv < 1e-30) return Q;
    Q -= 2.0 * v * v.transpose() / vv;
    return Q;
}

Matrix random_orthogonal(Eigen::Index ambient, RngStream& rng) {
    Matrix G(ambient, ambient);
    for (Eigen::Index i = 0; i < ambient; ++i)
        for (Eigen::Index j = 0; j < ambient; ++j) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < ambient; ++j)
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
    return Q;
}

UnitVector rotated_basis(Eigen::Index ambient, double theta) {
    Vector v = Vector::Zero(ambient);
    v[0] = std::cos(theta);
    v[1] = std::sin(theta);
    return UnitVector::project(v);
}

}  // namespace sphdir
