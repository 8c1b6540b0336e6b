#pragma once

#include <cstdint>

#include "sphdir/core.hpp"

namespace sphdir {

struct SamplerDiagnostics {
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;
    double acceptance_rate() const {
        return proposals == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
    }
};

// Exact SC sampler: the Moebius-type map y = (1-rho^2)(u + rho m)/|u + rho m|^2 + rho m
// applied to uniform u. Consumes exactly n uniform directions.
DirectionalSample sample_sc(const SphericalParams& params, Eigen::Index n, RngStream& rng);

struct PkbSample {
    DirectionalSample sample;
    SamplerDiagnostics diagnostics;
};

// PKB rejection sampler with an angular central Gaussian envelope.
PkbSample sample_pkb(const SphericalParams& params, Eigen::Index n, RngStream& rng);

// Family-dispatched convenience wrapper.
DirectionalSample sample(const SphericalParams& params, Eigen::Index n, RngStream& rng);

// Envelope internals, exposed for diagnostics and tests.
struct PkbEnvelope {
    double lambda;     // 2 rho / (1 + rho^2)
    double beta;       // minimizer of omega_d(lambda, .)
    double omega;      // omega_d(lambda, beta)
    double log_bound;  // log max_q (1 - beta q^2) / (1 - lambda q)
    // Theoretical probability that one proposal is accepted.
    double acceptance_probability(double rho) const;
};

double pkb_omega(int d, double lambda, double beta);
PkbEnvelope pkb_envelope(int d, double rho);

}  // namespace sphdir
