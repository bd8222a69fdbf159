#pragma once

// Multi-start maximisation of the secure key length over the protocol
// parameters that a deployment is free to tune.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsqkd/channel.hpp"
#include "fsqkd/finite_key.hpp"

namespace fsqkd {

enum class Regime {
    Full,            ///< pax, p1, p2, mu1, mu2 free; pbx tied to pax
    FixedPbx,        ///< pbx fixed; pax, p1, p2, mu1, mu2 free
    FixedPbxAndMu,   ///< pbx and the intensity triple fixed; pax, p1, p2 free
};

const char* to_string(Regime regime);
Regime regime_from_string(const std::string& name);

struct SearchBounds {
    double prob_lo = 0.001;
    double prob_hi = 0.999;
    double mu_lo = 1e-4;
    double mu_hi = 1.0;
};

struct OptimizationSpec {
    Regime regime = Regime::Full;
    double pbx = 0.5;                          ///< used unless regime == Full
    /// mu1 and mu2 are used only for FixedPbxAndMu; mu3 (the vacuum) is
    /// never searched.
    IntensityArray mu{0.5, 0.1, kDefaultVacuumIntensity};
    SearchBounds bounds;
    int restarts = 8;
    std::uint64_t seed = 0;
    double tolerance = 1e-10;                  ///< relative objective spread for stopping
    double x_tolerance = 1e-5;                 ///< simplex diameter in search coordinates
    int max_evaluations = 2000;                ///< per restart
    unsigned threads = 1;                      ///< 0 = hardware concurrency
    EcModel ec;
    /// Extra starting points tried after the low-discrepancy ones.
    std::vector<ProtocolParams> warm_starts;

    void validate() const;
};

struct RestartTrace {
    ProtocolParams start;
    ProtocolParams best;
    std::int64_t ell = 0;
    double raw_length = 0.0;
    int evaluations = 0;
    bool converged = false;
};

struct OptimizationResult {
    ProtocolParams best_params;
    std::int64_t best_ell = 0;
    KeyLengthResult best_result;
    int evaluations = 0;
    std::vector<RestartTrace> trace;
};

/// Intensity ordering, intensity-sum and probability-simplex constraints.
bool feasible(const ProtocolParams& params);

/// Number of variables searched for a regime.
std::size_t free_dimension(Regime regime);

/// Maps unconstrained search coordinates to protocol parameters that satisfy
/// the search bounds. Exposed for testing.
ProtocolParams decode_search_point(const OptimizationSpec& spec, std::span<const double> u);

/// Inverse of decode_search_point() for parameters strictly inside the bounds.
std::vector<double> encode_search_point(const OptimizationSpec& spec, const ProtocolParams& params);

OptimizationResult optimize(const OptimizationSpec& spec, const ChannelConditions& channel,
                            const SecurityParams& sec);

}  // namespace fsqkd
