#pragma once

// Finite-key estimation chain: concentration corrections on the observed
// counts, decoy-state bounds on vacuum and single-photon events, the phase
// error in the key basis, error-correction leakage and the composable key
// length.

#include <cstdint>
#include <optional>
#include <string>

#include "fsqkd/channel.hpp"

namespace fsqkd {

inline constexpr double kDefaultEpsSecrecy = 1e-9;
inline constexpr double kDefaultEpsCorrectness = 1e-15;

struct SecurityParams {
    double eps_s = kDefaultEpsSecrecy;
    double eps_c = kDefaultEpsCorrectness;
    /// Concentration-bound exponent. ln(1 / (eps_s + eps_c)) unless overridden.
    double beta = 0.0;

    static SecurityParams from_epsilons(double eps_s, double eps_c);
    static SecurityParams defaults() { return from_epsilons(kDefaultEpsSecrecy, kDefaultEpsCorrectness); }

    void validate() const;
};

enum class EcMode {
    FiniteSize,  ///< binomial-quantile reconciliation estimate
    Efficiency,  ///< f_EC * n_X * h(Q)
};

struct EcModel {
    EcMode mode = EcMode::FiniteSize;
    double f_ec = 1.16;
};

enum class Side { Plus, Minus };

/// Why a key-length evaluation produced no key, if it did not.
enum class NoKeyReason {
    None,
    NoCounts,
    NoSinglePhotonZ,
    NoSinglePhotonX,
    PhaseErrorSaturated,
    NegativeLength,
};

const char* to_string(NoKeyReason reason);

struct ScaledBounds {
    IntensityArray lower{};
    IntensityArray upper{};
};

struct KeyLengthDiagnostics {
    ScaledBounds n_x, n_z, m_z;
    double tau0 = 0.0;
    double tau1 = 0.0;
    double s_z0 = 0.0;
    double s_z1 = 0.0;
    double v_z1 = 0.0;
    double n_x_total = 0.0;
};

struct KeyLengthResult {
    std::int64_t ell = 0;
    double s_x0 = 0.0;
    double s_x1 = 0.0;
    double phi_x = 0.5;
    double lambda_ec = 0.0;
    double qber_x = 0.0;
    /// The bracketed expression before flooring; continuous in the inputs.
    double raw_length = 0.0;
    NoKeyReason reason = NoKeyReason::None;
    KeyLengthDiagnostics diagnostics;
};

double binary_entropy(double x);

/// Chernoff-style deviation for an expected count `y`.
double chernoff_delta(double y, double beta, Side side);

/// (e^mu_k / p_k) (Y_k -/+ delta). Lower values are floored at zero.
ScaledBounds scaled_count_bounds(const IntensityArray& counts, const ProtocolParams& params,
                                 double beta);

/// sum_k p_k e^{-mu_k} mu_k^n / n!, for n in {0, 1}.
double decoy_tau(int photon_number, const ProtocolParams& params);

double vacuum_bound(const ScaledBounds& n, const ProtocolParams& params);

double single_photon_bound(const ScaledBounds& n, double s0, const ProtocolParams& params);

/// Upper bound on single-photon errors in the Z basis.
double single_photon_error_bound(const ScaledBounds& m_z, const ProtocolParams& params);

/// Statistical correction when inferring the X-basis phase error from Z.
double phase_error_fluctuation(double eps, double ratio, double s_z1, double s_x1);

/// min(0.5, v_z1/s_z1 + fluctuation). Empty when either single-photon bound
/// is zero, which means no key can be distilled.
std::optional<double> phase_error(double s_z1, double v_z1, double s_x1, const SecurityParams& sec);

/// Smallest integer k with P[Bin(n, p) <= k] >= eps, clamped to [0, floor(n)].
/// Real-valued n is accepted through the incomplete-beta form of the CDF.
double inverse_binomial_cdf(double eps, double n, double p);

double ec_leakage(double n_x, double qber_x, double eps_c, const EcModel& model = {});

/// X-basis error fraction of the counts, clamped to [0, 0.5].
double observed_qber(const BlockCounts& counts);

/// Full chain from counts to the secure key length.
KeyLengthResult secure_key_length(const BlockCounts& counts, const ProtocolParams& params,
                                  const SecurityParams& sec, const EcModel& ec = {});

/// Same as secure_key_length() with an externally computed leakage term.
KeyLengthResult secure_key_length_with_leakage(const BlockCounts& counts,
                                               const ProtocolParams& params,
                                               const SecurityParams& sec, double lambda_ec);

/// Convenience: expected counts followed by the estimation chain.
KeyLengthResult evaluate_key_length(const ProtocolParams& params, const ChannelConditions& channel,
                                    const SecurityParams& sec, const EcModel& ec = {});

}  // namespace fsqkd
