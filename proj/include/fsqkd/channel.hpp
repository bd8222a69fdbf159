#pragma once

// Expected-value detection model for a three-intensity decoy BB84 link.
//
// All counts are real-valued expectations; nothing here samples. The
// model maps channel conditions (loss, extraneous clicks, intrinsic QBER,
// after-pulsing) and protocol settings to sifted detection and error counts
// per basis and per intensity class.

#include <array>
#include <span>

namespace fsqkd {

inline constexpr std::size_t kIntensities = 3;
using IntensityArray = std::array<double, kIntensities>;

inline constexpr double kDefaultAfterPulse = 1e-3;
inline constexpr double kDefaultRepetitionRate = 1e8;
inline constexpr double kDefaultVacuumIntensity = 1e-9;

struct ChannelConditions {
    double eta_loss_db = 0.0;         ///< total system loss [dB]
    double p_ec = 0.0;                ///< extraneous-count probability per pulse
    double qber_i = 0.0;              ///< intrinsic QBER
    double p_ap = kDefaultAfterPulse; ///< after-pulse probability
    double f_s = kDefaultRepetitionRate;
    double integration_time_s = 0.0;

    /// Throws ConfigError naming the first violated field.
    void validate() const;
    double pulses() const { return f_s * integration_time_s; }
};

/// Tunable protocol knobs. Index 0 is the signal, 1 the weak decoy, 2 the vacuum.
struct ProtocolParams {
    double pax = 0.5;  ///< Alice X-basis probability
    double pbx = 0.5;  ///< Bob X-basis probability
    IntensityArray mu{0.5, 0.1, kDefaultVacuumIntensity};
    IntensityArray p_mu{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    void validate() const;
    bool operator==(const ProtocolParams&) const = default;
};

struct BlockCounts {
    IntensityArray n_x{}, n_z{};
    IntensityArray m_x{}, m_z{};

    double total_n_x() const { return n_x[0] + n_x[1] + n_x[2]; }
    double total_n_z() const { return n_z[0] + n_z[1] + n_z[2]; }
    double total_m_x() const { return m_x[0] + m_x[1] + m_x[2]; }
    double total_m_z() const { return m_z[0] + m_z[1] + m_z[2]; }

    BlockCounts& operator+=(const BlockCounts& other);
};

/// Per-intensity click and error probabilities seen in one basis.
struct ClassRates {
    IntensityArray detect{};
    IntensityArray error{};
};

/// One stretch of constant channel conditions inside the integration window.
struct TimeSlot {
    double duration_s = 0.0;
    ChannelConditions conditions;
};

/// 10^(-dB/10). Throws DomainError for negative or non-finite input.
double transmittance_from_loss(double eta_loss_db);

/// Probability that a pulse of mean photon number `mu` produces a click,
/// including extraneous counts and after-pulsing.
double detection_probability(double mu, double p_d, double p_ec, double p_ap);

/// Probability that a pulse of mean photon number `mu` yields an erroneous bit.
/// `detect` must be detection_probability() for the same arguments.
double error_probability(double mu, double p_d, double p_ec, double p_ap, double qber_i,
                         double detect);

/// Click and error probabilities for each intensity class under `channel`.
ClassRates class_rates(const IntensityArray& mu, const ChannelConditions& channel);

/// Sifted counts for one slot of `pulses` transmissions given per-basis rates.
///
/// Basis errors total n_B * sum(p_k e_k) / sum(p_k D_k); they are shared out
/// between intensities with weights p_k D_k / sum(p_k D_k).
BlockCounts counts_from_rates(double pax, double pbx, const IntensityArray& p_mu,
                              const ClassRates& x_rates, const ClassRates& z_rates,
                              double pulses);

BlockCounts expected_block_counts(const ProtocolParams& params, const ChannelConditions& channel);

/// Accumulates counts over consecutive slots, each with its own conditions.
/// The `integration_time_s` of each slot's conditions is ignored in favour of
/// the slot duration.
BlockCounts expected_block_counts(const ProtocolParams& params, std::span<const TimeSlot> slots);

}  // namespace fsqkd
