#pragma once

// Worst-case key length when the sender's pulse intensities are only known
// to within a fractional bound f of their nominal values.

#include <array>
#include <cstdint>
#include <vector>

#include "fsqkd/channel.hpp"
#include "fsqkd/finite_key.hpp"

namespace fsqkd {

/// Varied intensities, in grid order. The first eight are the true mu1/mu2
/// of each prepared state; the last two are the pair the estimator assumes.
enum class UncertainDim : std::size_t {
    H_mu1, H_mu2, V_mu1, V_mu2, D_mu1, D_mu2, A_mu1, A_mu2, Est_mu1, Est_mu2,
};

inline constexpr std::size_t kUncertainDims = 10;
using IntensityConfiguration = std::array<double, kUncertainDims>;

struct IntensityUncertaintyModel {
    double f = 0.0;
    ProtocolParams nominal;
    int grid_points_per_dim = 3;
    /// Dimensions held at nominal are evaluated at a single point.
    std::array<bool, kUncertainDims> varied{true, true, true, true, true,
                                            true, true, true, true, true};

    void validate() const;
};

/// Candidate values for one nominal intensity: evenly spaced over
/// [mu(1-f), mu(1+f)], or just mu when the dimension is not varied.
std::vector<double> candidate_intensities(double mu, double f, int points);

struct WorstCaseResult {
    std::int64_t min_ell = 0;
    KeyLengthResult result;
    IntensityConfiguration argmin{};
    std::uint64_t evaluations = 0;
};

/// Expected counts when each prepared state carries its own intensities.
BlockCounts per_state_block_counts(const ProtocolParams& nominal,
                                   const IntensityConfiguration& config,
                                   const ChannelConditions& channel);

/// Key length for one grid point.
KeyLengthResult evaluate_configuration(const ProtocolParams& nominal,
                                       const IntensityConfiguration& config,
                                       const ChannelConditions& channel, const SecurityParams& sec,
                                       const EcModel& ec = {});

/// Minimum key length over the full Cartesian grid of the model. Ties go to
/// the first grid point in row-major order.
WorstCaseResult worst_case_key_length(const IntensityUncertaintyModel& model,
                                      const ChannelConditions& channel, const SecurityParams& sec,
                                      const EcModel& ec = {}, unsigned threads = 1);

}  // namespace fsqkd
