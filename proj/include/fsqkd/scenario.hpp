#pragma once

// Batch analyses over environmental conditions: key-length surfaces, loss
// budgets, key rate against integration time and the sifting equivalence
// between asymmetric and symmetric basis choices.

#include <cstdint>
#include <span>
#include <vector>

#include "fsqkd/channel.hpp"
#include "fsqkd/finite_key.hpp"
#include "fsqkd/optimizer.hpp"

namespace fsqkd {

enum class RegimeKind {
    Fixed,      ///< evaluate `fixed` as given
    Optimized,  ///< run the optimizer described by `optimization`
    WorstCase,  ///< nominal parameters, then the intensity-uncertainty minimum
};

const char* to_string(RegimeKind kind);

/// How protocol parameters are chosen at each point of an analysis.
struct ScenarioRegime {
    RegimeKind kind = RegimeKind::Optimized;
    ProtocolParams fixed;
    OptimizationSpec optimization;
    EcModel ec;
    /// WorstCase only.
    double f = 0.0;
    int grid_points_per_dim = 3;
    /// WorstCase only: optimize the nominal point (with `optimization`, at
    /// f = 0) before the worst-case search; otherwise `fixed` is the nominal.
    bool optimize_nominal = true;

    void validate() const;
};

struct PointResult {
    ProtocolParams params;
    KeyLengthResult result;
};

/// One key-length answer under `regime`. `threads` is passed to whatever
/// inner parallel loop the regime has.
PointResult evaluate_point(const ScenarioRegime& regime, const ChannelConditions& channel,
                           const SecurityParams& sec, unsigned threads = 1);

/// `count` evenly spaced values from start to stop inclusive.
std::vector<double> linspace(double start, double stop, int count);

struct SweepSpec {
    std::vector<double> eta_loss_db{0.0};
    std::vector<double> log10_pec{-7.0};
    std::vector<double> qber_i{0.01};
    std::vector<double> tau_s{1800.0};
    /// Supplies p_ap and f_s; its loss, p_ec, QBER and time are overwritten.
    ChannelConditions base;
    ScenarioRegime regime;

    void validate() const;
};

struct SweepRow {
    double eta_loss_db = 0.0;
    double log10_pec = 0.0;
    double qber_i = 0.0;
    double tau_s = 0.0;
    ProtocolParams params;
    KeyLengthResult result;
};

/// Rows ordered with eta_loss_db outermost, then log10_pec, qber_i, tau_s.
std::vector<SweepRow> sweep(const SweepSpec& spec, const SecurityParams& sec, unsigned threads = 1);

struct LossBudgetQuery {
    /// Required key length; 0 means any positive key.
    std::int64_t target_bits = 0;
    /// Everything except the loss, which is searched.
    ChannelConditions conditions;
    ScenarioRegime regime;
    double resolution_db = 0.1;
    double min_loss_db = 0.0;
    double max_loss_db = 60.0;

    void validate() const;
};

struct LossBudget {
    bool has_budget = false;
    double eta_loss_db = 0.0;  ///< meaningful only when has_budget
    std::int64_t ell = 0;      ///< key length at eta_loss_db
    bool scanned = false;      ///< bisection gave up and a grid scan was used
    int probes = 0;
};

bool meets_target(std::int64_t ell, std::int64_t target_bits);

/// Largest loss, to within the resolution, whose key length meets the target.
LossBudget max_loss(const LossBudgetQuery& query, const SecurityParams& sec, unsigned threads = 1);

struct SkrPoint {
    double tau_s = 0.0;
    std::int64_t ell = 0;
    double skr_bits_per_minute = 0.0;
};

/// Secret key rate in bits per minute for each integration time.
std::vector<SkrPoint> skr_vs_time(std::span<const double> times_s,
                                  const ChannelConditions& conditions,
                                  const ScenarioRegime& regime, const SecurityParams& sec,
                                  unsigned threads = 1);

struct SiftingEquivalence {
    double k = 0.0;        ///< X:Z sifted-count ratio
    double f = 0.0;        ///< sifted fraction with (pax, pbx)
    double f_prime = 0.0;  ///< sifted fraction with the symmetric choice
    double p_x = 0.0;      ///< symmetric basis probability giving the same ratio
};

/// Throws DomainError unless both probabilities lie strictly inside (0, 1).
SiftingEquivalence sifting_equivalence(double pax, double pbx);

}  // namespace fsqkd
