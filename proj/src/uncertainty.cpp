#include "fsqkd/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fsqkd/errors.hpp"
#include "fsqkd/parallel.hpp"

namespace fsqkd {

namespace {

constexpr std::size_t kStatDims = 8;
constexpr std::size_t kChunk = 64;

constexpr std::size_t nominal_slot(std::size_t dim) { return dim % 2; }

ClassRates averaged(const ClassRates& a, const ClassRates& b) {
    ClassRates out;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        out.detect[k] = 0.5 * (a.detect[k] + b.detect[k]);
        out.error[k] = 0.5 * (a.error[k] + b.error[k]);
    }
    return out;
}

ProtocolParams estimator_params(const ProtocolParams& nominal,
                                const IntensityConfiguration& config) {
    ProtocolParams p = nominal;
    p.mu[0] = config[static_cast<std::size_t>(UncertainDim::Est_mu1)];
    p.mu[1] = config[static_cast<std::size_t>(UncertainDim::Est_mu2)];
    return p;
}

struct Candidate {
    std::int64_t ell = std::numeric_limits<std::int64_t>::max();
    std::uint64_t index = 0;
    KeyLengthResult result;
    IntensityConfiguration config{};
};

bool better(const Candidate& a, const Candidate& b) {
    return a.ell < b.ell || (a.ell == b.ell && a.index < b.index);
}

}  // namespace

void IntensityUncertaintyModel::validate() const {
    if (!std::isfinite(f) || f < 0.0 || f >= 0.5) {
        throw ConfigError("uncertainty.f must satisfy 0 <= f < 0.5");
    }
    if (grid_points_per_dim < 1) {
        throw ConfigError("uncertainty.grid_points must be >= 1");
    }
    nominal.validate();
    const double mu1_lo = nominal.mu[0] * (1.0 - f);
    const double mu2_hi = nominal.mu[1] * (1.0 + f);
    if (!(mu1_lo > mu2_hi + nominal.mu[2]) || !(nominal.mu[1] * (1.0 - f) > nominal.mu[2])) {
        throw ConfigError("uncertainty.f too large: estimator intensities lose their ordering");
    }
}

std::vector<double> candidate_intensities(double mu, double f, int points) {
    if (points <= 1) return {mu};
    std::vector<double> out(static_cast<std::size_t>(points));
    const double lo = mu * (1.0 - f);
    const double hi = mu * (1.0 + f);
    const int mid = (points - 1) / 2;
    for (int i = 0; i < points; ++i) {
        // Keep the endpoints and (for odd counts) the nominal value exact.
        if (i == 0) out[0] = lo;
        else if (i == points - 1) out[static_cast<std::size_t>(i)] = hi;
        else if (points % 2 == 1 && i == mid) out[static_cast<std::size_t>(i)] = mu;
        else out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    }
    return out;
}

BlockCounts per_state_block_counts(const ProtocolParams& nominal,
                                   const IntensityConfiguration& config,
                                   const ChannelConditions& channel) {
    std::array<ClassRates, 4> state_rates;
    for (std::size_t s = 0; s < 4; ++s) {
        const IntensityArray mu{config[2 * s], config[2 * s + 1], nominal.mu[2]};
        state_rates[s] = class_rates(mu, channel);
    }
    const ClassRates x = averaged(state_rates[0], state_rates[1]);
    const ClassRates z = averaged(state_rates[2], state_rates[3]);
    return counts_from_rates(nominal.pax, nominal.pbx, nominal.p_mu, x, z, channel.pulses());
}

KeyLengthResult evaluate_configuration(const ProtocolParams& nominal,
                                       const IntensityConfiguration& config,
                                       const ChannelConditions& channel, const SecurityParams& sec,
                                       const EcModel& ec) {
    const BlockCounts counts = per_state_block_counts(nominal, config, channel);
    return secure_key_length(counts, estimator_params(nominal, config), sec, ec);
}

WorstCaseResult worst_case_key_length(const IntensityUncertaintyModel& model,
                                      const ChannelConditions& channel, const SecurityParams& sec,
                                      const EcModel& ec, unsigned threads) {
    model.validate();
    channel.validate();
    sec.validate();

    std::array<std::vector<double>, kUncertainDims> axes;
    for (std::size_t d = 0; d < kUncertainDims; ++d) {
        const double mu = model.nominal.mu[nominal_slot(d)];
        axes[d] = model.varied[d] ? candidate_intensities(mu, model.f, model.grid_points_per_dim)
                                  : std::vector<double>{mu};
    }
    std::uint64_t stat_count = 1;
    for (std::size_t d = 0; d < kStatDims; ++d) stat_count *= axes[d].size();
    const std::size_t n1 = axes[8].size();
    const std::size_t n2 = axes[9].size();
    const std::uint64_t est_count = n1 * n2;

    const std::size_t chunks = static_cast<std::size_t>((stat_count + kChunk - 1) / kChunk);
    std::vector<Candidate> best(chunks);

    parallel_for(chunks, threads, [&](std::size_t chunk) {
        Candidate local;
        IntensityConfiguration config{};
        const std::uint64_t first = chunk * kChunk;
        const std::uint64_t last = std::min<std::uint64_t>(stat_count, first + kChunk);
        for (std::uint64_t s = first; s < last; ++s) {
            std::uint64_t rem = s;
            for (std::size_t d = kStatDims; d-- > 0;) {
                config[d] = axes[d][rem % axes[d].size()];
                rem /= axes[d].size();
            }
            const BlockCounts counts = per_state_block_counts(model.nominal, config, channel);
            const double lambda =
                ec_leakage(counts.total_n_x(), observed_qber(counts), sec.eps_c, ec);
            for (std::size_t i = 0; i < n1; ++i) {
                for (std::size_t j = 0; j < n2; ++j) {
                    config[8] = axes[8][i];
                    config[9] = axes[9][j];
                    Candidate c;
                    c.index = s * est_count + i * n2 + j;
                    c.result = secure_key_length_with_leakage(
                        counts, estimator_params(model.nominal, config), sec, lambda);
                    c.ell = c.result.ell;
                    if (better(c, local)) {
                        c.config = config;
                        local = std::move(c);
                    }
                }
            }
        }
        best[chunk] = std::move(local);
    });

    Candidate overall;
    for (Candidate& c : best) {
        if (better(c, overall)) overall = std::move(c);
    }
    WorstCaseResult out;
    out.min_ell = overall.ell;
    out.result = overall.result;
    out.argmin = overall.config;
    out.evaluations = stat_count * est_count;
    return out;
}

}  // namespace fsqkd
