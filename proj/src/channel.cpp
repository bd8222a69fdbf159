#include "fsqkd/channel.hpp"

#include <cmath>
#include <string>

#include "fsqkd/errors.hpp"

namespace fsqkd {

namespace {

void require(bool ok, const char* field, const char* rule) {
    if (!ok) {
        throw ConfigError(std::string(field) + " must satisfy " + rule);
    }
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void ChannelConditions::validate() const {
    require(finite(eta_loss_db) && eta_loss_db >= 0.0, "eta_loss_db", ">= 0");
    require(finite(p_ec) && p_ec >= 0.0 && p_ec < 0.5, "p_ec", "0 <= p_ec < 0.5");
    require(finite(qber_i) && qber_i >= 0.0 && qber_i < 0.5, "qber_i", "0 <= qber_i < 0.5");
    require(finite(p_ap) && p_ap >= 0.0 && p_ap < 1.0, "p_ap", "0 <= p_ap < 1");
    require(finite(f_s) && f_s > 0.0, "f_s", "> 0");
    require(finite(integration_time_s) && integration_time_s >= 0.0, "integration_time_s", ">= 0");
}

void ProtocolParams::validate() const {
    require(finite(pax) && pax > 0.0 && pax < 1.0, "pax", "0 < pax < 1");
    require(finite(pbx) && pbx > 0.0 && pbx < 1.0, "pbx", "0 < pbx < 1");
    for (double m : mu) {
        require(finite(m) && m >= 0.0, "mu", "finite and >= 0");
    }
    require(mu[0] > mu[1] && mu[1] > mu[2], "mu", "mu1 > mu2 > mu3");
    require(mu[0] > mu[1] + mu[2], "mu", "mu1 > mu2 + mu3");
    double sum = 0.0;
    for (double p : p_mu) {
        require(finite(p) && p > 0.0, "p_mu", "each probability > 0");
        sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "p_mu", "sum to 1");
}

BlockCounts& BlockCounts::operator+=(const BlockCounts& other) {
    for (std::size_t k = 0; k < kIntensities; ++k) {
        n_x[k] += other.n_x[k];
        n_z[k] += other.n_z[k];
        m_x[k] += other.m_x[k];
        m_z[k] += other.m_z[k];
    }
    return *this;
}

double transmittance_from_loss(double eta_loss_db) {
    if (!std::isfinite(eta_loss_db) || eta_loss_db < 0.0) {
        throw DomainError("transmittance_from_loss: loss must be finite and >= 0 dB");
    }
    return std::pow(10.0, -eta_loss_db / 10.0);
}

double detection_probability(double mu, double p_d, double p_ec, double p_ap) {
    // 1 - (1 - 2 p_ec) e^{-x}, rearranged to keep precision when p_d * mu is tiny.
    const double x = p_d * mu;
    return (1.0 + p_ap) * (-std::expm1(-x) + 2.0 * p_ec * std::exp(-x));
}

double error_probability(double mu, double p_d, double p_ec, double p_ap, double qber_i,
                         double detect) {
    return p_ec + 0.5 * p_ap * detect - qber_i * std::expm1(-p_d * mu);
}

ClassRates class_rates(const IntensityArray& mu, const ChannelConditions& channel) {
    const double p_d = transmittance_from_loss(channel.eta_loss_db);
    ClassRates rates;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        rates.detect[k] = detection_probability(mu[k], p_d, channel.p_ec, channel.p_ap);
        rates.error[k] = error_probability(mu[k], p_d, channel.p_ec, channel.p_ap, channel.qber_i,
                                           rates.detect[k]);
    }
    return rates;
}

namespace {

void fill_basis(double sift, const IntensityArray& p_mu, const ClassRates& rates, double pulses,
                IntensityArray& n, IntensityArray& m) {
    double weighted_detect = 0.0;
    double weighted_error = 0.0;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        weighted_detect += p_mu[k] * rates.detect[k];
        weighted_error += p_mu[k] * rates.error[k];
    }
    double n_total = 0.0;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        n[k] = sift * p_mu[k] * rates.detect[k] * pulses;
        n_total += n[k];
    }
    if (weighted_detect <= 0.0 || n_total <= 0.0) {
        m.fill(0.0);
        return;
    }
    const double m_total = weighted_error / weighted_detect * n_total;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        m[k] = m_total * (p_mu[k] * rates.detect[k] / weighted_detect);
    }
}

}  // namespace

BlockCounts counts_from_rates(double pax, double pbx, const IntensityArray& p_mu,
                              const ClassRates& x_rates, const ClassRates& z_rates,
                              double pulses) {
    BlockCounts counts;
    fill_basis(pax * pbx, p_mu, x_rates, pulses, counts.n_x, counts.m_x);
    fill_basis((1.0 - pax) * (1.0 - pbx), p_mu, z_rates, pulses, counts.n_z, counts.m_z);
    return counts;
}

BlockCounts expected_block_counts(const ProtocolParams& params, const ChannelConditions& channel) {
    const ClassRates rates = class_rates(params.mu, channel);
    return counts_from_rates(params.pax, params.pbx, params.p_mu, rates, rates, channel.pulses());
}

BlockCounts expected_block_counts(const ProtocolParams& params, std::span<const TimeSlot> slots) {
    BlockCounts total;
    for (const TimeSlot& slot : slots) {
        const ClassRates rates = class_rates(params.mu, slot.conditions);
        total += counts_from_rates(params.pax, params.pbx, params.p_mu, rates, rates,
                                   slot.conditions.f_s * slot.duration_s);
    }
    return total;
}

}  // namespace fsqkd
