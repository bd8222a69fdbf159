#include "fsqkd/finite_key.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "fsqkd/errors.hpp"

namespace fsqkd {

SecurityParams SecurityParams::from_epsilons(double eps_s, double eps_c) {
    SecurityParams sec;
    sec.eps_s = eps_s;
    sec.eps_c = eps_c;
    sec.beta = std::log(1.0 / (eps_s + eps_c));
    sec.validate();
    return sec;
}

void SecurityParams::validate() const {
    if (!(eps_s > 0.0 && eps_s < 1.0)) throw ConfigError("eps_s must lie in (0, 1)");
    if (!(eps_c > 0.0 && eps_c < 1.0)) throw ConfigError("eps_c must lie in (0, 1)");
    if (!(std::isfinite(beta) && beta >= 0.0)) throw ConfigError("beta must be finite and >= 0");
}

const char* to_string(NoKeyReason reason) {
    switch (reason) {
        case NoKeyReason::None: return "none";
        case NoKeyReason::NoCounts: return "no_counts";
        case NoKeyReason::NoSinglePhotonZ: return "no_single_photon_z";
        case NoKeyReason::NoSinglePhotonX: return "no_single_photon_x";
        case NoKeyReason::PhaseErrorSaturated: return "phase_error_saturated";
        case NoKeyReason::NegativeLength: return "negative_length";
    }
    return "unknown";
}

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("binary_entropy: argument must lie in [0, 1]");
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double chernoff_delta(double y, double beta, Side side) {
    if (side == Side::Plus) {
        return beta + std::sqrt(2.0 * beta * y + beta * beta);
    }
    return 0.5 * beta + std::sqrt(2.0 * beta * y + 0.25 * beta * beta);
}

ScaledBounds scaled_count_bounds(const IntensityArray& counts, const ProtocolParams& params,
                                 double beta) {
    ScaledBounds out;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        if (!(params.p_mu[k] > 0.0)) {
            throw ConfigError("intensity probabilities must be > 0");
        }
        const double scale = std::exp(params.mu[k]) / params.p_mu[k];
        const double y = counts[k];
        out.lower[k] = std::max(0.0, scale * (y - chernoff_delta(y, beta, Side::Minus)));
        out.upper[k] = scale * (y + chernoff_delta(y, beta, Side::Plus));
    }
    return out;
}

double decoy_tau(int photon_number, const ProtocolParams& params) {
    if (photon_number != 0 && photon_number != 1) {
        throw DomainError("decoy_tau: photon number must be 0 or 1");
    }
    double tau = 0.0;
    for (std::size_t k = 0; k < kIntensities; ++k) {
        const double poisson = std::exp(-params.mu[k]);
        tau += params.p_mu[k] * (photon_number == 0 ? poisson : poisson * params.mu[k]);
    }
    return tau;
}

double vacuum_bound(const ScaledBounds& n, const ProtocolParams& params) {
    const auto& mu = params.mu;
    if (!(mu[1] > mu[2])) {
        throw ConfigError("vacuum bound requires mu2 > mu3");
    }
    const double value = decoy_tau(0, params) * (mu[1] * n.lower[2] - mu[2] * n.upper[1]) /
                         (mu[1] - mu[2]);
    return std::max(0.0, value);
}

double single_photon_bound(const ScaledBounds& n, double s0, const ProtocolParams& params) {
    const auto& mu = params.mu;
    const double denom = mu[0] * (mu[1] - mu[2]) - mu[1] * mu[1] + mu[2] * mu[2];
    if (!(denom > 0.0)) {
        throw ConfigError("single-photon bound requires mu1 (mu2 - mu3) > mu2^2 - mu3^2");
    }
    const double tau0 = decoy_tau(0, params);
    const double tau1 = decoy_tau(1, params);
    const double multi = (mu[1] * mu[1] - mu[2] * mu[2]) / (mu[0] * mu[0]);
    const double value =
        tau1 * mu[0] * (n.lower[1] - n.upper[2] - multi * (n.upper[0] - s0 / tau0)) / denom;
    return std::max(0.0, value);
}

double single_photon_error_bound(const ScaledBounds& m_z, const ProtocolParams& params) {
    const auto& mu = params.mu;
    const double value =
        decoy_tau(1, params) * (m_z.upper[1] - m_z.lower[2]) / (mu[1] - mu[2]);
    return std::max(0.0, value);
}

double phase_error_fluctuation(double eps, double ratio, double s_z1, double s_x1) {
    if (ratio <= 0.0 || ratio >= 1.0) return 0.0;
    const double spread = ratio * (1.0 - ratio);
    const double sum = s_z1 + s_x1;
    const double prod = s_z1 * s_x1;
    const double scale = sum * spread / (prod * std::numbers::ln2);
    const double arg = sum / (prod * spread) * (21.0 / eps) * (21.0 / eps);
    if (arg <= 1.0) return 0.0;
    return std::sqrt(scale * std::log2(arg));
}

std::optional<double> phase_error(double s_z1, double v_z1, double s_x1,
                                  const SecurityParams& sec) {
    if (!(s_z1 > 0.0) || !(s_x1 > 0.0)) return std::nullopt;
    const double ratio = std::max(0.0, v_z1) / s_z1;
    if (ratio >= 0.5) return 0.5;
    const double phi = ratio + phase_error_fluctuation(sec.eps_s, ratio, s_z1, s_x1);
    if (!std::isfinite(phi)) return std::nullopt;
    return std::min(0.5, phi);
}

namespace {

// P[Bin(n, p) <= k] for integer k in [0, floor(n)].
double binomial_cdf(double k, double n, double p) {
    if (k >= n) return 1.0;
    return boost::math::ibeta(n - k, k + 1.0, 1.0 - p);
}

}  // namespace

double inverse_binomial_cdf(double eps, double n, double p) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("inverse_binomial_cdf: eps must lie in (0, 1)");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("inverse_binomial_cdf: p must lie in [0, 1]");
    if (!(std::isfinite(n) && n >= 0.0)) throw DomainError("inverse_binomial_cdf: n must be >= 0");
    const double top = std::floor(n);
    if (top <= 0.0 || p == 0.0) return 0.0;
    if (p == 1.0) return top;
    if (binomial_cdf(0.0, n, p) >= eps) return 0.0;
    if (binomial_cdf(top, n, p) < eps) return top;

    // Normal approximation for a starting bracket, widened until it holds.
    const double sd = std::sqrt(n * p * (1.0 - p));
    const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * eps);
    const double guess = std::clamp(std::floor(n * p + z * sd), 0.0, top);
    double width = std::max(16.0, 0.05 * sd);
    double lo = std::max(0.0, guess - width);
    while (lo > 0.0 && binomial_cdf(lo, n, p) >= eps) {
        width *= 2.0;
        lo = std::max(0.0, guess - width);
    }
    double hi = std::min(top, guess + width);
    while (binomial_cdf(hi, n, p) < eps) {
        width *= 2.0;
        hi = std::min(top, guess + width);
    }
    if (lo == 0.0 && binomial_cdf(0.0, n, p) >= eps) return 0.0;
    // Invariant: cdf(lo) < eps <= cdf(hi).
    while (hi - lo > 1.0) {
        const double mid = std::floor(0.5 * (lo + hi));
        if (binomial_cdf(mid, n, p) >= eps) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double ec_leakage(double n_x, double qber_x, double eps_c, const EcModel& model) {
    if (!(qber_x >= 0.0 && qber_x <= 0.5)) throw DomainError("ec_leakage: QBER must lie in [0, 0.5]");
    if (!(n_x >= 0.0)) throw DomainError("ec_leakage: n_X must be >= 0");
    if (n_x == 0.0) return 0.0;
    if (model.mode == EcMode::Efficiency) {
        return model.f_ec * n_x * binary_entropy(qber_x);
    }
    if (qber_x == 0.0) return 0.0;
    const double log_ratio = std::log2((1.0 - qber_x) / qber_x);
    const double quantile = inverse_binomial_cdf(eps_c, n_x, 1.0 - qber_x);
    const double value = n_x * binary_entropy(qber_x) +
                         (n_x * (1.0 - qber_x) - quantile + 1.0) * log_ratio -
                         0.5 * std::log2(n_x) - std::log2(1.0 / eps_c);
    return std::max(0.0, value);
}

namespace {

double composable_overhead(const SecurityParams& sec) {
    return 6.0 * std::log2(21.0 / sec.eps_s) + std::log2(2.0 / sec.eps_c);
}

}  // namespace

double observed_qber(const BlockCounts& counts) {
    const double n = counts.total_n_x();
    if (n <= 0.0) return 0.0;
    return std::clamp(counts.total_m_x() / n, 0.0, 0.5);
}

KeyLengthResult secure_key_length_with_leakage(const BlockCounts& counts,
                                               const ProtocolParams& params,
                                               const SecurityParams& sec, double lambda_ec) {
    KeyLengthResult r;
    auto& d = r.diagnostics;
    r.lambda_ec = lambda_ec;
    r.qber_x = observed_qber(counts);
    d.n_x_total = counts.total_n_x();
    const double overhead = composable_overhead(sec);

    if (!(d.n_x_total > 0.0) || !(counts.total_n_z() > 0.0)) {
        r.raw_length = -lambda_ec - overhead;
        r.reason = NoKeyReason::NoCounts;
        return r;
    }

    d.tau0 = decoy_tau(0, params);
    d.tau1 = decoy_tau(1, params);
    d.n_x = scaled_count_bounds(counts.n_x, params, sec.beta);
    d.n_z = scaled_count_bounds(counts.n_z, params, sec.beta);
    d.m_z = scaled_count_bounds(counts.m_z, params, sec.beta);

    r.s_x0 = vacuum_bound(d.n_x, params);
    r.s_x1 = single_photon_bound(d.n_x, r.s_x0, params);
    d.s_z0 = vacuum_bound(d.n_z, params);
    d.s_z1 = single_photon_bound(d.n_z, d.s_z0, params);
    d.v_z1 = single_photon_error_bound(d.m_z, params);

    const auto phi = phase_error(d.s_z1, d.v_z1, r.s_x1, sec);
    if (!phi) {
        r.phi_x = 0.5;
        r.reason = d.s_z1 > 0.0 ? NoKeyReason::NoSinglePhotonX : NoKeyReason::NoSinglePhotonZ;
    } else {
        r.phi_x = *phi;
    }

    r.raw_length = r.s_x0 + r.s_x1 * (1.0 - binary_entropy(r.phi_x)) - lambda_ec - overhead;
    if (!std::isfinite(r.raw_length)) {
        r.raw_length = -lambda_ec - overhead;
        r.reason = NoKeyReason::NoSinglePhotonZ;
        return r;
    }
    if (r.reason != NoKeyReason::None) return r;

    const double floored = std::floor(r.raw_length);
    if (floored <= 0.0) {
        r.reason = r.phi_x >= 0.5 ? NoKeyReason::PhaseErrorSaturated : NoKeyReason::NegativeLength;
        return r;
    }
    r.ell = static_cast<std::int64_t>(floored);
    return r;
}

KeyLengthResult secure_key_length(const BlockCounts& counts, const ProtocolParams& params,
                                  const SecurityParams& sec, const EcModel& ec) {
    const double lambda = ec_leakage(counts.total_n_x(), observed_qber(counts), sec.eps_c, ec);
    return secure_key_length_with_leakage(counts, params, sec, lambda);
}

KeyLengthResult evaluate_key_length(const ProtocolParams& params, const ChannelConditions& channel,
                                    const SecurityParams& sec, const EcModel& ec) {
    return secure_key_length(expected_block_counts(params, channel), params, sec, ec);
}

}  // namespace fsqkd
