#include "fsqkd/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "fsqkd/errors.hpp"
#include "fsqkd/nelder_mead.hpp"
#include "fsqkd/parallel.hpp"

namespace fsqkd {

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::Full: return "full";
        case Regime::FixedPbx: return "fixed_pbx";
        case Regime::FixedPbxAndMu: return "fixed_pbx_and_mu";
    }
    return "unknown";
}

Regime regime_from_string(const std::string& name) {
    if (name == "full") return Regime::Full;
    if (name == "fixed_pbx") return Regime::FixedPbx;
    if (name == "fixed_pbx_and_mu") return Regime::FixedPbxAndMu;
    throw ConfigError("unknown regime '" + name + "' (expected full, fixed_pbx, fixed_pbx_and_mu)");
}

void OptimizationSpec::validate() const {
    const auto& b = bounds;
    if (!(b.prob_lo > 0.0 && b.prob_lo < b.prob_hi && b.prob_hi < 1.0 && 3.0 * b.prob_lo < 1.0)) {
        throw ConfigError("probability bounds must satisfy 0 < lo < hi < 1 and 3 lo < 1");
    }
    if (!(b.mu_lo > 0.0 && b.mu_lo < b.mu_hi)) {
        throw ConfigError("intensity bounds must satisfy 0 < lo < hi");
    }
    if (!(mu[2] >= 0.0 && mu[2] < b.mu_lo)) {
        throw ConfigError("vacuum intensity mu3 must lie in [0, intensity lower bound)");
    }
    if (regime != Regime::Full && !(pbx > 0.0 && pbx < 1.0)) {
        throw ConfigError("fixed pbx must lie in (0, 1)");
    }
    if (regime == Regime::FixedPbxAndMu) {
        if (!(mu[0] > mu[1] && mu[1] > mu[2] && mu[0] > mu[1] + mu[2])) {
            throw ConfigError("fixed intensities must satisfy mu1 > mu2 > mu3 and mu1 > mu2 + mu3");
        }
    }
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (max_evaluations < 1) throw ConfigError("max_evaluations must be >= 1");
    if (!(tolerance >= 0.0) || !(x_tolerance > 0.0)) throw ConfigError("tolerances must be >= 0");
}

bool feasible(const ProtocolParams& p) {
    auto open_unit = [](double x) { return std::isfinite(x) && x > 0.0 && x < 1.0; };
    if (!open_unit(p.pax) || !open_unit(p.pbx)) return false;
    for (double m : p.mu) {
        if (!std::isfinite(m) || m < 0.0) return false;
    }
    if (!(p.mu[0] > p.mu[1] && p.mu[1] > p.mu[2] && p.mu[0] > p.mu[1] + p.mu[2])) return false;
    double sum = 0.0;
    for (double q : p.p_mu) {
        if (!open_unit(q)) return false;
        sum += q;
    }
    return std::abs(sum - 1.0) <= 1e-9;
}

std::size_t free_dimension(Regime regime) { return regime == Regime::FixedPbxAndMu ? 3 : 5; }

namespace {

constexpr double kMaxLogit = 30.0;

double sigmoid(double u) {
    u = std::clamp(u, -kMaxLogit, kMaxLogit);
    return 1.0 / (1.0 + std::exp(-u));
}

double logit(double s) { return std::clamp(std::log(s / (1.0 - s)), -kMaxLogit, kMaxLogit); }

double mu1_floor(const OptimizationSpec& spec) { return 2.0 * spec.bounds.mu_lo + spec.mu[2]; }

double mu2_floor(const OptimizationSpec& spec) { return std::max(spec.bounds.mu_lo, spec.mu[2]); }

}  // namespace

ProtocolParams decode_search_point(const OptimizationSpec& spec, std::span<const double> u) {
    const auto& b = spec.bounds;
    ProtocolParams p;
    p.pax = b.prob_lo + (b.prob_hi - b.prob_lo) * sigmoid(u[0]);
    p.pbx = spec.regime == Regime::Full ? p.pax : spec.pbx;

    // Softmax over (u1, u2, 0) keeps every intensity probability above prob_lo.
    const double a = std::clamp(u[1], -kMaxLogit, kMaxLogit);
    const double c = std::clamp(u[2], -kMaxLogit, kMaxLogit);
    const double top = std::max({a, c, 0.0});
    const double w1 = std::exp(a - top), w2 = std::exp(c - top), w3 = std::exp(-top);
    const double free_mass = 1.0 - 3.0 * b.prob_lo;
    p.p_mu[0] = b.prob_lo + free_mass * w1 / (w1 + w2 + w3);
    p.p_mu[1] = b.prob_lo + free_mass * w2 / (w1 + w2 + w3);
    p.p_mu[2] = 1.0 - p.p_mu[0] - p.p_mu[1];

    p.mu[2] = spec.mu[2];
    if (spec.regime == Regime::FixedPbxAndMu) {
        p.mu[0] = spec.mu[0];
        p.mu[1] = spec.mu[1];
    } else {
        const double lo1 = mu1_floor(spec);
        p.mu[0] = lo1 + (b.mu_hi - lo1) * sigmoid(u[3]);
        const double lo2 = mu2_floor(spec);
        const double hi2 = p.mu[0] - p.mu[2];
        p.mu[1] = lo2 + (hi2 - lo2) * sigmoid(u[4]);
    }
    return p;
}

std::vector<double> encode_search_point(const OptimizationSpec& spec, const ProtocolParams& p) {
    const auto& b = spec.bounds;
    std::vector<double> u(free_dimension(spec.regime));
    auto unit = [](double x, double lo, double hi) {
        return std::clamp((x - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    };
    u[0] = logit(unit(p.pax, b.prob_lo, b.prob_hi));
    const double floor3 = std::max(p.p_mu[2] - b.prob_lo, 1e-300);
    u[1] = std::clamp(std::log(std::max(p.p_mu[0] - b.prob_lo, 1e-300) / floor3), -kMaxLogit, kMaxLogit);
    u[2] = std::clamp(std::log(std::max(p.p_mu[1] - b.prob_lo, 1e-300) / floor3), -kMaxLogit, kMaxLogit);
    if (spec.regime != Regime::FixedPbxAndMu) {
        const double lo1 = mu1_floor(spec);
        u[3] = logit(unit(p.mu[0], lo1, b.mu_hi));
        const double lo2 = mu2_floor(spec);
        u[4] = logit(unit(p.mu[1], lo2, p.mu[0] - spec.mu[2]));
    }
    return u;
}

namespace {

constexpr std::array<int, 5> kHaltonBases{2, 3, 5, 7, 11};

double radical_inverse(std::uint64_t index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

// Rotated Halton point mapped onto a central region of parameter space.
ProtocolParams initial_point(const OptimizationSpec& spec, int restart,
                             const std::array<double, 5>& shift) {
    std::array<double, 5> v{};
    for (std::size_t d = 0; d < v.size(); ++d) {
        const double h = radical_inverse(static_cast<std::uint64_t>(restart) + 1, kHaltonBases[d]);
        v[d] = std::fmod(h + shift[d], 1.0);
    }
    ProtocolParams p;
    p.pax = 0.05 + 0.9 * v[0];
    p.pbx = spec.regime == Regime::Full ? p.pax : spec.pbx;
    p.p_mu[0] = 0.1 + 0.8 * v[1];
    p.p_mu[1] = (1.0 - p.p_mu[0]) * (0.1 + 0.8 * v[2]);
    p.p_mu[2] = 1.0 - p.p_mu[0] - p.p_mu[1];
    p.mu[2] = spec.mu[2];
    if (spec.regime == Regime::FixedPbxAndMu) {
        p.mu[0] = spec.mu[0];
        p.mu[1] = spec.mu[1];
    } else {
        p.mu[0] = 0.1 + 0.8 * v[3];
        p.mu[1] = p.mu[0] * (0.05 + 0.55 * v[4]);
    }
    return p;
}

struct Candidate {
    ProtocolParams params;
    KeyLengthResult result;
    double score = -std::numeric_limits<double>::infinity();
};

// Continuous surrogate: the unfloored key length, kept non-positive when the
// chain reports that no key is possible.
double score_of(const KeyLengthResult& r) {
    if (r.reason == NoKeyReason::NoCounts || r.reason == NoKeyReason::NoSinglePhotonX ||
        r.reason == NoKeyReason::NoSinglePhotonZ) {
        return std::min(r.raw_length, -1.0);
    }
    return r.raw_length;
}

std::array<double, 10> flatten(const ProtocolParams& p) {
    return {p.pax, p.pbx, p.mu[0], p.mu[1], p.mu[2], p.p_mu[0], p.p_mu[1], p.p_mu[2], 0.0, 0.0};
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.result.ell != b.result.ell) return a.result.ell > b.result.ell;
    if (a.score != b.score) return a.score > b.score;
    return flatten(a.params) < flatten(b.params);
}

}  // namespace

OptimizationResult optimize(const OptimizationSpec& spec, const ChannelConditions& channel,
                            const SecurityParams& sec) {
    spec.validate();
    channel.validate();

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::array<double, 5> shift{};
    for (double& s : shift) s = uniform(rng);

    std::vector<ProtocolParams> starts;
    for (int r = 0; r < spec.restarts; ++r) starts.push_back(initial_point(spec, r, shift));
    for (ProtocolParams w : spec.warm_starts) {
        w.mu[2] = spec.mu[2];
        if (spec.regime == Regime::Full) w.pbx = w.pax;
        else w.pbx = spec.pbx;
        if (spec.regime == Regime::FixedPbxAndMu) {
            w.mu[0] = spec.mu[0];
            w.mu[1] = spec.mu[1];
        }
        if (feasible(w)) starts.push_back(w);
    }

    std::vector<Candidate> winners(starts.size());
    std::vector<RestartTrace> traces(starts.size());

    parallel_for(starts.size(), spec.threads, [&](std::size_t i) {
        Candidate best;
        auto evaluate = [&](std::span<const double> u) {
            const ProtocolParams p = decode_search_point(spec, u);
            if (!feasible(p)) return std::numeric_limits<double>::infinity();
            Candidate c{p, evaluate_key_length(p, channel, sec, spec.ec), 0.0};
            c.score = score_of(c.result);
            if (better(c, best)) best = c;
            return -c.score;
        };

        NelderMeadOptions options;
        options.x_tolerance = spec.x_tolerance;
        options.f_tolerance = spec.tolerance;
        options.max_evaluations = spec.max_evaluations;
        options.initial_step = 1.0;

        const std::vector<double> u0 = encode_search_point(spec, starts[i]);
        NelderMeadResult run = nelder_mead(evaluate, u0, options);
        int used = run.evaluations;
        bool converged = run.converged;
        // One polishing pass from the incumbent with a tighter simplex.
        if (used < spec.max_evaluations && std::isfinite(best.score)) {
            options.max_evaluations = spec.max_evaluations - used;
            options.initial_step = 0.25;
            const std::vector<double> u1 = encode_search_point(spec, best.params);
            NelderMeadResult polish = nelder_mead(evaluate, u1, options);
            used += polish.evaluations;
            converged = polish.converged;
        }
        winners[i] = best;
        traces[i] = RestartTrace{starts[i], best.params, best.result.ell, best.result.raw_length,
                                 used, converged};
    });

    OptimizationResult out;
    std::size_t champion = 0;
    for (std::size_t i = 0; i < winners.size(); ++i) {
        out.evaluations += traces[i].evaluations;
        if (better(winners[i], winners[champion])) champion = i;
    }
    out.best_params = winners[champion].params;
    out.best_result = winners[champion].result;
    out.best_ell = out.best_result.ell;
    out.trace = std::move(traces);
    return out;
}

}  // namespace fsqkd
