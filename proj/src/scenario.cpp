#include "fsqkd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsqkd/errors.hpp"
#include "fsqkd/parallel.hpp"
#include "fsqkd/uncertainty.hpp"

namespace fsqkd {

namespace {

void require_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) throw ConfigError(std::string(name) + " must not be empty");
    for (double v : axis) {
        if (!std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite");
    }
    if (axis.size() < 2) return;
    const bool up = axis[1] > axis[0];
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (up ? !(axis[i] > axis[i - 1]) : !(axis[i] < axis[i - 1])) {
            throw ConfigError(std::string(name) + " must be strictly monotone");
        }
    }
}

ChannelConditions with_loss(ChannelConditions c, double eta_loss_db) {
    c.eta_loss_db = eta_loss_db;
    return c;
}

}  // namespace

const char* to_string(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::Fixed: return "fixed";
        case RegimeKind::Optimized: return "optimized";
        case RegimeKind::WorstCase: return "worst_case";
    }
    return "unknown";
}

void ScenarioRegime::validate() const {
    switch (kind) {
        case RegimeKind::Fixed:
            fixed.validate();
            break;
        case RegimeKind::Optimized:
            optimization.validate();
            break;
        case RegimeKind::WorstCase: {
            if (optimize_nominal) optimization.validate();
            IntensityUncertaintyModel model;
            model.f = f;
            model.grid_points_per_dim = grid_points_per_dim;
            model.nominal = fixed;
            if (optimize_nominal) {
                model.nominal.mu = optimization.mu;
                model.nominal.pbx = optimization.pbx;
            }
            model.validate();
            break;
        }
    }
    if (!(ec.f_ec >= 1.0) || !std::isfinite(ec.f_ec)) throw ConfigError("ec.f_ec must be >= 1");
}

PointResult evaluate_point(const ScenarioRegime& regime, const ChannelConditions& channel,
                           const SecurityParams& sec, unsigned threads) {
    PointResult out;
    auto optimized = [&] {
        OptimizationSpec spec = regime.optimization;
        spec.ec = regime.ec;
        spec.threads = threads;
        return optimize(spec, channel, sec);
    };
    switch (regime.kind) {
        case RegimeKind::Fixed:
            out.params = regime.fixed;
            out.result = evaluate_key_length(regime.fixed, channel, sec, regime.ec);
            break;
        case RegimeKind::Optimized: {
            OptimizationResult r = optimized();
            out.params = r.best_params;
            out.result = r.best_result;
            break;
        }
        case RegimeKind::WorstCase: {
            IntensityUncertaintyModel model;
            model.f = regime.f;
            model.grid_points_per_dim = regime.grid_points_per_dim;
            model.nominal = regime.optimize_nominal ? optimized().best_params : regime.fixed;
            const WorstCaseResult w = worst_case_key_length(model, channel, sec, regime.ec, threads);
            out.params = model.nominal;
            out.result = w.result;
            break;
        }
    }
    return out;
}

std::vector<double> linspace(double start, double stop, int count) {
    if (count < 1) throw ConfigError("grid point count must be >= 1");
    if (count == 1) return {start};
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        v[static_cast<std::size_t>(i)] = start + (stop - start) * i / (count - 1);
    }
    v.back() = stop;
    return v;
}

void SweepSpec::validate() const {
    require_axis(eta_loss_db, "sweep.eta_loss_db");
    require_axis(log10_pec, "sweep.log10_pec");
    require_axis(qber_i, "sweep.qber_i");
    require_axis(tau_s, "sweep.tau_s");
    ChannelConditions probe = base;
    for (double eta : eta_loss_db) { probe.eta_loss_db = eta; probe.validate(); }
    for (double lp : log10_pec) { probe.p_ec = std::pow(10.0, lp); probe.validate(); }
    for (double q : qber_i) { probe.qber_i = q; probe.validate(); }
    for (double t : tau_s) { probe.integration_time_s = t; probe.validate(); }
    regime.validate();
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const SecurityParams& sec, unsigned threads) {
    spec.validate();
    sec.validate();
    const std::size_t n_eta = spec.eta_loss_db.size();
    const std::size_t n_pec = spec.log10_pec.size();
    const std::size_t n_q = spec.qber_i.size();
    const std::size_t n_t = spec.tau_s.size();
    std::vector<SweepRow> rows(n_eta * n_pec * n_q * n_t);

    parallel_for(rows.size(), threads, [&](std::size_t index) {
        std::size_t rem = index;
        const std::size_t it = rem % n_t; rem /= n_t;
        const std::size_t iq = rem % n_q; rem /= n_q;
        const std::size_t ip = rem % n_pec; rem /= n_pec;
        const std::size_t ie = rem;

        SweepRow& row = rows[index];
        row.eta_loss_db = spec.eta_loss_db[ie];
        row.log10_pec = spec.log10_pec[ip];
        row.qber_i = spec.qber_i[iq];
        row.tau_s = spec.tau_s[it];

        ChannelConditions c = spec.base;
        c.eta_loss_db = row.eta_loss_db;
        c.p_ec = std::pow(10.0, row.log10_pec);
        c.qber_i = row.qber_i;
        c.integration_time_s = row.tau_s;
        PointResult p = evaluate_point(spec.regime, c, sec, 1);
        row.params = p.params;
        row.result = std::move(p.result);
    });
    return rows;
}

void LossBudgetQuery::validate() const {
    if (target_bits < 0) throw ConfigError("budget.target_bits must be >= 0");
    if (!(resolution_db > 0.0) || !std::isfinite(resolution_db)) {
        throw ConfigError("budget.resolution_db must be > 0");
    }
    if (!(min_loss_db >= 0.0) || !(max_loss_db > min_loss_db) || !std::isfinite(max_loss_db)) {
        throw ConfigError("budget loss bracket must satisfy 0 <= min_loss_db < max_loss_db");
    }
    conditions.validate();
    regime.validate();
}

bool meets_target(std::int64_t ell, std::int64_t target_bits) {
    return target_bits == 0 ? ell > 0 : ell >= target_bits;
}

LossBudget max_loss(const LossBudgetQuery& query, const SecurityParams& sec, unsigned threads) {
    query.validate();
    sec.validate();
    constexpr double kLossCeiling = 300.0;
    constexpr int kSpotChecks = 4;

    LossBudget out;
    auto ell_at = [&](double eta) {
        ++out.probes;
        return evaluate_point(query.regime, with_loss(query.conditions, eta), sec, threads).result.ell;
    };
    auto ok = [&](double eta) { return meets_target(ell_at(eta), query.target_bits); };

    double lo = query.min_loss_db;
    if (!ok(lo)) return out;
    out.has_budget = true;

    // Widen until the upper end fails.
    double hi = query.max_loss_db;
    while (ok(hi)) {
        lo = hi;
        if (hi >= kLossCeiling) {
            out.eta_loss_db = hi;
            out.ell = ell_at(hi);
            return out;
        }
        hi = std::min(kLossCeiling, hi + (hi - query.min_loss_db));
    }
    const double bracket_hi = hi;

    while (hi - lo > query.resolution_db) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }

    // Spot checks above the boundary: every one must fail for the bisection
    // answer to stand.
    bool monotone = !ok(lo + query.resolution_db);
    for (int i = 1; monotone && i <= kSpotChecks; ++i) {
        const double eta = lo + (bracket_hi - lo) * i / (kSpotChecks + 1);
        if (eta > lo + query.resolution_db && ok(eta)) monotone = false;
    }
    if (monotone) {
        out.eta_loss_db = lo;
        out.ell = ell_at(lo);
        return out;
    }

    out.scanned = true;
    const auto steps =
        static_cast<std::size_t>(std::ceil((bracket_hi - query.min_loss_db) / query.resolution_db));
    std::vector<std::int64_t> ells(steps + 1);
    parallel_for(ells.size(), threads, [&](std::size_t i) {
        const double eta = std::min(bracket_hi, query.min_loss_db + query.resolution_db * i);
        ells[i] = evaluate_point(query.regime, with_loss(query.conditions, eta), sec, 1).result.ell;
    });
    out.probes += static_cast<int>(ells.size());
    for (std::size_t i = ells.size(); i-- > 0;) {
        if (meets_target(ells[i], query.target_bits)) {
            out.eta_loss_db = std::min(bracket_hi, query.min_loss_db + query.resolution_db * i);
            out.ell = ells[i];
            break;
        }
    }
    return out;
}

std::vector<SkrPoint> skr_vs_time(std::span<const double> times_s,
                                  const ChannelConditions& conditions,
                                  const ScenarioRegime& regime, const SecurityParams& sec,
                                  unsigned threads) {
    regime.validate();
    sec.validate();
    for (std::size_t i = 0; i < times_s.size(); ++i) {
        if (!(times_s[i] > 0.0) || !std::isfinite(times_s[i])) {
            throw ConfigError("integration times must be finite and > 0");
        }
        if (i > 0 && !(times_s[i] > times_s[i - 1])) {
            throw ConfigError("integration times must be sorted ascending");
        }
    }
    std::vector<SkrPoint> out(times_s.size());
    parallel_for(out.size(), threads, [&](std::size_t i) {
        ChannelConditions c = conditions;
        c.integration_time_s = times_s[i];
        const std::int64_t ell = evaluate_point(regime, c, sec, 1).result.ell;
        out[i] = {times_s[i], ell, static_cast<double>(ell) * 60.0 / times_s[i]};
    });
    return out;
}

SiftingEquivalence sifting_equivalence(double pax, double pbx) {
    auto inside = [](double p) { return std::isfinite(p) && p > 0.0 && p < 1.0; };
    if (!inside(pax) || !inside(pbx)) {
        throw DomainError("sifting_equivalence: basis probabilities must lie in (0, 1)");
    }
    SiftingEquivalence s;
    const double x = pax * pbx;
    const double z = (1.0 - pax) * (1.0 - pbx);
    s.k = x / z;
    s.f = x + z;
    const double root = std::sqrt(s.k);
    s.f_prime = (1.0 + s.k) / ((1.0 + root) * (1.0 + root));
    s.p_x = root / (1.0 + root);
    return s;
}

}  // namespace fsqkd
