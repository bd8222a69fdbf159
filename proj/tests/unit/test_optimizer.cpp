#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "fsqkd/errors.hpp"
#include "fsqkd/nelder_mead.hpp"
#include "fsqkd/optimizer.hpp"

using namespace fsqkd;

namespace {

ChannelConditions channel_at(double db, double p_ec, double qber, double seconds) {
    ChannelConditions c;
    c.eta_loss_db = db;
    c.p_ec = p_ec;
    c.qber_i = qber;
    c.integration_time_s = seconds;
    return c;
}

bool within_bounds(const ProtocolParams& p, const OptimizationSpec& spec) {
    const auto& b = spec.bounds;
    auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
    bool ok = in(p.pax, b.prob_lo, b.prob_hi) && feasible(p);
    for (double q : p.p_mu) ok = ok && q >= b.prob_lo * (1 - 1e-12);
    if (spec.regime != Regime::FixedPbxAndMu) {
        ok = ok && in(p.mu[0], b.mu_lo, b.mu_hi) && p.mu[1] >= b.mu_lo;
    }
    return ok;
}

}  // namespace

TEST_CASE("nelder-mead minimises smooth functions") {
    auto rosen = [](std::span<const double> x) {
        return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
    };
    NelderMeadOptions o;
    o.x_tolerance = 1e-9;
    o.max_evaluations = 5000;
    const std::vector<double> start{-1.2, 1.0};
    const NelderMeadResult r = nelder_mead(rosen, start, o);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.evaluations <= 5000);
}

TEST_CASE("nelder-mead treats non-finite values as infinitely bad") {
    auto f = [](std::span<const double> x) {
        if (x[0] < 0) return std::numeric_limits<double>::quiet_NaN();
        return (x[0] - 2) * (x[0] - 2);
    };
    const std::vector<double> start{0.5};
    const NelderMeadResult r = nelder_mead(f, start);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("nelder-mead respects the evaluation budget") {
    auto f = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; };
    NelderMeadOptions o;
    o.max_evaluations = 20;
    o.x_tolerance = 1e-300;
    const std::vector<double> start{5, 5, 5};
    const NelderMeadResult r = nelder_mead(f, start, o);
    CHECK_FALSE(r.converged);
    CHECK(r.evaluations <= 20 + 4);
}

TEST_CASE("regime names") {
    CHECK(regime_from_string("full") == Regime::Full);
    CHECK(regime_from_string("fixed_pbx") == Regime::FixedPbx);
    CHECK(regime_from_string("fixed_pbx_and_mu") == Regime::FixedPbxAndMu);
    CHECK(std::string(to_string(Regime::FixedPbx)) == "fixed_pbx");
    CHECK_THROWS_AS(regime_from_string("bogus"), ConfigError);
    CHECK(free_dimension(Regime::Full) == 5);
    CHECK(free_dimension(Regime::FixedPbx) == 5);
    CHECK(free_dimension(Regime::FixedPbxAndMu) == 3);
}

TEST_CASE("search decoding always lands inside the bounds") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> wide(0.0, 40.0);
    for (Regime regime : {Regime::Full, Regime::FixedPbx, Regime::FixedPbxAndMu}) {
        OptimizationSpec spec;
        spec.regime = regime;
        spec.pbx = 0.7;
        for (int i = 0; i < 2000; ++i) {
            std::vector<double> u(free_dimension(regime));
            for (double& x : u) x = wide(rng);
            const ProtocolParams p = decode_search_point(spec, u);
            REQUIRE(within_bounds(p, spec));
            if (regime == Regime::Full) CHECK(p.pbx == p.pax);
            else CHECK(p.pbx == 0.7);
        }
    }
}

TEST_CASE("search encoding inverts decoding inside the bounds") {
    OptimizationSpec spec;
    ProtocolParams p;
    p.pax = p.pbx = 0.73;
    p.mu = {0.61, 0.17, spec.mu[2]};
    p.p_mu = {0.6, 0.3, 0.1};
    const ProtocolParams q = decode_search_point(spec, encode_search_point(spec, p));
    CHECK(q.pax == doctest::Approx(p.pax).epsilon(1e-12));
    CHECK(q.mu[0] == doctest::Approx(p.mu[0]).epsilon(1e-12));
    CHECK(q.mu[1] == doctest::Approx(p.mu[1]).epsilon(1e-12));
    for (std::size_t k = 0; k < 3; ++k) CHECK(q.p_mu[k] == doctest::Approx(p.p_mu[k]).epsilon(1e-12));
}

TEST_CASE("optimization settings validation") {
    OptimizationSpec s;
    s.restarts = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.bounds.prob_lo = 0.4;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.regime = Regime::FixedPbxAndMu;
    s.mu = {0.1, 0.2, 0.0};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.regime = Regime::FixedPbx;
    s.pbx = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("optimizer is deterministic and thread-count independent") {
    const ChannelConditions c = channel_at(35, 1e-6, 0.01, 600);
    OptimizationSpec spec;
    spec.restarts = 6;
    spec.seed = 11;
    const SecurityParams sec = SecurityParams::defaults();
    const OptimizationResult a = optimize(spec, c, sec);
    const OptimizationResult b = optimize(spec, c, sec);
    spec.threads = 4;
    const OptimizationResult t = optimize(spec, c, sec);
    CHECK(a.best_ell == b.best_ell);
    CHECK(a.best_params == b.best_params);
    CHECK(a.best_params == t.best_params);
    CHECK(a.evaluations == t.evaluations);
    CHECK(a.trace.size() == 6);
}

TEST_CASE("optimum is feasible and beats the symmetric default") {
    const ChannelConditions c = channel_at(30, 1e-6, 0.01, 1800);
    const SecurityParams sec = SecurityParams::defaults();
    for (Regime regime : {Regime::Full, Regime::FixedPbx, Regime::FixedPbxAndMu}) {
        OptimizationSpec spec;
        spec.regime = regime;
        spec.pbx = 0.5;
        spec.mu = {0.5, 0.1, 1e-9};
        const OptimizationResult r = optimize(spec, c, sec);
        CHECK(within_bounds(r.best_params, spec));
        ProtocolParams def;
        def.mu = spec.mu;
        CHECK(r.best_ell >= evaluate_key_length(def, c, sec).ell);
        const KeyLengthResult again = evaluate_key_length(r.best_params, c, sec);
        CHECK(again.ell == r.best_ell);
    }
}

TEST_CASE("nested regimes: freeing parameters never loses key") {
    const ChannelConditions c = channel_at(38, 1e-6, 0.01, 1800);
    const SecurityParams sec = SecurityParams::defaults();
    OptimizationSpec inner;
    inner.regime = Regime::FixedPbxAndMu;
    inner.pbx = 0.5;
    inner.mu = {0.5, 0.1, 1e-9};
    const OptimizationResult r_inner = optimize(inner, c, sec);

    OptimizationSpec outer = inner;
    outer.regime = Regime::FixedPbx;
    outer.warm_starts = {r_inner.best_params};
    const OptimizationResult r_outer = optimize(outer, c, sec);
    CHECK(r_outer.best_ell >= r_inner.best_ell - 1);

    // Full optimum re-used as a FixedPbx problem with pbx at its pax.
    OptimizationSpec full;
    const OptimizationResult r_full = optimize(full, c, sec);
    OptimizationSpec fixed = full;
    fixed.regime = Regime::FixedPbx;
    fixed.pbx = r_full.best_params.pbx;
    fixed.warm_starts = {r_full.best_params};
    CHECK(optimize(fixed, c, sec).best_ell >= r_full.best_ell - 1);
}

TEST_CASE("optimizer reports zero when no key is possible") {
    const ChannelConditions c = channel_at(65, 1e-3, 0.01, 60);
    const OptimizationResult r = optimize(OptimizationSpec{}, c, SecurityParams::defaults());
    CHECK(r.best_ell == 0);
    CHECK(feasible(r.best_params));
}

TEST_CASE("tying pbx to pax loses nothing against a fixed receiver bias") {
    // The symmetric choice with the same X:Z ratio sifts at least as much;
    // seeding the full search with it must reach the fixed-pbx optimum.
    const ChannelConditions c = channel_at(36, 1e-6, 0.01, 1800);
    const SecurityParams sec = SecurityParams::defaults();
    for (double pbx : {0.3, 0.9}) {
        OptimizationSpec fixed;
        fixed.regime = Regime::FixedPbx;
        fixed.pbx = pbx;
        const OptimizationResult r_fixed = optimize(fixed, c, sec);
        ProtocolParams seed = r_fixed.best_params;
        const double px = std::sqrt(seed.pax * pbx / ((1 - seed.pax) * (1 - pbx)));
        seed.pax = seed.pbx = px / (1 + px);
        OptimizationSpec full;
        full.warm_starts = {seed};
        CHECK(optimize(full, c, sec).best_ell >= r_fixed.best_ell);
    }
}
