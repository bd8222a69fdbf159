#include "fsqkd/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsqkd/errors.hpp"
#include "fsqkd/scenario.hpp"
#include "fsqkd/uncertainty.hpp"

namespace fsqkd {

namespace {

using Json = nlohmann::ordered_json;

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string num(std::int64_t x) { return std::to_string(x); }

struct Row {
    double eta_loss_db = 0.0;
    double log10_pec = 0.0;
    double qber_i = 0.0;
    double tau_s = 0.0;
    ProtocolParams params;
    KeyLengthResult result;
};

Row row_for(const ChannelConditions& c, const ProtocolParams& params, const KeyLengthResult& r) {
    return {c.eta_loss_db, std::log10(c.p_ec), c.qber_i, c.integration_time_s, params, r};
}

std::string csv_line(const Row& r) {
    const auto& p = r.params;
    const std::vector<std::string> cells = {
        num(r.eta_loss_db), num(r.log10_pec), num(r.qber_i),     num(r.tau_s),
        num(r.result.ell),  num(r.result.s_x0), num(r.result.s_x1), num(r.result.phi_x),
        num(r.result.lambda_ec), num(p.pax), num(p.pbx),         num(p.mu[0]),
        num(p.mu[1]),       num(p.mu[2]),   num(p.p_mu[0]),      num(p.p_mu[1]),
        num(p.p_mu[2]),
    };
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line + '\n';
}

std::string csv_header() {
    std::string line;
    for (const std::string& c : csv_columns()) {
        if (!line.empty()) line += ',';
        line += c;
    }
    return line + '\n';
}

Json params_json(const ProtocolParams& p) {
    return Json{{"pax", p.pax},     {"pbx", p.pbx},     {"mu1", p.mu[0]}, {"mu2", p.mu[1]},
                {"mu3", p.mu[2]},   {"p1", p.p_mu[0]},  {"p2", p.p_mu[1]}, {"p3", p.p_mu[2]}};
}

Json row_json(const Row& r) {
    const auto& k = r.result;
    Json j{{"eta_loss_db", r.eta_loss_db},
           {"log10_pec", r.log10_pec},
           {"qber_i", r.qber_i},
           {"tau_s", r.tau_s},
           {"ell", k.ell},
           {"s_x0", k.s_x0},
           {"s_x1", k.s_x1},
           {"phi_x", k.phi_x},
           {"lambda_ec", k.lambda_ec},
           {"qber_x", k.qber_x},
           {"raw_length", k.raw_length},
           {"reason", to_string(k.reason)},
           {"s_z0", k.diagnostics.s_z0},
           {"s_z1", k.diagnostics.s_z1},
           {"v_z1", k.diagnostics.v_z1},
           {"n_x", k.diagnostics.n_x_total}};
    j["params"] = params_json(r.params);
    return j;
}

std::string dump(const Json& j) { return j.dump(2) + '\n'; }

std::string single_output(const Row& row, OutputFormat format, Json extra = Json::object()) {
    if (format == OutputFormat::Csv) return csv_header() + csv_line(row);
    Json j = row_json(row);
    for (auto& [k, v] : extra.items()) j[k] = v;
    return dump(j);
}

std::string cmd_keylength(const RunConfig& cfg, OutputFormat format) {
    cfg.protocol.validate();
    const KeyLengthResult r = evaluate_key_length(cfg.protocol, cfg.channel, cfg.security, cfg.ec);
    return single_output(row_for(cfg.channel, cfg.protocol, r), format);
}

std::string cmd_optimize(const RunConfig& cfg, OutputFormat format) {
    OptimizationSpec spec = cfg.scenario_regime(RegimeKind::Optimized).optimization;
    spec.ec = cfg.ec;
    spec.threads = cfg.threads;
    const OptimizationResult r = optimize(spec, cfg.channel, cfg.security);
    return single_output(row_for(cfg.channel, r.best_params, r.best_result), format,
                         Json{{"regime", to_string(spec.regime)}, {"evaluations", r.evaluations}});
}

std::string cmd_worstcase(const RunConfig& cfg, OutputFormat format) {
    const ScenarioRegime regime = cfg.scenario_regime(RegimeKind::WorstCase);
    regime.validate();
    IntensityUncertaintyModel model;
    model.f = regime.f;
    model.grid_points_per_dim = regime.grid_points_per_dim;
    model.nominal = regime.fixed;
    if (regime.optimize_nominal) {
        OptimizationSpec spec = regime.optimization;
        spec.ec = regime.ec;
        spec.threads = cfg.threads;
        model.nominal = optimize(spec, cfg.channel, cfg.security).best_params;
    }
    const WorstCaseResult w =
        worst_case_key_length(model, cfg.channel, cfg.security, regime.ec, cfg.threads);
    Json argmin = Json::array();
    for (double x : w.argmin) argmin.push_back(x);
    return single_output(row_for(cfg.channel, model.nominal, w.result), format,
                         Json{{"f", model.f},
                              {"evaluations", w.evaluations},
                              {"argmin", argmin}});
}

std::string cmd_sweep(const RunConfig& cfg, OutputFormat format) {
    SweepSpec spec;
    spec.base = cfg.channel;
    spec.regime = cfg.scenario_regime(cfg.sweep_regime);
    auto pick = [](const std::vector<double>& axis, double fallback) {
        return axis.empty() ? std::vector<double>{fallback} : axis;
    };
    spec.eta_loss_db = pick(cfg.sweep_eta_loss_db, cfg.channel.eta_loss_db);
    if (cfg.sweep_log10_pec.empty() && !(cfg.channel.p_ec > 0.0)) {
        throw ConfigError("sweep.log10_pec is required when channel.p_ec is 0");
    }
    spec.log10_pec = pick(cfg.sweep_log10_pec, std::log10(cfg.channel.p_ec));
    spec.qber_i = pick(cfg.sweep_qber_i, cfg.channel.qber_i);
    spec.tau_s = pick(cfg.sweep_tau_s, cfg.channel.integration_time_s);

    const std::vector<SweepRow> rows = sweep(spec, cfg.security, cfg.threads);
    if (format == OutputFormat::Csv) {
        std::string text = csv_header();
        for (const SweepRow& r : rows) {
            text += csv_line({r.eta_loss_db, r.log10_pec, r.qber_i, r.tau_s, r.params, r.result});
        }
        return text;
    }
    Json arr = Json::array();
    for (const SweepRow& r : rows) {
        arr.push_back(row_json({r.eta_loss_db, r.log10_pec, r.qber_i, r.tau_s, r.params, r.result}));
    }
    return dump(arr);
}

std::string cmd_budget(const RunConfig& cfg, OutputFormat format) {
    LossBudgetQuery q;
    q.target_bits = cfg.budget_target_bits;
    q.conditions = cfg.channel;
    q.regime = cfg.scenario_regime(cfg.budget_regime);
    q.resolution_db = cfg.budget_resolution_db;
    q.min_loss_db = cfg.budget_min_loss_db;
    q.max_loss_db = cfg.budget_max_loss_db;
    const LossBudget b = max_loss(q, cfg.security, cfg.threads);
    if (format == OutputFormat::Csv) {
        return "target_bits,has_budget,eta_loss_db,ell,scanned,probes\n" + num(q.target_bits) + ',' +
               (b.has_budget ? "true" : "false") + ',' + (b.has_budget ? num(b.eta_loss_db) : "") +
               ',' + num(b.ell) + ',' + (b.scanned ? "true" : "false") + ',' +
               std::to_string(b.probes) + '\n';
    }
    Json j{{"target_bits", q.target_bits}, {"has_budget", b.has_budget}};
    j["eta_loss_db"] = b.has_budget ? Json(b.eta_loss_db) : Json(nullptr);
    j["ell"] = b.ell;
    j["scanned"] = b.scanned;
    j["probes"] = b.probes;
    return dump(j);
}

std::string cmd_sift(const RunConfig& cfg, OutputFormat format) {
    const double pax = cfg.protocol.pax;
    const double pbx = cfg.protocol.pbx;
    if (!(pax > 0.0 && pax < 1.0) || !(pbx > 0.0 && pbx < 1.0)) {
        throw ConfigError("sift-equiv needs protocol.pax and protocol.pbx in (0, 1)");
    }
    const SiftingEquivalence s = sifting_equivalence(pax, pbx);
    if (format == OutputFormat::Csv) {
        return "pax,pbx,k,f,f_prime,p_x\n" + num(pax) + ',' + num(pbx) + ',' + num(s.k) + ',' +
               num(s.f) + ',' + num(s.f_prime) + ',' + num(s.p_x) + '\n';
    }
    return dump(Json{{"pax", pax}, {"pbx", pbx}, {"k", s.k}, {"f", s.f}, {"f_prime", s.f_prime},
                     {"p_x", s.p_x}});
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {
        "eta_loss_db", "log10_pec", "qber_i", "tau_s", "ell", "s_x0", "s_x1", "phi_x", "lambda_ec",
        "pax",         "pbx",       "mu1",    "mu2",   "mu3", "p1",   "p2",   "p3",
    };
    return cols;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Environment& env) {
    CLI::App app{"Finite-key secure key length for decoy-state efficient BB84", "fsqkd"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::string format_flag;
    std::string out_path;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Optimizer seed");
    auto* threads_opt = app.add_option("--threads", threads, "Worker cap (0 = all cores)");
    app.add_option("--config", config_path, "Configuration file (key = value text or JSON)");
    app.add_option("--format", format_flag, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", out_path, "Write results here instead of stdout");

    struct Command {
        const char* name;
        const char* help;
        std::string (*run)(const RunConfig&, OutputFormat);
        OutputFormat default_format;
    };
    const std::vector<Command> commands = {
        {"keylength", "Key length for fixed protocol parameters", cmd_keylength, OutputFormat::Json},
        {"optimize", "Maximise the key length over protocol parameters", cmd_optimize, OutputFormat::Json},
        {"sweep", "Key length over a grid of channel conditions", cmd_sweep, OutputFormat::Csv},
        {"budget", "Largest loss that still meets a key-length target", cmd_budget, OutputFormat::Json},
        {"worstcase", "Minimum key length under intensity uncertainty", cmd_worstcase, OutputFormat::Json},
        {"sift-equiv", "Symmetric basis choice with the same sifted ratio", cmd_sift, OutputFormat::Json},
    };
    for (const Command& c : commands) app.add_subcommand(c.name, c.help);

    std::vector<const char*> argv{"fsqkd"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kExitConfig;
    }

    const Command* chosen = nullptr;
    for (const Command& c : commands) {
        if (app.got_subcommand(c.name)) chosen = &c;
    }

    try {
        RawConfig raw = config_path.empty() ? RawConfig{} : parse_config_text(read_file(config_path));
        for (auto& [k, v] : env_overrides(env)) raw[k] = v;
        RunConfig cfg = build_run_config(raw);
        if (*seed_opt) cfg.optimizer.seed = seed;
        if (*threads_opt) cfg.threads = threads;
        if (!format_flag.empty()) cfg.format = format_flag == "csv" ? OutputFormat::Csv : OutputFormat::Json;
        if (!out_path.empty()) cfg.output_path = out_path;

        const std::string text = chosen->run(cfg, cfg.format.value_or(chosen->default_format));
        if (cfg.output_path.empty()) {
            out << text;
        } else {
            std::ofstream file(cfg.output_path, std::ios::binary | std::ios::trunc);
            if (!file || !(file << text) || !file.flush()) {
                throw ConfigError("cannot write output file '" + cfg.output_path + "'");
            }
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "fsqkd: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "fsqkd: numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace fsqkd
