#include "fsqkd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include <json.hpp>

#include "fsqkd/errors.hpp"

extern char** environ;

namespace fsqkd {

namespace {

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
    throw ConfigError("invalid value for '" + key + "': '" + value + "' (expected " + what + ")");
}

double to_double(const std::string& key, const std::string& value) {
    const std::string_view t = trim(value);
    double out = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
        bad_value(key, value, "a number");
    }
    return out;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& value) {
    const std::string_view t = trim(value);
    Int out{};
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec == std::errc() && end == t.data() + t.size() && !t.empty()) return out;
    // Integral values written in exponent form, e.g. 3.84e4.
    double d = 0.0;
    const auto [dend, dec] = std::from_chars(t.data(), t.data() + t.size(), d);
    if (dec == std::errc() && dend == t.data() + t.size() && std::isfinite(d) && d == std::floor(d) &&
        d >= static_cast<double>(std::numeric_limits<Int>::min()) &&
        d <= static_cast<double>(std::numeric_limits<Int>::max()) && std::abs(d) <= 0x1p53) {
        return static_cast<Int>(d);
    }
    bad_value(key, value, "an integer");
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string_view t = trim(value);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    bad_value(key, value, "true or false");
}

RegimeKind to_regime_kind(const std::string& key, const std::string& value) {
    const std::string_view t = trim(value);
    if (t == "fixed") return RegimeKind::Fixed;
    if (t == "optimized") return RegimeKind::Optimized;
    if (t == "worst_case") return RegimeKind::WorstCase;
    bad_value(key, value, "fixed, optimized or worst_case");
}

Setter real(double RunConfig::*field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.*field = to_double(k, v);
    };
}

template <typename Member>
Setter channel_field(Member ChannelConditions::*field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.channel.*field = to_double(k, v);
    };
}

template <typename Member>
Setter protocol_field(Member ProtocolParams::*field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.protocol.*field = to_double(k, v);
    };
}

Setter protocol_slot(IntensityArray ProtocolParams::*array, std::size_t index) {
    return [array, index](RunConfig& c, const std::string& k, const std::string& v) {
        (c.protocol.*array)[index] = to_double(k, v);
    };
}

Setter bound_field(double SearchBounds::*field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.optimizer.bounds.*field = to_double(k, v);
    };
}

Setter axis(std::vector<double> RunConfig::*field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_axis(k, v);
    };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"channel.eta_loss_db", channel_field(&ChannelConditions::eta_loss_db)},
        {"channel.p_ec", channel_field(&ChannelConditions::p_ec)},
        {"channel.qber_i", channel_field(&ChannelConditions::qber_i)},
        {"channel.p_ap", channel_field(&ChannelConditions::p_ap)},
        {"channel.f_s", channel_field(&ChannelConditions::f_s)},
        {"channel.integration_time_s", channel_field(&ChannelConditions::integration_time_s)},

        {"security.eps_s",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.security.eps_s = to_double(k, v); }},
        {"security.eps_c",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.security.eps_c = to_double(k, v); }},
        {"security.beta",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.security.beta = to_double(k, v); }},

        {"ec.mode",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const std::string_view t = trim(v);
             if (t == "finite_size") c.ec.mode = EcMode::FiniteSize;
             else if (t == "efficiency") c.ec.mode = EcMode::Efficiency;
             else bad_value(k, v, "finite_size or efficiency");
         }},
        {"ec.f_ec", [](RunConfig& c, const std::string& k, const std::string& v) { c.ec.f_ec = to_double(k, v); }},

        {"protocol.pax", protocol_field(&ProtocolParams::pax)},
        {"protocol.pbx", protocol_field(&ProtocolParams::pbx)},
        {"protocol.mu1", protocol_slot(&ProtocolParams::mu, 0)},
        {"protocol.mu2", protocol_slot(&ProtocolParams::mu, 1)},
        {"protocol.mu3", protocol_slot(&ProtocolParams::mu, 2)},
        {"protocol.p1", protocol_slot(&ProtocolParams::p_mu, 0)},
        {"protocol.p2", protocol_slot(&ProtocolParams::p_mu, 1)},
        {"protocol.p3", protocol_slot(&ProtocolParams::p_mu, 2)},

        {"optimizer.regime",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.optimizer.regime = regime_from_string(std::string(trim(v)));
             } catch (const ConfigError&) {
                 bad_value(k, v, "full, fixed_pbx or fixed_pbx_and_mu");
             }
         }},
        {"optimizer.restarts",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.optimizer.restarts = to_integer<int>(k, v); }},
        {"optimizer.seed",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.optimizer.seed = to_integer<std::uint64_t>(k, v);
         }},
        {"optimizer.tolerance",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.optimizer.tolerance = to_double(k, v); }},
        {"optimizer.x_tolerance",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.optimizer.x_tolerance = to_double(k, v); }},
        {"optimizer.max_evaluations",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.optimizer.max_evaluations = to_integer<int>(k, v);
         }},
        {"optimizer.prob_lo", bound_field(&SearchBounds::prob_lo)},
        {"optimizer.prob_hi", bound_field(&SearchBounds::prob_hi)},
        {"optimizer.mu_lo", bound_field(&SearchBounds::mu_lo)},
        {"optimizer.mu_hi", bound_field(&SearchBounds::mu_hi)},

        {"sweep.eta_loss_db", axis(&RunConfig::sweep_eta_loss_db)},
        {"sweep.log10_pec", axis(&RunConfig::sweep_log10_pec)},
        {"sweep.qber_i", axis(&RunConfig::sweep_qber_i)},
        {"sweep.tau_s", axis(&RunConfig::sweep_tau_s)},
        {"sweep.regime",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_regime = to_regime_kind(k, v); }},

        {"budget.target_bits",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.budget_target_bits = to_integer<std::int64_t>(k, v);
         }},
        {"budget.resolution_db", real(&RunConfig::budget_resolution_db)},
        {"budget.min_loss_db", real(&RunConfig::budget_min_loss_db)},
        {"budget.max_loss_db", real(&RunConfig::budget_max_loss_db)},
        {"budget.regime",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.budget_regime = to_regime_kind(k, v); }},

        {"uncertainty.f", real(&RunConfig::uncertainty_f)},
        {"uncertainty.grid_points",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.uncertainty_grid_points = to_integer<int>(k, v);
         }},
        {"uncertainty.optimize_nominal",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.uncertainty_optimize_nominal = to_bool(k, v);
         }},

        {"output.format",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const std::string_view t = trim(v);
             if (t == "csv") c.format = OutputFormat::Csv;
             else if (t == "json") c.format = OutputFormat::Json;
             else bad_value(k, v, "csv or json");
         }},
        {"output.path", [](RunConfig& c, const std::string&, const std::string& v) { c.output_path = trim(v); }},
        {"run.threads",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.threads = to_integer<unsigned>(k, v); }},
    };
    return table;
}

void insert_unique(RawConfig& raw, const std::string& key, std::string value) {
    if (key.empty()) throw ConfigError("empty configuration key");
    if (!raw.emplace(key, std::move(value)).second) {
        throw ConfigError("duplicate configuration key '" + key + "'");
    }
}

void flatten(const nlohmann::json& node, const std::string& prefix, RawConfig& raw) {
    if (node.is_object()) {
        for (const auto& [name, child] : node.items()) {
            flatten(child, prefix.empty() ? name : prefix + "." + name, raw);
        }
        return;
    }
    if (prefix.empty()) throw ConfigError("JSON configuration must be an object");
    std::string text;
    if (node.is_string()) {
        text = node.get<std::string>();
    } else if (node.is_boolean()) {
        text = node.get<bool>() ? "true" : "false";
    } else if (node.is_number()) {
        text = node.dump();
    } else if (node.is_array()) {
        for (const auto& item : node) {
            if (!item.is_number()) throw ConfigError("array for '" + prefix + "' must hold numbers");
            if (!text.empty()) text += ",";
            text += item.dump();
        }
    } else {
        throw ConfigError("unsupported JSON value for '" + prefix + "'");
    }
    insert_unique(raw, prefix, std::move(text));
}

}  // namespace

ScenarioRegime RunConfig::scenario_regime(RegimeKind kind) const {
    ScenarioRegime r;
    r.kind = kind;
    r.fixed = protocol;
    r.optimization = optimizer;
    r.optimization.pbx = protocol.pbx;
    r.optimization.mu = protocol.mu;
    r.ec = ec;
    r.f = uncertainty_f;
    r.grid_points_per_dim = uncertainty_grid_points;
    r.optimize_nominal = uncertainty_optimize_nominal;
    return r;
}

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, _] : setters()) out.push_back(k);
        return out;
    }();
    return keys;
}

std::string env_var_for_key(const std::string& key) {
    std::string name(kEnvPrefix);
    for (char ch : key) {
        name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    return name;
}

std::vector<double> parse_axis(const std::string& key, const std::string& value) {
    const std::string_view t = trim(value);
    if (t.empty()) bad_value(key, value, "a list or start:stop:count");
    std::vector<std::string> parts;
    const char sep = t.find(':') != std::string_view::npos ? ':' : ',';
    std::size_t begin = 0;
    while (true) {
        const std::size_t end = t.find(sep, begin);
        parts.emplace_back(trim(t.substr(begin, end - begin)));
        if (end == std::string_view::npos) break;
        begin = end + 1;
    }
    if (sep == ':') {
        if (parts.size() != 3) bad_value(key, value, "start:stop:count");
        const int count = to_integer<int>(key, parts[2]);
        if (count < 1) bad_value(key, value, "a positive point count");
        return linspace(to_double(key, parts[0]), to_double(key, parts[1]), count);
    }
    std::vector<double> out;
    for (const std::string& p : parts) out.push_back(to_double(key, p));
    return out;
}

RawConfig parse_key_value_config(std::string_view text) {
    RawConfig raw;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + "missing key");
        std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        insert_unique(raw, full, std::string(trim(line.substr(eq + 1))));
    }
    return raw;
}

RawConfig parse_json_config(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON configuration: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("JSON configuration must be an object");
    RawConfig raw;
    flatten(doc, "", raw);
    return raw;
}

RawConfig parse_config_text(std::string_view text) {
    const std::string_view t = trim(text);
    if (!t.empty() && t.front() == '{') return parse_json_config(text);
    return parse_key_value_config(text);
}

RawConfig env_overrides(const Environment& env) {
    std::map<std::string, std::string> by_var;
    for (const std::string& key : known_config_keys()) by_var.emplace(env_var_for_key(key), key);
    RawConfig raw;
    for (const auto& [name, value] : env) {
        if (!name.starts_with(kEnvPrefix)) continue;
        const auto it = by_var.find(name);
        if (it == by_var.end()) throw ConfigError("unknown configuration variable '" + name + "'");
        raw[it->second] = value;
    }
    return raw;
}

Environment process_environment() {
    Environment env;
    for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
        const std::string_view entry(*e);
        if (!entry.starts_with(kEnvPrefix)) continue;
        const std::size_t eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
    }
    return env;
}

RunConfig build_run_config(const RawConfig& raw) {
    std::map<std::string, const Setter*> lookup;
    for (const auto& [k, s] : setters()) lookup.emplace(k, &s);

    RunConfig cfg;
    for (const auto& [key, value] : raw) {
        const auto it = lookup.find(key);
        if (it == lookup.end()) throw ConfigError("unknown configuration key '" + key + "'");
        (*it->second)(cfg, key, value);
    }
    if (!raw.contains("security.beta")) {
        cfg.security = SecurityParams::from_epsilons(cfg.security.eps_s, cfg.security.eps_c);
    }
    if (!raw.contains("protocol.p3") && (raw.contains("protocol.p1") || raw.contains("protocol.p2"))) {
        cfg.protocol.p_mu[2] = 1.0 - cfg.protocol.p_mu[0] - cfg.protocol.p_mu[1];
    }
    cfg.channel.validate();
    cfg.security.validate();
    if (!(cfg.ec.f_ec >= 1.0) || !std::isfinite(cfg.ec.f_ec)) {
        throw ConfigError("invalid value for 'ec.f_ec': must be >= 1");
    }
    return cfg;
}

}  // namespace fsqkd
