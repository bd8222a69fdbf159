#pragma once

// Run configuration for the command-line front end. Two input syntaxes
// share one key space: flat `key = value` text (with optional [section]
// headers that prefix the keys) and JSON, whose nested objects flatten to
// dotted keys. See docs/config-format.md for the grammar and key list.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsqkd/channel.hpp"
#include "fsqkd/finite_key.hpp"
#include "fsqkd/optimizer.hpp"
#include "fsqkd/scenario.hpp"

namespace fsqkd {

enum class OutputFormat { Csv, Json };

struct RunConfig {
    ChannelConditions channel;
    SecurityParams security = SecurityParams::defaults();
    EcModel ec;
    ProtocolParams protocol;
    OptimizationSpec optimizer;

    std::vector<double> sweep_eta_loss_db;
    std::vector<double> sweep_log10_pec;
    std::vector<double> sweep_qber_i;
    std::vector<double> sweep_tau_s;
    RegimeKind sweep_regime = RegimeKind::Optimized;

    std::int64_t budget_target_bits = 0;
    double budget_resolution_db = 0.1;
    double budget_min_loss_db = 0.0;
    double budget_max_loss_db = 60.0;
    RegimeKind budget_regime = RegimeKind::Optimized;

    double uncertainty_f = 0.0;
    int uncertainty_grid_points = 3;
    bool uncertainty_optimize_nominal = false;

    std::optional<OutputFormat> format;
    std::string output_path;
    unsigned threads = 1;

    /// Regime used by sweep/budget/worstcase, assembled from the fields above.
    ScenarioRegime scenario_regime(RegimeKind kind) const;
};

/// Flattened key -> raw value text.
using RawConfig = std::map<std::string, std::string>;
/// Environment variables by name.
using Environment = std::map<std::string, std::string>;

inline constexpr std::string_view kEnvPrefix = "FSQKD_";

/// Every key the configuration accepts, in documentation order.
const std::vector<std::string>& known_config_keys();

/// FSQKD_ followed by the key upper-cased with dots turned into underscores.
std::string env_var_for_key(const std::string& key);

RawConfig parse_key_value_config(std::string_view text);
RawConfig parse_json_config(std::string_view text);

/// Picks JSON when the first non-blank character is '{'.
RawConfig parse_config_text(std::string_view text);

/// Values for known keys set through prefixed environment variables.
/// Prefixed variables that match no key are rejected.
RawConfig env_overrides(const Environment& env);

/// The prefixed variables of the running process.
Environment process_environment();

/// Applies `raw` on top of the defaults. Throws ConfigError naming the first
/// unknown key or malformed value.
RunConfig build_run_config(const RawConfig& raw);

std::vector<double> parse_axis(const std::string& key, const std::string& value);

}  // namespace fsqkd
