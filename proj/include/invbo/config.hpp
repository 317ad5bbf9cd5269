#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "invbo/diagnostics.hpp"
#include "invbo/engine.hpp"

namespace invbo {

inline constexpr std::string_view kConfigSchema = "invbo-config/1";

/// Settings read by check-bound and fit-compare on top of the run settings.
struct DiagnosticSettings {
    double bound_delta = 0.5;
    std::size_t bound_samples = 200;
    std::size_t bound_pairs = 10000;
    std::size_t bound_anchors = 20;
    std::size_t fit_train = 300;
    std::size_t fit_test = 100;
    int fit_vae_epochs = 2;
    std::filesystem::path report_path;
};

struct ExperimentConfig {
    RunConfig run;
    DiagnosticSettings diag;
};

struct KeySpec {
    std::string key;
    std::string type;  // int, uint, real, bool, string, path or a|b|c
    std::string default_value;
    bool required = false;
    std::string help;
};

/// The published schema: every accepted key in file order.
const std::vector<KeySpec>& config_schema();

using KeyValues = std::map<std::string, std::string, std::less<>>;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped, the
/// `schema` key must name kConfigSchema and duplicate keys are rejected.
KeyValues parse_config_text(std::string_view text, std::string_view source = "<config>");
KeyValues read_config_file(const std::filesystem::path& path);

/// Type-checks every key against the schema. Unknown keys and missing
/// required keys raise config errors naming the key.
ExperimentConfig build_config(const KeyValues& values);

/// Reads the file then applies overrides (which win over the file).
ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});

}  // namespace invbo
