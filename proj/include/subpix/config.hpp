#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "subpix/harness.hpp"

namespace subpix {

/// Malformed configuration text; what() carries "source:line: message".
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

/// Applies one `key = value` setting. Setting alpha clears snr_db and vice versa;
/// the value `none` clears an optional key. Throws std::invalid_argument.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Applies every setting of a flat key=value text on top of `base`. Blank lines and
/// `#` comments are ignored.
ExperimentConfig parse_config(std::string_view text, const std::string& source, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Canonical text form; parse_config(to_config_text(c)) reproduces c exactly.
std::string to_config_text(const ExperimentConfig& config);
/// FNV-1a over the canonical text without the `jobs` key.
std::string config_hash(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws std::invalid_argument for an unknown preset.
ExperimentConfig load_preset(std::string_view name);
std::string_view preset_text(std::string_view name);

}  // namespace subpix
