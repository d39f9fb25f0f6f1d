#include "subpix/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace subpix {

namespace {

struct Preset {
    std::string_view name;
    std::string_view text;
};

// Trial counts follow the desk-scale defaults: 1e5 per hypothesis for white-noise ROC,
// 1e4 for the clutter ROC and per MSE point.
constexpr std::array<Preset, 8> kPresets{{
    {"fig3", "name = fig3\ncutoff = 2.44\nhalf_width = 2\nnoise = white\nsigma = 1\nsnr_db = 15\n"},
    {"fig5-high",
     "name = fig5-high\ncutoff = 2.44\nhalf_width = 2\nnoise = white\nsigma = 1\nsnr_db = 16.2\n"
     "trials_h0 = 100000\ntrials_h1 = 100000\n"},
    {"fig5-low",
     "name = fig5-low\ncutoff = 2.44\nhalf_width = 2\nnoise = white\nsigma = 1\nsnr_db = 14.1\n"
     "trials_h0 = 100000\ntrials_h1 = 100000\n"},
    {"fig7",
     "name = fig7\ncutoff = 2.44\nhalf_width = 2\nnoise = fractal\nhurst = 0.7\nclutter_size = 256\n"
     "covariance_mode = split\nalpha = 0.35\ntrials_h0 = 10000\ntrials_h1 = 10000\n"},
    {"fig8-aliased",
     "name = fig8-aliased\ncutoff = 2.44\nhalf_width = 2\nnoise = white\nsigma = 1\nsnr_db = 15\n"
     "trials_h0 = 100000\ntrials_h1 = 100000\n"},
    {"fig8-sampled",
     "name = fig8-sampled\ncutoff = 0.5\nhalf_width = 5\nnoise = white\nsigma = 1\nsnr_db = 15\n"
     "trials_h0 = 100000\ntrials_h1 = 100000\n"},
    {"fig10-left",
     "name = fig10-left\ncutoff = 2.44\nhalf_width = 2\nnoise = white\nsigma = 1\n"
     "snr_sweep = 0,5,10,15,20,25,30,35,40\ntrials_per_snr = 10000\n"},
    {"fig10-right",
     "name = fig10-right\ncutoff = 0.5\nhalf_width = 5\nnoise = white\nsigma = 1\n"
     "snr_sweep = 0,5,10,15,20,25,30,35,40\ntrials_per_snr = 10000\n"},
}};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> items;
    std::string current;
    for (char c : value) {
        if (c == ',') {
            items.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    items.push_back(trim(current));
    return items;
}

double to_double(std::string_view key, std::string_view value) {
    const std::string text = trim(value);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || std::isnan(v)) {
        throw std::invalid_argument("key '" + std::string(key) + "' expects a number, got '" + text + "'");
    }
    return v;
}

template <typename Int>
Int to_integer(std::string_view key, std::string_view value) {
    const std::string text = trim(value);
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("key '" + std::string(key) + "' expects a non-negative integer, got '" + text + "'");
    }
    return v;
}

bool is_none(std::string_view value) { return trim(value) == "none"; }

std::string format_double(double v) {
    // Shortest text that parses back to the same double.
    char buffer[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buffer, sizeof buffer, "%.*g", precision, v);
        if (std::strtod(buffer, nullptr) == v) break;
    }
    return buffer;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k > 0) out += ',';
        out += format_double(values[k]);
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::invalid_argument(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

void apply_setting(ExperimentConfig& config, std::string_view raw_key, std::string_view value) {
    const std::string key = trim(raw_key);
    const std::string text = trim(value);
    if (key == "name") config.name = text;
    else if (key == "cutoff") config.cutoff = to_double(key, text);
    else if (key == "half_width") config.half_width = to_integer<int>(key, text);
    else if (key == "grid_size") config.grid_size = to_integer<int>(key, text);
    else if (key == "quad_order") config.quad_order = to_integer<int>(key, text);
    else if (key == "subspace_order") config.subspace_order = to_integer<int>(key, text);
    else if (key == "noise") {
        if (text == "white") config.noise = NoiseKind::white;
        else if (text == "fractal") config.noise = NoiseKind::fractal;
        else throw std::invalid_argument("noise must be 'white' or 'fractal', got '" + text + "'");
    } else if (key == "sigma") config.sigma = to_double(key, text);
    else if (key == "hurst") config.hurst = to_double(key, text);
    else if (key == "clutter_size") config.clutter_size = to_integer<int>(key, text);
    else if (key == "regularization") config.regularization = to_double(key, text);
    else if (key == "covariance_mode") {
        if (text == "split") config.covariance_mode = CovarianceMode::split;
        else if (text == "in_sample") config.covariance_mode = CovarianceMode::in_sample;
        else throw std::invalid_argument("covariance_mode must be 'split' or 'in_sample', got '" + text + "'");
    } else if (key == "alpha") {
        if (is_none(text)) {
            config.alpha.reset();
        } else {
            config.alpha = to_double(key, text);
            config.snr_db.reset();
        }
    } else if (key == "snr_db") {
        if (is_none(text)) {
            config.snr_db.reset();
        } else {
            config.snr_db = to_double(key, text);
            config.alpha.reset();
        }
    } else if (key == "snr_sweep") {
        config.snr_sweep.clear();
        if (!is_none(text)) {
            for (const auto& item : split_list(text)) config.snr_sweep.push_back(to_double(key, item));
        }
    } else if (key == "energy") {
        if (is_none(text)) config.energy.reset();
        else config.energy = to_double(key, text);
    } else if (key == "trials") {
        config.trials_h0 = config.trials_h1 = to_integer<std::size_t>(key, text);
    } else if (key == "trials_h0") config.trials_h0 = to_integer<std::size_t>(key, text);
    else if (key == "trials_h1") config.trials_h1 = to_integer<std::size_t>(key, text);
    else if (key == "trials_per_snr") config.trials_per_snr = to_integer<std::size_t>(key, text);
    else if (key == "seed") config.seed = to_integer<std::uint64_t>(key, text);
    else if (key == "jobs") config.jobs = to_integer<unsigned>(key, text);
    else if (key == "detectors") {
        config.detectors.clear();
        if (text == "all") {
            config.detectors.assign(kAllDetectors.begin(), kAllDetectors.end());
        } else {
            for (const auto& item : split_list(text)) {
                const auto id = parse_detector(item);
                if (!id) throw std::invalid_argument("unknown detector '" + item + "'");
                config.detectors.push_back(*id);
            }
        }
    } else if (key == "estimators") {
        config.estimators.clear();
        if (text == "all") {
            config.estimators = {EstimatorId::ml, EstimatorId::pm, EstimatorId::default_center};
        } else {
            for (const auto& item : split_list(text)) {
                const auto id = parse_estimator(item);
                if (!id) throw std::invalid_argument("unknown estimator '" + item + "'");
                config.estimators.push_back(*id);
            }
        }
    } else if (key == "offset_mode") {
        if (text == "uniform") config.offset_mode = OffsetMode::uniform;
        else if (text == "fixed") config.offset_mode = OffsetMode::fixed;
        else throw std::invalid_argument("offset_mode must be 'uniform' or 'fixed', got '" + text + "'");
    } else if (key == "fixed_offset") {
        const auto items = split_list(text);
        if (items.size() != 2) throw std::invalid_argument("fixed_offset expects 'e1,e2'");
        config.fixed_offset = {to_double(key, items[0]), to_double(key, items[1])};
    } else if (key == "roc_max_points") config.roc_max_points = to_integer<std::size_t>(key, text);
    else throw std::invalid_argument("unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::string_view text, const std::string& source, ExperimentConfig base) {
    int line_number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        ++line_number;
        std::string line = trim(text.substr(start, end - start));
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_number, "expected 'key = value'");
        try {
            apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(source, line_number, e.what());
        }
        if (end == text.size()) break;
    }
    return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path, std::move(base));
}

std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "name = " << c.name << '\n';
    out << "cutoff = " << format_double(c.cutoff) << '\n';
    out << "half_width = " << c.half_width << '\n';
    out << "grid_size = " << c.grid_size << '\n';
    out << "quad_order = " << c.quad_order << '\n';
    out << "subspace_order = " << c.subspace_order << '\n';
    out << "noise = " << (c.noise == NoiseKind::white ? "white" : "fractal") << '\n';
    out << "sigma = " << format_double(c.sigma) << '\n';
    out << "hurst = " << format_double(c.hurst) << '\n';
    out << "clutter_size = " << c.clutter_size << '\n';
    out << "regularization = " << format_double(c.regularization) << '\n';
    out << "covariance_mode = " << (c.covariance_mode == CovarianceMode::split ? "split" : "in_sample") << '\n';
    out << "alpha = " << (c.alpha ? format_double(*c.alpha) : "none") << '\n';
    out << "snr_db = " << (c.snr_db ? format_double(*c.snr_db) : "none") << '\n';
    out << "snr_sweep = " << (c.snr_sweep.empty() ? "none" : join_doubles(c.snr_sweep)) << '\n';
    out << "energy = " << (c.energy ? format_double(*c.energy) : "none") << '\n';
    out << "trials_h0 = " << c.trials_h0 << '\n';
    out << "trials_h1 = " << c.trials_h1 << '\n';
    out << "trials_per_snr = " << c.trials_per_snr << '\n';
    out << "seed = " << c.seed << '\n';
    out << "jobs = " << c.jobs << '\n';
    out << "detectors = ";
    for (std::size_t k = 0; k < c.detectors.size(); ++k) out << (k ? "," : "") << detector_name(c.detectors[k]);
    out << '\n';
    out << "estimators = ";
    for (std::size_t k = 0; k < c.estimators.size(); ++k) out << (k ? "," : "") << estimator_name(c.estimators[k]);
    out << '\n';
    out << "offset_mode = " << (c.offset_mode == OffsetMode::uniform ? "uniform" : "fixed") << '\n';
    out << "fixed_offset = " << format_double(c.fixed_offset.e1) << ',' << format_double(c.fixed_offset.e2) << '\n';
    out << "roc_max_points = " << c.roc_max_points << '\n';
    return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
    ExperimentConfig copy = config;
    copy.jobs = 0;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_config_text(copy)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : kPresets) names.emplace_back(p.name);
    return names;
}

std::string_view preset_text(std::string_view name) {
    for (const auto& p : kPresets) {
        if (p.name == name) return p.text;
    }
    std::string known;
    for (const auto& p : kPresets) known += (known.empty() ? "" : ", ") + std::string(p.name);
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

ExperimentConfig load_preset(std::string_view name) {
    return parse_config(preset_text(name), "preset:" + std::string(name));
}

}  // namespace subpix
