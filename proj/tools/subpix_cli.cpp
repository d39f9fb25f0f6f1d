// subpix: command-line front end for the subpixel detection toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "subpix/clutter.hpp"
#include "subpix/config.hpp"
#include "subpix/detectors.hpp"
#include "subpix/errors.hpp"
#include "subpix/estimators.hpp"
#include "subpix/harness.hpp"
#include "subpix/optics.hpp"
#include "subpix/rng.hpp"

#ifndef SUBPIX_VERSION
#define SUBPIX_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace subpix;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr std::uint64_t kStreamCliWindow = 7;

/// Flags shared by every experiment-driven subcommand.
struct CommonOptions {
    std::string preset;
    std::string config_path;
    std::string manifest_path;
    std::vector<std::string> settings;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<std::size_t> trials;
    std::string detectors;
    std::string estimators;
    std::string out_dir = ".";
    bool plot = false;
};

void add_common(CLI::App& cmd, CommonOptions& o, bool trials, bool outputs) {
    cmd.add_option("--preset", o.preset, "Built-in preset (see `subpix presets`)");
    cmd.add_option("--config", o.config_path, "key = value configuration file");
    cmd.add_option("--manifest", o.manifest_path, "Replay the configuration recorded in a manifest.json");
    cmd.add_option("--set", o.settings, "Override one setting, key=value (repeatable)");
    cmd.add_option("--seed", o.seed, "Master seed");
    cmd.add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
    if (trials) cmd.add_option("--trials", o.trials, "Trials per hypothesis (roc) or per SNR point (mse)");
    if (outputs) {
        cmd.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
        cmd.add_flag("--plot", o.plot, "Also write a gnuplot script");
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

/// Preset, then manifest or config file, then command-line flags.
ExperimentConfig resolve_config(const CommonOptions& o, bool mse) {
    ExperimentConfig config;
    if (!o.preset.empty()) config = load_preset(o.preset);
    if (!o.manifest_path.empty()) {
        const json manifest = json::parse(read_text(o.manifest_path));
        config = parse_config(manifest.at("config_text").get<std::string>(), o.manifest_path, config);
    }
    if (!o.config_path.empty()) config = load_config_file(o.config_path, config);
    for (const std::string& setting : o.settings) {
        const auto eq = setting.find('=');
        if (eq == std::string::npos) throw ConfigError("--set", 0, "expected key=value, got '" + setting + "'");
        config = parse_config(setting, "--set", config);
    }
    if (o.seed) config.seed = *o.seed;
    if (o.jobs) config.jobs = *o.jobs;
    if (o.trials) {
        if (mse) {
            config.trials_per_snr = *o.trials;
        } else {
            config.trials_h0 = *o.trials;
            config.trials_h1 = *o.trials;
        }
    }
    if (!o.detectors.empty()) apply_setting(config, "detectors", o.detectors);
    if (!o.estimators.empty()) apply_setting(config, "estimators", o.estimators);
    return config;
}

SubpixelOffset parse_offset(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("offset must be given as e1,e2");
    std::size_t used1 = 0, used2 = 0;
    const std::string a = text.substr(0, comma);
    const std::string b = text.substr(comma + 1);
    const SubpixelOffset offset{std::stod(a, &used1), std::stod(b, &used2)};
    if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument("malformed offset '" + text + "'");
    if (std::abs(offset.e1) > 0.5 || std::abs(offset.e2) > 0.5) {
        throw std::invalid_argument("offset components must lie in [-0.5, 0.5], got " + text);
    }
    return offset;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    return out;
}

json config_object(const ExperimentConfig& config) {
    json object = json::object();
    std::istringstream lines(to_config_text(config));
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) object[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return object;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& config,
                    double seconds, std::vector<std::string> outputs, json extra) {
    outputs.push_back("manifest.json");
    json manifest = {
        {"tool", "subpix"},
        {"version", SUBPIX_VERSION},
        {"command", command},
        {"seed", config.seed},
        {"config_hash", config_hash(config)},
        {"config", config_object(config)},
        {"config_text", to_config_text(config)},
        {"duration_s", seconds},
        {"outputs", outputs},
    };
    manifest.update(extra);
    open_output(dir / "manifest.json") << manifest.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string gnuplot_roc(const std::vector<RocCurve>& curves) {
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set logscale x\nset xrange [1e-4:1]\nset yrange [0:1]\n"
       << "set xlabel 'Pfa'\nset ylabel 'Pd'\nset key bottom right\nplot \\\n";
    for (std::size_t d = 0; d < curves.size(); ++d) {
        const std::string& label = curves[d].label;
        gp << "  'roc.csv' using (strcol(1) eq '" << label << "' ? $3 : NaN):4 with steps title '" << label << "'"
           << (d + 1 < curves.size() ? ", \\\n" : "\n");
    }
    return gp.str();
}

std::string gnuplot_mse(const ExperimentConfig& config) {
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set logscale y\nset xlabel 'SNR (dB)'\nset ylabel 'MSE (pixel^2)'\nset key top right\nplot \\\n";
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        const std::string name(estimator_name(config.estimators[e]));
        gp << "  'mse.csv' using (strcol(1) eq '" << name << "' ? $2 : NaN):5 with linespoints title '" << name
           << "'" << (e + 1 < config.estimators.size() ? ", \\\n" : "\n");
    }
    return gp.str();
}

// ---- signature --------------------------------------------------------------

struct SignatureOptions {
    double cutoff = 2.44;
    std::string eps = "0,0";
    int half_width = 2;
    int quad_order = kDefaultQuadOrder;
    bool sweep = false;
    std::string out;
};

void print_signature(std::ostream& out, const Signature& sig) {
    for (int i = -sig.half_width; i <= sig.half_width; ++i) {
        for (int j = -sig.half_width; j <= sig.half_width; ++j) {
            out << sig.at(i, j) << (j < sig.half_width ? "," : "\n");
        }
    }
}

int run_signature(const SignatureOptions& o) {
    const PsfModel model(o.cutoff);
    std::vector<SubpixelOffset> offsets;
    if (o.sweep) {
        offsets = {{0.0, 0.0}, {0.25, 0.0}, {0.25, 0.25}, {0.5, 0.0}, {0.5, 0.5}};
    } else {
        offsets = {parse_offset(o.eps)};
    }
    std::ofstream file;
    if (!o.out.empty()) file = open_output(o.out);
    std::ostream& out = o.out.empty() ? std::cout : file;
    out.precision(12);
    for (const SubpixelOffset& offset : offsets) {
        const Signature sig = render_signature(model, offset, o.half_width, o.quad_order, OffsetDomain::closed);
        if (o.sweep) out << "# eps=" << offset.e1 << ',' << offset.e2 << " sum=" << sig.sum() << '\n';
        print_signature(out, sig);
    }
    return 0;
}

// ---- clutter ----------------------------------------------------------------

struct ClutterOptions {
    double hurst = 0.7;
    int size = 200;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::optional<int> acf_lag;
};

int run_clutter(const ClutterOptions& o) {
    if (o.size < 4) throw std::invalid_argument("clutter size must be >= 4");
    int side = 4;
    while (side < o.size) side *= 2;
    const NoiseField full = synthesize_fbm(o.hurst, side, o.seed);
    const NoiseField field = crop(full, o.size, o.size);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_pgm(field, dir / "clutter.pgm");
    write_field_csv(field, dir / "clutter.csv");
    if (o.acf_lag) write_acf_csv(estimate_autocovariance(field, *o.acf_lag), dir / "acf.csv");
    std::cout << "wrote " << (dir / "clutter.pgm").string() << " (" << o.size << "x" << o.size << ", H=" << o.hurst
              << ", spectral slope " << spectral_slope(full, 2.0 / side, 0.25) << ")\n";
    return 0;
}

// ---- score / estimate -------------------------------------------------------

struct WindowOptions {
    std::string window_path;
    std::string eps;
    std::optional<double> amplitude;
};

Eigen::VectorXd read_window(const std::string& path, int half_width) {
    std::string text = read_text(path);
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::vector<double> values;
    double v = 0.0;
    while (in >> v) values.push_back(v);
    const int side = 2 * half_width + 1;
    if (static_cast<int>(values.size()) != side * side) {
        throw std::invalid_argument(path + " holds " + std::to_string(values.size()) + " values, expected " +
                                    std::to_string(side * side));
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

/// The data window: read from file, or one noise draw plus a target at --eps.
Eigen::VectorXd make_window(const ExperimentConfig& config, const NoiseEnvironment& noise, const WindowOptions& w) {
    if (!w.window_path.empty()) return read_window(w.window_path, config.half_width);
    auto rng = substream(config.seed, kStreamCliWindow, 0);
    Eigen::VectorXd z = noise.draw(rng);
    if (w.eps.empty()) return z;
    double alpha = 0.0;
    if (w.amplitude) {
        alpha = *w.amplitude;
    } else if (config.alpha) {
        alpha = *config.alpha;
    } else if (config.snr_db) {
        alpha = snr_to_alpha(*config.snr_db, std::sqrt(noise.noise_variance()), resolve_energy(config));
    } else {
        throw std::invalid_argument("--eps needs an amplitude: --amp, or alpha / snr_db in the configuration");
    }
    const Signature sig = render_signature(PsfModel(config.cutoff), parse_offset(w.eps), config.half_width,
                                           config.quad_order, OffsetDomain::closed);
    return z + alpha * Eigen::Map<const Eigen::VectorXd>(sig.values.data(), static_cast<Eigen::Index>(sig.values.size()));
}

void maybe_copy(const std::string& text, const CommonOptions& o, const std::string& name) {
    if (o.out_dir.empty() || o.out_dir == ".") return;
    fs::create_directories(o.out_dir);
    open_output(fs::path(o.out_dir) / name) << text;
}

int run_score(const CommonOptions& o, const WindowOptions& w) {
    const ExperimentConfig config = resolve_config(o, false);
    validate_model(config);
    const NoiseEnvironment noise(config);
    const DetectorSuite suite(PsfModel(config.cutoff), noise.covariance(), config.half_width, config.grid_size,
                              config.quad_order, config.subspace_order);
    const Eigen::VectorXd z = make_window(config, noise, w);
    std::ostringstream out;
    out.precision(12);
    out << "detector,score,alpha,eps1,eps2\n";
    for (const DetectorScore& s : suite.score(config.detectors, z)) {
        out << detector_name(s.id) << ',' << s.score << ',';
        if (s.alpha) out << *s.alpha;
        out << ',';
        if (s.offset) out << s.offset->e1 << ',' << s.offset->e2;
        else out << ',';
        out << '\n';
    }
    std::cout << out.str();
    maybe_copy(out.str(), o, "score.csv");
    return 0;
}

int run_estimate(const CommonOptions& o, const WindowOptions& w) {
    const ExperimentConfig config = resolve_config(o, false);
    validate_model(config);
    const NoiseEnvironment noise(config);
    const WhitenedBank bank(build_signature_bank(PsfModel(config.cutoff), config.grid_size, config.half_width,
                                                 config.quad_order),
                            noise.covariance());
    const Eigen::VectorXd z = make_window(config, noise, w);
    std::ostringstream out;
    out.precision(12);
    out << "estimator,eps1,eps2,alpha\n";
    for (EstimatorId id : config.estimators) {
        PositionEstimate e;
        switch (id) {
            case EstimatorId::ml: e = estimate_ml(z, bank); break;
            case EstimatorId::pm: e = estimate_pm(z, bank); break;
            case EstimatorId::default_center: e = estimate_default(); break;
        }
        out << estimator_name(id) << ',' << e.e1 << ',' << e.e2 << ',';
        if (e.alpha) out << *e.alpha;
        out << '\n';
    }
    std::cout << out.str();
    maybe_copy(out.str(), o, "estimate.csv");
    return 0;
}

// ---- roc / mse --------------------------------------------------------------

int run_roc_command(const CommonOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig config = resolve_config(o, false);
    const RocResult result = run_roc(config);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs{"roc.csv", "resolved.cfg"};
    {
        std::ofstream csv = open_output(dir / "roc.csv");
        write_roc_csv(csv, result.curves);
    }
    open_output(dir / "resolved.cfg") << to_config_text(config);
    if (o.plot) {
        open_output(dir / "roc.gp") << gnuplot_roc(result.curves);
        outputs.push_back("roc.gp");
    }
    json extra = {{"alpha", result.alpha},
                  {"energy", result.energy},
                  {"noise_variance", result.noise_variance},
                  {"snr_db", alpha_to_snr(std::max(result.alpha, 1e-300), std::sqrt(result.noise_variance),
                                          result.energy)}};
    write_manifest(dir, "roc", config, seconds_since(start), outputs, extra);
    std::cout << "roc: " << config.name << ", alpha " << result.alpha << ", " << config.trials_h0 << "+"
              << config.trials_h1 << " trials -> " << (dir / "roc.csv").string() << '\n';
    for (const RocCurve& c : result.curves) {
        std::cout << "  " << c.label << ": Pd@Pfa=1e-3 " << c.pd_at_pfa(1e-3) << ", Pd@Pfa=1e-2 " << c.pd_at_pfa(1e-2)
                  << '\n';
    }
    return 0;
}

int run_mse_command(const CommonOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig config = resolve_config(o, true);
    const MseReport report = run_mse(config);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs{"mse.csv", "resolved.cfg"};
    {
        std::ofstream csv = open_output(dir / "mse.csv");
        write_mse_csv(csv, report);
    }
    open_output(dir / "resolved.cfg") << to_config_text(config);
    if (o.plot) {
        open_output(dir / "mse.gp") << gnuplot_mse(config);
        outputs.push_back("mse.gp");
    }
    write_manifest(dir, "mse", config, seconds_since(start), outputs, {{"energy", report.energy}});
    std::cout << "mse: " << config.name << ", " << config.snr_sweep.size() << " SNR points x "
              << config.trials_per_snr << " trials -> " << (dir / "mse.csv").string() << '\n';
    return 0;
}

// ---- theoretical-roc --------------------------------------------------------

struct TheoryOptions {
    std::string snr = "15";
    std::string eps;
    double pfa_min = 1e-6;
    std::size_t points = 61;
    std::string out;
};

int run_theory(const CommonOptions& o, const TheoryOptions& t) {
    ExperimentConfig config = resolve_config(o, false);
    if (config.noise != NoiseKind::white) {
        throw std::invalid_argument("theoretical ROC curves are only available for white noise");
    }
    validate_model(config);
    const WhitenedBank bank(build_signature_bank(PsfModel(config.cutoff), config.grid_size, config.half_width,
                                                 config.quad_order),
                            CovarianceModel::white(config.half_width, config.sigma * config.sigma));
    double alpha = 0.0;
    if (t.snr != "-inf") {
        std::size_t used = 0;
        const double snr = std::stod(t.snr, &used);
        if (used != t.snr.size()) throw std::invalid_argument("malformed --snr '" + t.snr + "'");
        alpha = snr_to_alpha(snr, config.sigma, resolve_energy(config));
    }
    const std::vector<double> levels = log_pfa_grid(t.pfa_min, t.points);
    const PsfModel model(config.cutoff);
    auto target = [&](SubpixelOffset offset) {
        const Signature sig = render_signature(model, offset, config.half_width, config.quad_order, OffsetDomain::closed);
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(sig.values.data(),
                                                                 static_cast<Eigen::Index>(sig.values.size())));
    };
    std::vector<std::pair<std::string, RocCurve>> curves{
        {"ideal", theoretical_pmf_roc(bank, alpha, target({0.0, 0.0}), levels)},
        {"edge", theoretical_pmf_roc(bank, alpha, target({0.5, 0.0}), levels)},
        {"corner", theoretical_pmf_roc(bank, alpha, target({0.5, 0.5}), levels)},
        {"mean", theoretical_pmf_mean_roc(bank, alpha, levels)},
    };
    if (!t.eps.empty()) curves.emplace_back("eps", theoretical_pmf_roc(bank, alpha, target(parse_offset(t.eps)), levels));

    std::ofstream file;
    if (!t.out.empty()) file = open_output(t.out);
    std::ostream& out = t.out.empty() ? std::cout : file;
    out.precision(12);
    out << "curve,pfa,pd\n";
    for (const auto& [name, curve] : curves) {
        for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
            out << name << ',' << it->pfa << ',' << it->pd << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subpixel point-target detection and localization under aliasing"};
    app.set_version_flag("--version", SUBPIX_VERSION);
    app.require_subcommand(1);

    SignatureOptions sig;
    auto* signature = app.add_subcommand("signature", "Print the pixel-integrated spot for one offset");
    signature->add_option("--rc", sig.cutoff, "Normalized optical cutoff frequency")->capture_default_str();
    signature->add_option("--eps", sig.eps, "Subpixel offset e1,e2 in [-0.5, 0.5]")->capture_default_str();
    signature->add_option("--w", sig.half_width, "Window half-width")->capture_default_str();
    signature->add_option("--q", sig.quad_order, "Gauss-Legendre order per axis")->capture_default_str();
    signature->add_flag("--sweep", sig.sweep, "Center plus four example offsets");
    signature->add_option("--out", sig.out, "Output CSV file (default: stdout)");

    ClutterOptions cl;
    auto* clutter = app.add_subcommand("clutter", "Synthesize a fractal cloud image");
    clutter->add_option("--hurst", cl.hurst, "Hurst exponent in (0, 1)")->capture_default_str();
    clutter->add_option("--size", cl.size, "Image side in pixels")->capture_default_str();
    clutter->add_option("--seed", cl.seed, "Seed")->capture_default_str();
    clutter->add_option("--out", cl.out_dir, "Output directory")->capture_default_str();
    clutter->add_option("--acf", cl.acf_lag, "Also write the autocovariance up to this lag");

    CommonOptions score_opts;
    WindowOptions score_window;
    auto* score = app.add_subcommand("score", "Run the detectors on one data window");
    add_common(*score, score_opts, false, false);
    score->add_option("--detectors", score_opts.detectors, "Comma-separated detector list or 'all'");
    score->add_option("--out", score_opts.out_dir, "Also write score.csv into this directory");
    score->add_option("--window", score_window.window_path, "CSV/whitespace file with the (2w+1)^2 window values");
    score->add_option("--eps", score_window.eps, "Synthesize noise plus a target at e1,e2");
    score->add_option("--amp", score_window.amplitude, "Target amplitude for --eps");

    CommonOptions est_opts;
    WindowOptions est_window;
    auto* estimate = app.add_subcommand("estimate", "Estimate the subpixel position in one data window");
    add_common(*estimate, est_opts, false, false);
    estimate->add_option("--estimators", est_opts.estimators, "Comma-separated list of ml, pm, default");
    estimate->add_option("--out", est_opts.out_dir, "Also write estimate.csv into this directory");
    estimate->add_option("--window", est_window.window_path, "CSV/whitespace file with the (2w+1)^2 window values");
    estimate->add_option("--eps", est_window.eps, "Synthesize noise plus a target at e1,e2");
    estimate->add_option("--amp", est_window.amplitude, "Target amplitude for --eps");

    CommonOptions roc_opts;
    auto* roc = app.add_subcommand("roc", "Monte Carlo ROC curves for the selected detectors");
    add_common(*roc, roc_opts, true, true);
    roc->add_option("--detectors", roc_opts.detectors, "Comma-separated detector list or 'all'");

    CommonOptions mse_opts;
    auto* mse = app.add_subcommand("mse", "Monte Carlo position MSE across an SNR sweep");
    add_common(*mse, mse_opts, true, true);
    mse->add_option("--estimators", mse_opts.estimators, "Comma-separated list of ml, pm, default");

    CommonOptions theory_opts;
    TheoryOptions theory;
    auto* theoretical = app.add_subcommand("theoretical-roc", "Closed-form pixel matched filter ROC curves");
    add_common(*theoretical, theory_opts, false, false);
    theoretical->add_option("--snr", theory.snr, "SNR in dB, or -inf for a zero-amplitude target")->capture_default_str();
    theoretical->add_option("--eps", theory.eps, "Extra curve for a target at e1,e2");
    theoretical->add_option("--pfa-min", theory.pfa_min, "Smallest Pfa level")->capture_default_str();
    theoretical->add_option("--points", theory.points, "Number of log-spaced Pfa levels")->capture_default_str();
    theoretical->add_option("--out", theory.out, "Output CSV file (default: stdout)");

    auto* presets = app.add_subcommand("presets", "List built-in presets, or print one");
    std::string preset_name;
    presets->add_option("name", preset_name, "Preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*signature) return run_signature(sig);
        if (*clutter) return run_clutter(cl);
        if (*score) return run_score(score_opts, score_window);
        if (*estimate) return run_estimate(est_opts, est_window);
        if (*roc) return run_roc_command(roc_opts);
        if (*mse) return run_mse_command(mse_opts);
        if (*theoretical) return run_theory(theory_opts, theory);
        if (*presets) {
            if (preset_name.empty()) {
                for (const std::string& name : preset_names()) std::cout << name << '\n';
            } else {
                std::cout << preset_text(preset_name);
            }
            return 0;
        }
    } catch (const NumericalError& e) {
        std::cerr << "subpix: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const json::exception& e) {
        std::cerr << "subpix: bad manifest: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "subpix: error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
