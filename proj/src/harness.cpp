#include "subpix/harness.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "subpix/config.hpp"
#include "subpix/parallel.hpp"
#include "subpix/rng.hpp"
#include "subpix/stats.hpp"

namespace subpix {

namespace {

// Logical random streams; each trial draws from substream(seed, stream, trial).
constexpr std::uint64_t kStreamH0 = 1;
constexpr std::uint64_t kStreamH1 = 2;
constexpr std::uint64_t kStreamTrainField = 3;
constexpr std::uint64_t kStreamTestField = 4;
constexpr std::uint64_t kStreamMse = 100;  // + SNR index

std::uint64_t field_seed(std::uint64_t seed, std::uint64_t stream) { return substream(seed, stream, 0)(); }

SubpixelOffset draw_offset(const ExperimentConfig& config, std::mt19937_64& rng) {
    if (config.offset_mode == OffsetMode::fixed) return config.fixed_offset;
    std::uniform_real_distribution<double> uniform(-0.5, 0.5);
    const double e1 = uniform(rng);
    const double e2 = uniform(rng);
    return {e1, e2};
}

Eigen::VectorXd target_signature(const PsfModel& model, const ExperimentConfig& config, SubpixelOffset offset) {
    const Signature sig = render_signature(model, offset, config.half_width, config.quad_order, OffsetDomain::closed);
    return Eigen::Map<const Eigen::VectorXd>(sig.values.data(), static_cast<Eigen::Index>(sig.values.size()));
}

double resolve_alpha(const ExperimentConfig& config, double noise_variance, double energy) {
    if (config.alpha) return *config.alpha;
    return snr_to_alpha(*config.snr_db, std::sqrt(noise_variance), energy);
}

}  // namespace

void validate_model(const ExperimentConfig& config) {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (!(config.cutoff > 0.0)) fail("cutoff must be > 0");
    if (config.half_width < 1) fail("half_width must be >= 1");
    if (config.grid_size < 2 || config.grid_size % 2 != 0) fail("grid_size must be even and >= 2");
    if (config.quad_order < 2) fail("quad_order must be >= 2");
    const int window = (2 * config.half_width + 1) * (2 * config.half_width + 1);
    if (config.subspace_order < 1 || config.subspace_order > std::min(window, config.grid_size * config.grid_size)) {
        fail("subspace_order out of range");
    }
    if (config.noise == NoiseKind::white && !(config.sigma > 0.0)) fail("white noise needs sigma > 0");
    if (config.noise == NoiseKind::fractal) {
        if (!(config.hurst > 0.0 && config.hurst < 1.0)) fail("fractal noise needs hurst in (0, 1)");
        const int n = config.clutter_size;
        if (n < 4 || (n & (n - 1)) != 0) fail("clutter_size must be a power of two >= 4");
        if (4 * config.half_width >= n) fail("clutter_size too small for the window covariance");
        if (config.regularization < 0.0) fail("regularization must be >= 0");
    }
    if (config.energy && !(*config.energy > 0.0)) fail("energy override must be > 0");
    if (config.offset_mode == OffsetMode::fixed &&
        (std::abs(config.fixed_offset.e1) > 0.5 || std::abs(config.fixed_offset.e2) > 0.5)) {
        fail("fixed offset must lie in [-0.5, 0.5]^2");
    }
}

void validate(const ExperimentConfig& config, bool for_roc) {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    validate_model(config);
    if (for_roc) {
        if (config.alpha.has_value() == config.snr_db.has_value()) fail("ROC runs need exactly one of alpha, snr_db");
        if (config.trials_h0 < 1 || config.trials_h1 < 1) fail("trial counts must be >= 1");
        if (config.detectors.empty()) fail("no detectors selected");
    } else {
        if (config.snr_sweep.empty()) fail("MSE runs need a non-empty snr_sweep");
        if (config.trials_per_snr < 1) fail("trials_per_snr must be >= 1");
        if (config.estimators.empty()) fail("no estimators selected");
    }
}

double snr_to_alpha(double snr_db, double sigma, double energy) {
    if (!(sigma > 0.0) || !(energy > 0.0)) throw std::invalid_argument("sigma and energy must be > 0");
    return sigma * std::pow(10.0, snr_db / 20.0) / std::sqrt(energy);
}

double alpha_to_snr(double alpha, double sigma, double energy) {
    if (!(sigma > 0.0) || !(energy > 0.0)) throw std::invalid_argument("sigma and energy must be > 0");
    return 10.0 * std::log10(alpha * alpha * energy / (sigma * sigma));
}

double resolve_energy(const ExperimentConfig& config) {
    if (config.energy) return *config.energy;
    static std::mutex cache_mutex;
    static std::map<std::pair<double, int>, double> cache;
    const std::lock_guard lock(cache_mutex);
    const auto key = std::make_pair(config.cutoff, config.quad_order);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
    const double energy =
        average_energy(PsfModel(config.cutoff), kEnergyHalfWidth, kDefaultGridSize, config.quad_order);
    cache.emplace(key, energy);
    return energy;
}

NoiseEnvironment::NoiseEnvironment(const ExperimentConfig& config)
    : kind_(config.noise),
      half_width_(config.half_width),
      sigma_(config.sigma),
      covariance_([&] {
          if (config.noise == NoiseKind::white) return CovarianceModel::white(config.half_width, config.sigma * config.sigma);
          const NoiseField train =
              synthesize_fbm(config.hurst, config.clutter_size, field_seed(config.seed, kStreamTrainField));
          return CovarianceModel::from_autocovariance(estimate_autocovariance(train, 2 * config.half_width),
                                                      config.half_width, config.regularization);
      }()),
      noise_variance_(covariance_.variance()) {
    if (kind_ == NoiseKind::fractal) {
        const std::uint64_t stream =
            config.covariance_mode == CovarianceMode::in_sample ? kStreamTrainField : kStreamTestField;
        test_field_ = remove_mean(synthesize_fbm(config.hurst, config.clutter_size, field_seed(config.seed, stream)));
    }
    if (kind_ == NoiseKind::fractal && config.regularization > 0.0) {
        // Report the clutter variance itself, not the ridge-inflated diagonal.
        noise_variance_ = covariance_.variance() / (1.0 + config.regularization);
    }
}

Eigen::VectorXd NoiseEnvironment::draw(std::mt19937_64& rng) const {
    const int side = 2 * half_width_ + 1;
    if (kind_ == NoiseKind::white) {
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(side * side);
        for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = sigma_ * normal(rng);
        return z;
    }
    const NoiseField& field = *test_field_;
    std::uniform_int_distribution<int> rows(half_width_, field.height - 1 - half_width_);
    std::uniform_int_distribution<int> cols(half_width_, field.width - 1 - half_width_);
    const int row = rows(rng);
    const int col = cols(rng);
    return extract_window(field, row, col, half_width_).values;
}

RocResult run_roc(const ExperimentConfig& config) {
    validate(config, true);
    const PsfModel model(config.cutoff);
    const NoiseEnvironment noise(config);
    const DetectorSuite suite(model, noise.covariance(), config.half_width, config.grid_size, config.quad_order,
                              config.subspace_order);

    RocResult result;
    result.noise_variance = noise.noise_variance();
    result.energy = resolve_energy(config);
    result.alpha = resolve_alpha(config, result.noise_variance, result.energy);

    const std::size_t detectors = config.detectors.size();
    std::vector<std::vector<double>> h0(detectors, std::vector<double>(config.trials_h0));
    std::vector<std::vector<double>> h1(detectors, std::vector<double>(config.trials_h1));

    parallel_for(config.trials_h0, config.jobs, [&](std::size_t i) {
        auto rng = substream(config.seed, kStreamH0, i);
        const Eigen::VectorXd z = noise.draw(rng);
        const auto scores = suite.score(config.detectors, z);
        for (std::size_t d = 0; d < detectors; ++d) h0[d][i] = scores[d].score;
    });
    parallel_for(config.trials_h1, config.jobs, [&](std::size_t i) {
        auto rng = substream(config.seed, kStreamH1, i);
        const SubpixelOffset offset = draw_offset(config, rng);
        Eigen::VectorXd z = noise.draw(rng);
        if (result.alpha != 0.0) z += result.alpha * target_signature(model, config, offset);
        const auto scores = suite.score(config.detectors, z);
        for (std::size_t d = 0; d < detectors; ++d) h1[d][i] = scores[d].score;
    });

    const std::string hash = config_hash(config);
    for (std::size_t d = 0; d < detectors; ++d) {
        RocCurve curve = thin_roc(empirical_roc_from_scores(h0[d], h1[d]), config.roc_max_points);
        curve.label = std::string(detector_name(config.detectors[d]));
        curve.config_hash = hash;
        result.curves.push_back(std::move(curve));
    }
    return result;
}

std::vector<double> log_pfa_grid(double pfa_min, std::size_t count) {
    if (!(pfa_min > 0.0 && pfa_min < 1.0) || count < 2) throw std::invalid_argument("bad Pfa grid");
    std::vector<double> levels(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(count - 1);
        levels[k] = std::pow(pfa_min, 1.0 - frac);
    }
    levels.back() = 1.0;
    return levels;
}

RocCurve theoretical_pmf_roc(const WhitenedBank& bank, double alpha, const Eigen::VectorXd& target,
                             std::span<const double> pfa_levels) {
    if (!bank.white_noise()) throw std::invalid_argument("theoretical PMF ROC is only defined for white noise");
    if (target.size() != bank.window_length()) throw std::invalid_argument("target signature has the wrong length");
    const auto center = static_cast<Eigen::Index>(bank.bank().center_index());
    const double spread = std::sqrt(bank.energies()[center]);  // std of s_0^t R^-1 z under H0
    const double shift = alpha * bank.whitened().col(center).dot(target) / spread;
    RocCurve curve;
    curve.label = "pmf";
    // Increasing threshold order, i.e. decreasing Pfa.
    for (auto it = pfa_levels.rbegin(); it != pfa_levels.rend(); ++it) {
        const double pfa = *it;
        const double z = normal_tail_inverse(pfa);
        const double pd = alpha == 0.0 ? pfa : normal_tail(z - shift);
        curve.points.push_back({z * spread, pfa, pd});
    }
    return curve;
}

RocCurve theoretical_pmf_mean_roc(const WhitenedBank& bank, double alpha, std::span<const double> pfa_levels) {
    RocCurve mean;
    for (std::size_t k : bank.grid_nodes()) {
        const RocCurve one = theoretical_pmf_roc(bank, alpha, bank.bank().signature(k), pfa_levels);
        if (mean.points.empty()) {
            mean = one;
            continue;
        }
        for (std::size_t p = 0; p < one.points.size(); ++p) mean.points[p].pd += one.points[p].pd;
    }
    const double count = static_cast<double>(bank.grid_nodes().size());
    for (auto& p : mean.points) p.pd /= count;
    if (alpha == 0.0) {
        for (auto& p : mean.points) p.pd = p.pfa;
    }
    mean.label = "mean";
    return mean;
}

MseReport run_mse(const ExperimentConfig& config) {
    validate(config, false);
    const PsfModel model(config.cutoff);
    const NoiseEnvironment noise(config);
    const WhitenedBank bank(build_signature_bank(model, config.grid_size, config.half_width, config.quad_order),
                            noise.covariance());
    MseReport report;
    report.energy = resolve_energy(config);
    const std::size_t estimators = config.estimators.size();
    const std::size_t trials = config.trials_per_snr;

    for (std::size_t s = 0; s < config.snr_sweep.size(); ++s) {
        const double snr = config.snr_sweep[s];
        const double alpha = snr_to_alpha(snr, std::sqrt(noise.noise_variance()), report.energy);
        // Per-trial errors (e1, e2) per estimator, reduced in trial order afterwards.
        std::vector<double> errors(trials * estimators * 2);
        parallel_for(trials, config.jobs, [&](std::size_t i) {
            auto rng = substream(config.seed, kStreamMse + s, i);
            const SubpixelOffset truth = draw_offset(config, rng);
            const Eigen::VectorXd z = alpha * target_signature(model, config, truth) + noise.draw(rng);
            Eigen::VectorXd t;
            for (std::size_t e = 0; e < estimators; ++e) {
                PositionEstimate estimate;
                switch (config.estimators[e]) {
                    case EstimatorId::ml:
                        if (t.size() == 0) t = bank.correlate(z);
                        estimate = estimate_ml_from(t, bank);
                        break;
                    case EstimatorId::pm:
                        if (t.size() == 0) t = bank.correlate(z);
                        estimate = estimate_pm_from(t, bank, false);
                        break;
                    case EstimatorId::default_center: estimate = estimate_default(); break;
                }
                errors[(i * estimators + e) * 2] = estimate.e1 - truth.e1;
                errors[(i * estimators + e) * 2 + 1] = estimate.e2 - truth.e2;
            }
        });
        for (std::size_t e = 0; e < estimators; ++e) {
            double sq1 = 0.0, sq2 = 0.0, b1 = 0.0, b2 = 0.0;
            for (std::size_t i = 0; i < trials; ++i) {
                const double d1 = errors[(i * estimators + e) * 2];
                const double d2 = errors[(i * estimators + e) * 2 + 1];
                sq1 += d1 * d1;
                sq2 += d2 * d2;
                b1 += d1;
                b2 += d2;
            }
            const double n = static_cast<double>(trials);
            report.rows.push_back({config.estimators[e], snr, sq1 / n, sq2 / n, (sq1 + sq2) / n, b1 / n, b2 / n, trials});
        }
    }
    return report;
}

void write_roc_csv(std::ostream& out, std::span<const RocCurve> curves) {
    out << "detector,threshold,pfa,pd\n";
    for (const auto& curve : curves) write_roc_rows(out, curve);
}

void write_mse_csv(std::ostream& out, const MseReport& report) {
    const auto precision = out.precision(12);
    out << "estimator,snr_db,mse_eps1,mse_eps2,mse_total,bias_eps1,bias_eps2,n_trials\n";
    for (const auto& row : report.rows) {
        out << estimator_name(row.estimator) << ',' << row.snr_db << ',' << row.mse_e1 << ',' << row.mse_e2 << ','
            << row.mse_total << ',' << row.bias_e1 << ',' << row.bias_e2 << ',' << row.trials << '\n';
    }
    out.precision(precision);
}

}  // namespace subpix
