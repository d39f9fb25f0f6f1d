#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subpix/clutter.hpp"
#include "subpix/covariance.hpp"
#include "subpix/detectors.hpp"
#include "subpix/estimators.hpp"
#include "subpix/optics.hpp"
#include "subpix/roc.hpp"

namespace subpix {

enum class OffsetMode { uniform, fixed };
/// Whether fractal-clutter covariance is learned on a separate image (split) or on
/// the very image the windows are drawn from (in_sample).
enum class CovarianceMode { split, in_sample };

/// Fully resolved description of one Monte Carlo experiment.
struct ExperimentConfig {
    std::string name = "custom";
    double cutoff = 2.44;
    int half_width = 2;
    int grid_size = kDefaultGridSize;
    int quad_order = kDefaultQuadOrder;
    int subspace_order = 1;

    NoiseKind noise = NoiseKind::white;
    double sigma = 1.0;
    double hurst = 0.7;
    int clutter_size = 256;
    double regularization = kDefaultRegularization;
    CovarianceMode covariance_mode = CovarianceMode::split;

    /// Exactly one of alpha / snr_db drives ROC runs; snr_sweep drives MSE runs.
    std::optional<double> alpha;
    std::optional<double> snr_db;
    std::vector<double> snr_sweep;
    /// Spot energy override; computed from the optics when absent.
    std::optional<double> energy;

    std::size_t trials_h0 = 100000;
    std::size_t trials_h1 = 100000;
    std::size_t trials_per_snr = 10000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;

    std::vector<DetectorId> detectors{kAllDetectors.begin(), kAllDetectors.end()};
    std::vector<EstimatorId> estimators{EstimatorId::ml, EstimatorId::pm, EstimatorId::default_center};
    OffsetMode offset_mode = OffsetMode::uniform;
    SubpixelOffset fixed_offset;

    /// 0 keeps every ROC point in roc.csv; otherwise thinned to this many per detector.
    std::size_t roc_max_points = 0;
};

/// Throws std::invalid_argument describing the first inconsistency found.
void validate(const ExperimentConfig& config, bool for_roc);
/// The optics, noise and offset checks shared by every run type.
void validate_model(const ExperimentConfig& config);

/// alpha = sigma 10^(snr/20) / sqrt(E), the inverse of SNR = 10 log10(alpha^2 E / sigma^2).
double snr_to_alpha(double snr_db, double sigma, double energy);
double alpha_to_snr(double alpha, double sigma, double energy);

/// Noise source and matching covariance for one configuration.
class NoiseEnvironment {
public:
    explicit NoiseEnvironment(const ExperimentConfig& config);

    const CovarianceModel& covariance() const { return covariance_; }
    /// sigma^2 for white noise, r(0,0) of the training field for clutter.
    double noise_variance() const { return noise_variance_; }
    /// One noise window drawn from `rng` (white samples or a random clutter position).
    Eigen::VectorXd draw(std::mt19937_64& rng) const;

private:
    NoiseKind kind_;
    int half_width_;
    double sigma_;
    std::optional<NoiseField> test_field_;
    CovarianceModel covariance_;
    double noise_variance_;
};

struct RocResult {
    std::vector<RocCurve> curves;  // one per selected detector, in config order
    double alpha = 0.0;
    double energy = 0.0;
    double noise_variance = 0.0;
};

RocResult run_roc(const ExperimentConfig& config);

/// Log-spaced Pfa levels from pfa_min to 1.
std::vector<double> log_pfa_grid(double pfa_min, std::size_t count);

/// Closed-form ROC of the one-sided pixel matched filter s_0^t R^-1 z under white noise,
/// for a target whose true signature is `target`. Throws for a non-white bank.
RocCurve theoretical_pmf_roc(const WhitenedBank& bank, double alpha, const Eigen::VectorXd& target,
                             std::span<const double> pfa_levels);
/// Pd averaged over the bank's G x G grid at each Pfa level.
RocCurve theoretical_pmf_mean_roc(const WhitenedBank& bank, double alpha, std::span<const double> pfa_levels);

struct MseRow {
    EstimatorId estimator = EstimatorId::default_center;
    double snr_db = 0.0;
    double mse_e1 = 0.0;
    double mse_e2 = 0.0;
    double mse_total = 0.0;  // mse_e1 + mse_e2
    double bias_e1 = 0.0;
    double bias_e2 = 0.0;
    std::size_t trials = 0;
};

struct MseReport {
    std::vector<MseRow> rows;  // SNR-major, estimators in config order
    double energy = 0.0;
};

MseReport run_mse(const ExperimentConfig& config);

/// Spot energy for the configuration: the override if set, else average_energy().
double resolve_energy(const ExperimentConfig& config);

void write_roc_csv(std::ostream& out, std::span<const RocCurve> curves);
void write_mse_csv(std::ostream& out, const MseReport& report);

}  // namespace subpix
