#include "subpix/harness.hpp"
#include "subpix/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace subpix {
namespace {

// Small, fast configuration: coarse grid and a fixed energy so no full-plane render is needed.
ExperimentConfig quick_config() {
    ExperimentConfig c;
    c.grid_size = 4;
    c.energy = 0.51;
    c.snr_db = 12.0;
    c.trials_h0 = 400;
    c.trials_h1 = 400;
    c.trials_per_snr = 300;
    c.snr_sweep = {0.0, 20.0};
    return c;
}

void expect_same_curves(const RocResult& a, const RocResult& b) {
    ASSERT_EQ(a.curves.size(), b.curves.size());
    for (std::size_t d = 0; d < a.curves.size(); ++d) {
        ASSERT_EQ(a.curves[d].points.size(), b.curves[d].points.size());
        for (std::size_t k = 0; k < a.curves[d].points.size(); ++k) {
            EXPECT_EQ(a.curves[d].points[k].threshold, b.curves[d].points[k].threshold);
            EXPECT_EQ(a.curves[d].points[k].pd, b.curves[d].points[k].pd);
        }
    }
}

TEST(Snr, AlphaConversionRoundTrip) {
    EXPECT_NEAR(snr_to_alpha(15.0, 1.0, 0.52), std::pow(10.0, 0.75) / std::sqrt(0.52), 1e-14);
    for (double snr : {-5.0, 0.0, 16.2, 40.0}) {
        EXPECT_NEAR(alpha_to_snr(snr_to_alpha(snr, 2.0, 0.08), 2.0, 0.08), snr, 1e-12);
    }
    EXPECT_THROW(snr_to_alpha(10.0, 0.0, 1.0), std::invalid_argument);
}

TEST(Validate, ModelChecksIgnoreRunSettings) {
    ExperimentConfig c = quick_config();
    c.snr_sweep.clear();
    c.snr_db.reset();
    EXPECT_NO_THROW(validate_model(c));
    c.cutoff = 0.0;
    EXPECT_THROW(validate_model(c), std::invalid_argument);
}

TEST(Validate, RejectsInconsistentConfigs) {
    ExperimentConfig c = quick_config();
    EXPECT_NO_THROW(validate(c, true));
    EXPECT_NO_THROW(validate(c, false));
    c.alpha = 1.0;
    EXPECT_THROW(validate(c, true), std::invalid_argument);  // both alpha and snr
    c.snr_db.reset();
    EXPECT_NO_THROW(validate(c, true));
    c.grid_size = 5;
    EXPECT_THROW(validate(c, true), std::invalid_argument);
    c = quick_config();
    c.snr_sweep.clear();
    EXPECT_THROW(validate(c, false), std::invalid_argument);
    c = quick_config();
    c.noise = NoiseKind::fractal;
    c.clutter_size = 100;
    EXPECT_THROW(validate(c, true), std::invalid_argument);
    c = quick_config();
    c.detectors.clear();
    EXPECT_THROW(validate(c, true), std::invalid_argument);
}

TEST(NoiseEnvironment, WhiteDrawsHaveSigmaSquaredVariance) {
    ExperimentConfig c = quick_config();
    c.sigma = 1.5;
    const NoiseEnvironment env(c);
    EXPECT_TRUE(env.covariance().is_white());
    EXPECT_DOUBLE_EQ(env.noise_variance(), 2.25);
    std::mt19937_64 rng(1);
    double total = 0.0;
    int count = 0;
    for (int k = 0; k < 4000; ++k) {
        for (double v : env.draw(rng)) {
            total += v * v;
            ++count;
        }
    }
    EXPECT_NEAR(total / count, 2.25, 0.05);
}

TEST(NoiseEnvironment, FractalUsesLearnedCovariance) {
    ExperimentConfig c = quick_config();
    c.noise = NoiseKind::fractal;
    c.clutter_size = 64;
    const NoiseEnvironment env(c);
    EXPECT_FALSE(env.covariance().is_white());
    EXPECT_EQ(env.covariance().dimension(), 25);
    // Standardized field: the biased lag-zero variance of the training image is one.
    EXPECT_NEAR(env.noise_variance(), 1.0, 1e-9);
    std::mt19937_64 a(5), b(5);
    EXPECT_EQ(env.draw(a), env.draw(b));
}

TEST(RunRoc, DeterministicAcrossThreadCounts) {
    ExperimentConfig c = quick_config();
    c.jobs = 1;
    const RocResult serial = run_roc(c);
    c.jobs = 4;
    const RocResult parallel = run_roc(c);
    expect_same_curves(serial, parallel);
    c.seed = 2;
    const RocResult other = run_roc(c);
    EXPECT_NE(other.curves[0].points[10].threshold, serial.curves[0].points[10].threshold);
}

TEST(RunRoc, FractalDeterministicAcrossThreadCounts) {
    ExperimentConfig c = quick_config();
    c.noise = NoiseKind::fractal;
    c.clutter_size = 64;
    c.snr_db.reset();
    c.alpha = 0.4;
    c.jobs = 1;
    const RocResult serial = run_roc(c);
    c.jobs = 3;
    expect_same_curves(serial, run_roc(c));
}

TEST(RunRoc, CurveLayoutFollowsConfig) {
    ExperimentConfig c = quick_config();
    c.detectors = {DetectorId::glrt, DetectorId::gpmf};
    const RocResult r = run_roc(c);
    ASSERT_EQ(r.curves.size(), 2u);
    EXPECT_EQ(r.curves[0].label, "GLRT");
    EXPECT_EQ(r.curves[1].label, "GPMF");
    EXPECT_EQ(r.curves[0].trials_h0, 400u);
    EXPECT_FALSE(r.curves[0].config_hash.empty());
    EXPECT_DOUBLE_EQ(r.alpha, snr_to_alpha(12.0, 1.0, 0.51));
    EXPECT_DOUBLE_EQ(r.energy, 0.51);
}

TEST(RunRoc, ZeroAmplitudeGivesChanceCurve) {
    ExperimentConfig c = quick_config();
    c.snr_db.reset();
    c.alpha = 0.0;
    c.trials_h0 = c.trials_h1 = 5000;
    c.detectors = {DetectorId::glrt};
    const RocCurve curve = run_roc(c).curves[0];
    for (double pfa : {0.05, 0.2, 0.5}) EXPECT_NEAR(curve.pd_at_pfa(pfa), pfa, 0.03);
}

TEST(RunRoc, ThinningBoundsPointCount) {
    ExperimentConfig c = quick_config();
    c.roc_max_points = 40;
    for (const auto& curve : run_roc(c).curves) EXPECT_LE(curve.points.size(), 40u);
}

TEST(LogPfaGrid, EndpointsAndSpacing) {
    const auto grid = log_pfa_grid(1e-4, 5);
    ASSERT_EQ(grid.size(), 5u);
    EXPECT_NEAR(grid.front(), 1e-4, 1e-18);
    EXPECT_NEAR(grid.back(), 1.0, 1e-15);
    EXPECT_NEAR(grid[1], 1e-3, 1e-15);
}

TEST(TheoreticalPmf, CenteredTargetClosedForm) {
    const WhitenedBank bank(build_signature_bank(PsfModel(2.44), 4, 2), CovarianceModel::white(2, 1.0));
    const double alpha = 5.0;
    const std::vector<double> levels{1e-4, 1e-2, 0.3};
    const Eigen::VectorXd s0 = bank.bank().signature(bank.bank().center_index());
    const RocCurve curve = theoretical_pmf_roc(bank, alpha, s0, levels);
    const double e0 = s0.squaredNorm();
    // Points run in increasing threshold order, so Pfa levels come back reversed.
    ASSERT_EQ(curve.points.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        const double pfa = levels[2 - k];
        EXPECT_NEAR(curve.points[k].pfa, pfa, 1e-15);
        EXPECT_NEAR(curve.points[k].pd, normal_tail(normal_tail_inverse(pfa) - alpha * std::sqrt(e0)), 1e-12);
        EXPECT_NEAR(curve.points[k].threshold, std::sqrt(e0) * normal_tail_inverse(pfa), 1e-12);
    }
}

TEST(TheoreticalPmf, MatchesOneSidedMonteCarlo) {
    const WhitenedBank bank(build_signature_bank(PsfModel(2.44), 4, 2), CovarianceModel::white(2, 1.0));
    const Eigen::VectorXd s0 = bank.bank().signature(bank.bank().center_index());
    const Signature target = render_signature(PsfModel(2.44), {0.3, -0.4}, 2);
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(target.values.data(), 25);
    const double alpha = 4.0;
    const std::vector<double> levels{1e-2, 0.1};
    const RocCurve curve = theoretical_pmf_roc(bank, alpha, s, levels);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    constexpr int n = 100000;
    std::vector<double> t(n);
    for (int m = 0; m < n; ++m) {
        double acc = 0.0;
        for (int k = 0; k < 25; ++k) acc += s0[k] * (normal(rng) + alpha * s[k]);
        t[static_cast<std::size_t>(m)] = acc;
    }
    const double sd = s0.norm();
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const RocPoint& point = curve.points[levels.size() - 1 - l];
        const double tau = sd * normal_tail_inverse(point.pfa);
        double hits = 0;
        for (double v : t) hits += v >= tau ? 1 : 0;
        const double pd = point.pd;
        EXPECT_NEAR(hits / n, pd, 4.0 * std::sqrt(pd * (1 - pd) / n) + 1e-4);
    }
}

TEST(TheoreticalPmf, MeanCurveAveragesGridNodes) {
    const WhitenedBank bank(build_signature_bank(PsfModel(2.44), 4, 2), CovarianceModel::white(2, 1.0));
    const std::vector<double> levels{1e-3, 0.1};
    const RocCurve mean = theoretical_pmf_mean_roc(bank, 3.0, levels);
    for (std::size_t l = 0; l < levels.size(); ++l) {
        double total = 0.0;
        for (std::size_t k = 0; k < 16; ++k) {
            total += theoretical_pmf_roc(bank, 3.0, bank.bank().signature(k), levels).points[l].pd;
        }
        EXPECT_NEAR(mean.points[l].pd, total / 16, 1e-14);
    }
}

TEST(TheoreticalPmf, RejectsColoredNoise) {
    const WhitenedBank bank(build_signature_bank(PsfModel(2.44), 2, 1),
                            CovarianceModel::from_autocovariance(white_autocovariance(1.0, 2), 1));
    const std::vector<double> levels{0.1};
    EXPECT_THROW(theoretical_pmf_mean_roc(bank, 1.0, levels), std::invalid_argument);
}

TEST(RunMse, DefaultEstimatorIsUniformVariance) {
    ExperimentConfig c = quick_config();
    c.snr_sweep = {10.0};
    c.trials_per_snr = 4000;
    c.estimators = {EstimatorId::default_center};
    const MseReport report = run_mse(c);
    ASSERT_EQ(report.rows.size(), 1u);
    const MseRow& row = report.rows[0];
    // Var of a squared U(-1/2, 1/2) is 1/80 - 1/144; standard error over 4000 trials ~0.0013.
    const double se = std::sqrt(1.0 / 80 - 1.0 / 144) / std::sqrt(4000.0);
    EXPECT_NEAR(row.mse_e1, 1.0 / 12, 4 * se);
    EXPECT_NEAR(row.mse_e2, 1.0 / 12, 4 * se);
    EXPECT_DOUBLE_EQ(row.mse_total, row.mse_e1 + row.mse_e2);
    EXPECT_NEAR(row.bias_e1, 0.0, 0.02);
    EXPECT_EQ(row.trials, 4000u);
}

TEST(RunMse, LayoutDeterminismAndSnrTrend) {
    ExperimentConfig c = quick_config();
    c.jobs = 1;
    const MseReport serial = run_mse(c);
    c.jobs = 4;
    const MseReport parallel = run_mse(c);
    ASSERT_EQ(serial.rows.size(), 6u);  // 2 SNRs x 3 estimators
    for (std::size_t k = 0; k < serial.rows.size(); ++k) {
        EXPECT_EQ(serial.rows[k].mse_e1, parallel.rows[k].mse_e1);
        EXPECT_EQ(serial.rows[k].mse_e2, parallel.rows[k].mse_e2);
    }
    EXPECT_EQ(serial.rows[0].snr_db, 0.0);
    EXPECT_EQ(serial.rows[0].estimator, EstimatorId::ml);
    EXPECT_EQ(serial.rows[3].snr_db, 20.0);
    // ML error falls well below the prior variance at high SNR.
    EXPECT_LT(serial.rows[3].mse_total, 0.5 * serial.rows[0].mse_total);
}

TEST(CsvWriters, Headers) {
    std::ostringstream roc;
    RocCurve curve;
    curve.label = "GPMF";
    curve.points = {{1.0, 0.5, 0.75}};
    write_roc_csv(roc, std::span<const RocCurve>(&curve, 1));
    EXPECT_EQ(roc.str(), "detector,threshold,pfa,pd\nGPMF,1,0.5,0.75\n");

    std::ostringstream mse;
    MseReport report;
    report.rows.push_back({EstimatorId::pm, 5.0, 0.01, 0.02, 0.03, 0.001, -0.001, 10});
    write_mse_csv(mse, report);
    const std::string text = mse.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "estimator,snr_db,mse_eps1,mse_eps2,mse_total,bias_eps1,bias_eps2,n_trials");
    EXPECT_NE(text.find("PM,5,0.01,0.02,0.03,0.001,-0.001,10"), std::string::npos);
}

}  // namespace
}  // namespace subpix
