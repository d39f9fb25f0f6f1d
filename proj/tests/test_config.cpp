#include "subpix/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace subpix {
namespace {

ExperimentConfig busy_config() {
    ExperimentConfig c;
    c.name = "busy";
    c.cutoff = 0.5;
    c.half_width = 5;
    c.grid_size = 8;
    c.quad_order = 12;
    c.subspace_order = 3;
    c.noise = NoiseKind::fractal;
    c.hurst = 0.35;
    c.clutter_size = 300;
    c.regularization = 1e-4;
    c.covariance_mode = CovarianceMode::in_sample;
    c.alpha = 0.1 + 0.2;  // not exactly representable as text with few digits
    c.energy = 1.0 / 3.0;
    c.snr_sweep = {-3.5, 0, 12.25};
    c.trials_h0 = 123;
    c.trials_h1 = 456;
    c.trials_per_snr = 789;
    c.seed = 18446744073709551557ull;
    c.jobs = 3;
    c.detectors = {DetectorId::sm_glrt, DetectorId::gpmf};
    c.estimators = {EstimatorId::pm};
    c.offset_mode = OffsetMode::fixed;
    c.fixed_offset = {0.125, -0.5};
    c.roc_max_points = 40;
    return c;
}

TEST(ConfigText, RoundTripIsExact) {
    const ExperimentConfig c = busy_config();
    const std::string text = to_config_text(c);
    const ExperimentConfig back = parse_config(text, "round-trip");
    EXPECT_EQ(to_config_text(back), text);
    EXPECT_EQ(back.alpha.value(), c.alpha.value());
    EXPECT_EQ(back.energy.value(), c.energy.value());
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.snr_sweep, c.snr_sweep);
    EXPECT_EQ(back.detectors, c.detectors);
    EXPECT_EQ(back.fixed_offset.e2, -0.5);
    EXPECT_FALSE(back.snr_db.has_value());
}

TEST(ConfigText, DefaultsRoundTrip) {
    const ExperimentConfig c;
    EXPECT_EQ(to_config_text(parse_config(to_config_text(c), "defaults")), to_config_text(c));
}

TEST(ConfigText, LaterSettingsWinAndAmplitudeKeysExclude) {
    const ExperimentConfig c = parse_config("alpha = 2\nsnr_db = 10\nseed = 4\nseed = 9\n", "t");
    EXPECT_FALSE(c.alpha.has_value());
    EXPECT_EQ(c.snr_db.value(), 10.0);
    EXPECT_EQ(c.seed, 9u);
    const ExperimentConfig d = parse_config("alpha = 2\n", "t", c);
    EXPECT_EQ(d.alpha.value(), 2.0);
    EXPECT_FALSE(d.snr_db.has_value());
    EXPECT_EQ(d.seed, 9u);  // base values survive
}

TEST(ConfigText, CommentsBlankLinesAndNone) {
    const ExperimentConfig c = parse_config("# header\n\n  energy = 0.5  # trailing\nenergy = none\n", "t");
    EXPECT_FALSE(c.energy.has_value());
}

TEST(ConfigText, TrialsSetsBothHypotheses) {
    const ExperimentConfig c = parse_config("trials = 77\n", "t");
    EXPECT_EQ(c.trials_h0, 77u);
    EXPECT_EQ(c.trials_h1, 77u);
}

TEST(ConfigErrors, ReportSourceAndLine) {
    try {
        parse_config("cutoff = 1\n\nhalf_width = two\n", "my.cfg");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("my.cfg:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_config("no equals sign\n", "t"), ConfigError);
    EXPECT_THROW(parse_config("colour = red\n", "t"), ConfigError);
    EXPECT_THROW(parse_config("noise = pink\n", "t"), ConfigError);
    EXPECT_THROW(parse_config("detectors = GLRT,XYZ\n", "t"), ConfigError);
    EXPECT_THROW(parse_config("trials_h0 = -5\n", "t"), ConfigError);
    EXPECT_THROW(parse_config("fixed_offset = 0.1\n", "t"), ConfigError);
    EXPECT_THROW(load_config_file("/nonexistent/dir/x.cfg"), std::invalid_argument);
}

TEST(ConfigFile, LoadsOnTopOfBase) {
    const auto path = std::filesystem::temp_directory_path() / "subpix_test_config.cfg";
    {
        std::ofstream out(path);
        out << "snr_db = 12\n";
    }
    const ExperimentConfig c = load_config_file(path.string(), load_preset("fig8-sampled"));
    std::filesystem::remove(path);
    EXPECT_EQ(c.snr_db.value(), 12.0);
    EXPECT_EQ(c.cutoff, 0.5);
    EXPECT_EQ(c.half_width, 5);
}

TEST(ConfigHash, IgnoresJobsOnly) {
    ExperimentConfig a = busy_config();
    ExperimentConfig b = a;
    b.jobs = 17;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed += 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Presets, AllLoadValidateAndNameThemselves) {
    const auto names = preset_names();
    EXPECT_EQ(names.size(), 8u);
    for (const std::string& name : names) {
        const ExperimentConfig c = load_preset(name);
        EXPECT_EQ(c.name, name);
        const bool roc = !c.snr_sweep.size();
        EXPECT_NO_THROW(validate(c, roc)) << name;
    }
    EXPECT_THROW(load_preset("fig99"), std::invalid_argument);
}

TEST(Presets, KeyParameters) {
    EXPECT_EQ(load_preset("fig5-high").snr_db.value(), 16.2);
    EXPECT_EQ(load_preset("fig5-low").snr_db.value(), 14.1);
    const ExperimentConfig f7 = load_preset("fig7");
    EXPECT_EQ(f7.noise, NoiseKind::fractal);
    EXPECT_EQ(f7.hurst, 0.7);
    EXPECT_EQ(f7.covariance_mode, CovarianceMode::split);
    const ExperimentConfig sampled = load_preset("fig8-sampled");
    EXPECT_EQ(sampled.cutoff, 0.5);
    EXPECT_EQ(sampled.half_width, 5);
    const ExperimentConfig mse = load_preset("fig10-right");
    EXPECT_EQ(mse.snr_sweep.size(), 9u);
    EXPECT_EQ(mse.snr_sweep.front(), 0.0);
    EXPECT_EQ(mse.snr_sweep.back(), 40.0);
}

}  // namespace
}  // namespace subpix
