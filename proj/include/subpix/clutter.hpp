#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace subpix {

enum class NoiseKind { white, fractal };

/// Row-major image of noise samples. `parameter` is sigma for white fields and the
/// Hurst exponent for fractal ones.
struct NoiseField {
    int width = 0;
    int height = 0;
    NoiseKind kind = NoiseKind::white;
    double parameter = 0.0;
    std::vector<double> values;

    double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
    }
    double mean() const;
    double variance() const;  // population variance around the empirical mean
};

NoiseField sample_white(double sigma, int width, int height, std::uint64_t seed);

/// Spectral-synthesis fractional Brownian surface on a size x size torus: Gaussian
/// spectral coefficients with amplitude |f|^-(H+1) (power spectrum |f|^-(2H+2)),
/// zero DC, Hermitian-symmetrized and inverse transformed. Returned with zero mean
/// and unit variance. `size` must be a power of two.
NoiseField synthesize_fbm(double hurst, int size, std::uint64_t seed);

NoiseField remove_mean(const NoiseField& field);

/// Top-left width x height sub-image.
NoiseField crop(const NoiseField& field, int width, int height);

/// Biased sample autocovariance r(di, dj) = (1/N) sum x[i,j] x[i+di, j+dj] of the
/// mean-removed field for |di|, |dj| <= max_lag; di runs along rows.
struct AutocovarianceTable {
    int max_lag = 0;
    std::vector<double> values;  // (2L+1)^2, index (di + L) * (2L + 1) + (dj + L)

    double at(int di, int dj) const {
        const int side = 2 * max_lag + 1;
        return values[static_cast<std::size_t>((di + max_lag) * side + (dj + max_lag))];
    }
    double variance() const { return at(0, 0); }
};

AutocovarianceTable estimate_autocovariance(const NoiseField& field, int max_lag);

/// Acf of a white field: `variance` at lag zero, zero elsewhere.
AutocovarianceTable white_autocovariance(double variance, int max_lag);

void write_pgm(const NoiseField& field, const std::filesystem::path& path);
void write_field_csv(const NoiseField& field, const std::filesystem::path& path);
void write_acf_csv(const AutocovarianceTable& acf, const std::filesystem::path& path);
/// Reads the `di,dj,value` format written by write_acf_csv.
AutocovarianceTable read_acf_csv(const std::filesystem::path& path);

/// Radially averaged periodogram slope (log power vs log frequency) over
/// frequencies in [f_low, f_high] cycles/pixel. Square fields only.
double spectral_slope(const NoiseField& field, double f_low, double f_high);

}  // namespace subpix
