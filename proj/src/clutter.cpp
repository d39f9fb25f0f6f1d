#include "subpix/clutter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fftw3.h>

namespace subpix {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwDeleter> fftw_buffer(std::size_t count) {
    auto* raw = static_cast<T*>(fftw_malloc(sizeof(T) * count));
    if (raw == nullptr) throw std::bad_alloc();
    return std::unique_ptr<T[], FftwDeleter>(raw);
}

void standardize(std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double& v : values) {
        v -= mean;
        var += v * v;
    }
    const double scale = 1.0 / std::sqrt(var / n);
    for (double& v : values) v *= scale;
}

}  // namespace

double NoiseField::mean() const {
    double total = 0.0;
    for (double v : values) total += v;
    return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

double NoiseField::variance() const {
    const double m = mean();
    double total = 0.0;
    for (double v : values) total += (v - m) * (v - m);
    return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

NoiseField sample_white(double sigma, int width, int height, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw std::invalid_argument("white noise sigma must be > 0");
    if (width < 1 || height < 1) throw std::invalid_argument("field dimensions must be positive");
    NoiseField field{width, height, NoiseKind::white, sigma, {}};
    field.values.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (double& v : field.values) v = sigma * normal(rng);
    return field;
}

NoiseField synthesize_fbm(double hurst, int size, std::uint64_t seed) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("Hurst exponent must lie in (0, 1)");
    if (!is_power_of_two(size) || size < 4) throw std::invalid_argument("fBm size must be a power of two >= 4");

    const int n = size;
    const int half = n / 2 + 1;
    const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(half);
    auto spectrum = fftw_buffer<fftw_complex>(count);
    auto image = fftw_buffer<double>(static_cast<std::size_t>(n) * n);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double exponent = -(hurst + 1.0);
    auto coefficient = [&](int r, int c) -> fftw_complex& { return spectrum[static_cast<std::size_t>(r) * half + c]; };
    for (int r = 0; r < n; ++r) {
        const double fr = static_cast<double>(r <= n / 2 ? r : r - n) / n;
        for (int c = 0; c < half; ++c) {
            const double fc = static_cast<double>(c) / n;
            const double f = std::sqrt(fr * fr + fc * fc);
            const double amplitude = (r == 0 && c == 0) ? 0.0 : std::pow(f, exponent);
            const double re = normal(rng);
            const double im = normal(rng);
            coefficient(r, c)[0] = amplitude * re;
            coefficient(r, c)[1] = amplitude * im;
        }
    }
    // Columns c = 0 and c = n/2 hold their own conjugates: mirror rows, and keep the
    // self-conjugate entries real.
    for (int c : {0, n / 2}) {
        for (int r = 1; r < n / 2; ++r) {
            coefficient(n - r, c)[0] = coefficient(r, c)[0];
            coefficient(n - r, c)[1] = -coefficient(r, c)[1];
        }
        coefficient(0, c)[1] = 0.0;
        coefficient(n / 2, c)[1] = 0.0;
    }

    fftw_plan plan = fftw_plan_dft_c2r_2d(n, n, spectrum.get(), image.get(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    NoiseField field{n, n, NoiseKind::fractal, hurst, {}};
    field.values.assign(image.get(), image.get() + static_cast<std::size_t>(n) * n);
    standardize(field.values);
    return field;
}

NoiseField remove_mean(const NoiseField& field) {
    NoiseField out = field;
    const double m = field.mean();
    for (double& v : out.values) v -= m;
    return out;
}

NoiseField crop(const NoiseField& field, int width, int height) {
    if (width < 1 || height < 1 || width > field.width || height > field.height) {
        throw std::invalid_argument("crop size exceeds field");
    }
    NoiseField out{width, height, field.kind, field.parameter, {}};
    out.values.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) out.values.push_back(field.at(r, c));
    }
    return out;
}

AutocovarianceTable estimate_autocovariance(const NoiseField& field, int max_lag) {
    if (max_lag < 0) throw std::invalid_argument("max lag must be >= 0");
    if (2 * max_lag >= std::min(field.width, field.height)) {
        throw std::invalid_argument("field too small for the requested autocovariance lag");
    }
    const NoiseField centered = remove_mean(field);
    const int side = 2 * max_lag + 1;
    const double n = static_cast<double>(centered.values.size());
    AutocovarianceTable acf{max_lag, std::vector<double>(static_cast<std::size_t>(side) * side, 0.0)};
    // r(-di, -dj) = r(di, dj): fill the half plane di > 0 or (di == 0, dj >= 0) and mirror.
    for (int di = 0; di <= max_lag; ++di) {
        for (int dj = -max_lag; dj <= max_lag; ++dj) {
            if (di == 0 && dj < 0) continue;
            double total = 0.0;
            const int c0 = std::max(0, -dj);
            const int c1 = std::min(centered.width, centered.width - dj);
            for (int r = 0; r + di < centered.height; ++r) {
                const double* row = &centered.values[static_cast<std::size_t>(r) * centered.width];
                const double* lagged = &centered.values[static_cast<std::size_t>(r + di) * centered.width];
                for (int c = c0; c < c1; ++c) total += row[c] * lagged[c + dj];
            }
            const double value = total / n;
            acf.values[static_cast<std::size_t>((di + max_lag) * side + (dj + max_lag))] = value;
            acf.values[static_cast<std::size_t>((-di + max_lag) * side + (-dj + max_lag))] = value;
        }
    }
    return acf;
}

AutocovarianceTable white_autocovariance(double variance, int max_lag) {
    if (!(variance > 0.0)) throw std::invalid_argument("variance must be > 0");
    if (max_lag < 0) throw std::invalid_argument("max lag must be >= 0");
    const int side = 2 * max_lag + 1;
    AutocovarianceTable acf{max_lag, std::vector<double>(static_cast<std::size_t>(side) * side, 0.0)};
    acf.values[static_cast<std::size_t>(max_lag * side + max_lag)] = variance;
    return acf;
}

void write_pgm(const NoiseField& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
    const double range = *hi - *lo;
    out << "P5\n" << field.width << ' ' << field.height << "\n255\n";
    for (double v : field.values) {
        const double scaled = range > 0.0 ? (v - *lo) / range * 255.0 : 0.0;
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
    }
}

void write_field_csv(const NoiseField& field, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (int r = 0; r < field.height; ++r) {
        for (int c = 0; c < field.width; ++c) {
            if (c > 0) out << ',';
            out << field.at(r, c);
        }
        out << '\n';
    }
}

void write_acf_csv(const AutocovarianceTable& acf, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "di,dj,value\n";
    for (int di = -acf.max_lag; di <= acf.max_lag; ++di) {
        for (int dj = -acf.max_lag; dj <= acf.max_lag; ++dj) out << di << ',' << dj << ',' << acf.at(di, dj) << '\n';
    }
}

AutocovarianceTable read_acf_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("di,dj,value", 0) != 0) throw std::runtime_error(path.string() + ": expected header di,dj,value");
    std::map<std::pair<int, int>, double> entries;
    int max_lag = 0;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a;
        std::string b;
        std::string v;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, v)) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": malformed row");
        }
        const int di = std::stoi(a);
        const int dj = std::stoi(b);
        entries[{di, dj}] = std::stod(v);
        max_lag = std::max({max_lag, std::abs(di), std::abs(dj)});
    }
    const int side = 2 * max_lag + 1;
    if (entries.size() != static_cast<std::size_t>(side) * side) {
        throw std::runtime_error(path.string() + ": acf table is not a full square of lags");
    }
    AutocovarianceTable acf{max_lag, std::vector<double>(static_cast<std::size_t>(side) * side)};
    for (const auto& [key, value] : entries) {
        acf.values[static_cast<std::size_t>((key.first + max_lag) * side + (key.second + max_lag))] = value;
    }
    return acf;
}

double spectral_slope(const NoiseField& field, double f_low, double f_high) {
    if (field.width != field.height) throw std::invalid_argument("spectral slope needs a square field");
    if (!(f_low > 0.0 && f_high > f_low)) throw std::invalid_argument("bad frequency band");
    const int n = field.width;
    const int half = n / 2 + 1;
    auto image = fftw_buffer<double>(static_cast<std::size_t>(n) * n);
    auto spectrum = fftw_buffer<fftw_complex>(static_cast<std::size_t>(n) * half);
    const double m = field.mean();
    for (std::size_t k = 0; k < field.values.size(); ++k) image[k] = field.values[k] - m;
    fftw_plan plan = fftw_plan_dft_r2c_2d(n, n, image.get(), spectrum.get(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    // Integer radial bins in units of 1/n cycles per pixel.
    std::vector<double> power(static_cast<std::size_t>(n), 0.0);
    std::vector<int> hits(static_cast<std::size_t>(n), 0);
    for (int r = 0; r < n; ++r) {
        const int kr = r <= n / 2 ? r : r - n;
        for (int c = 0; c < half; ++c) {
            const auto bin = static_cast<std::size_t>(std::lround(std::sqrt(double(kr) * kr + double(c) * c)));
            if (bin >= power.size()) continue;
            const auto& z = spectrum[static_cast<std::size_t>(r) * half + c];
            power[bin] += z[0] * z[0] + z[1] * z[1];
            ++hits[bin];
        }
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int points = 0;
    for (std::size_t bin = 1; bin < power.size(); ++bin) {
        const double f = static_cast<double>(bin) / n;
        if (f < f_low || f > f_high || hits[bin] == 0) continue;
        const double x = std::log(f);
        const double y = std::log(power[bin] / hits[bin]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++points;
    }
    if (points < 2) throw std::invalid_argument("frequency band holds fewer than two bins");
    return (points * sxy - sx * sy) / (points * sxx - sx * sx);
}

}  // namespace subpix
