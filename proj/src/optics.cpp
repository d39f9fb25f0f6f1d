#include "subpix/optics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace subpix {

namespace {

// Below this argument the ascending series is used; above it the Hankel
// asymptotic expansion. At 14 the series loses at most ~1e-11 to cancellation and
// the smallest asymptotic term is ~1e-12, so both sides stay under 1e-10.
constexpr double kSeriesLimit = 14.0;
constexpr int kMaxSeriesTerms = 64;

const std::array<double, kMaxSeriesTerms>& series_ratios() {
    static const auto table = [] {
        std::array<double, kMaxSeriesTerms> r{};
        for (int k = 1; k < kMaxSeriesTerms; ++k) r[k] = 1.0 / (static_cast<double>(k) * (k + 1));
        return r;
    }();
    return table;
}

// J1(x)/x for 0 <= x < kSeriesLimit: 1/2 * sum_k (-x^2/4)^k / (k! (k+1)!).
double j1_over_x_series(double x) {
    const auto& ratio = series_ratios();
    const double y = 0.25 * x * x;
    double term = 0.5;
    double sum = term;
    for (int k = 1; k < kMaxSeriesTerms; ++k) {
        term *= -y * ratio[k];
        sum += term;
        if (std::abs(term) < 1e-18 && static_cast<double>(k) * k > y) break;
    }
    return sum;
}

// Hankel expansion: J1(x) = sqrt(2/(pi x)) (P cos(chi) - Q sin(chi)), chi = x - 3pi/4.
double j1_asymptotic(double x) {
    constexpr double mu = 4.0;  // 4 nu^2
    const double eight_x = 8.0 * x;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double previous = std::abs(term);
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * eight_x);
        const double magnitude = std::abs(term);
        if (magnitude > previous) break;  // series started to diverge
        // t_k enters P for even k and Q for odd k with alternating signs.
        const int m = k / 2;
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0) {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if (magnitude < 1e-17) break;
        previous = magnitude;
    }
    const double s = std::sin(x);
    const double c = std::cos(x);
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double cos_chi = (s - c) * inv_sqrt2;
    const double sin_chi = -(s + c) * inv_sqrt2;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

double j1_over_x(double x) {
    x = std::abs(x);
    if (x < kSeriesLimit) return j1_over_x_series(x);
    return j1_asymptotic(x) / x;
}

void check_window(int half_width) {
    if (half_width < 1) throw std::invalid_argument("window half-width must be >= 1");
}

}  // namespace

double bessel_j1(double x) {
    if (!std::isfinite(x)) {
        if (std::isnan(x)) return x;
        return 0.0;
    }
    const double ax = std::abs(x);
    const double value = ax < kSeriesLimit ? ax * j1_over_x_series(ax) : j1_asymptotic(ax);
    return x < 0.0 ? -value : value;
}

PsfModel::PsfModel(double cutoff) : cutoff_(cutoff), scale_(std::numbers::pi * cutoff) {
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
        throw std::invalid_argument("normalized cutoff must be finite and > 0");
    }
}

double PsfModel::value(double u, double v) const {
    // (1/pi) [J1(pi rho rc) / rho]^2 = (pi rc^2) [J1(x) / x]^2 with x = pi rho rc.
    const double rho = std::sqrt(u * u + v * v);
    const double ratio = j1_over_x(scale_ * rho);
    return scale_ * cutoff_ * ratio * ratio;
}

bool SubpixelOffset::in_pixel() const {
    return e1 >= -0.5 && e1 < 0.5 && e2 >= -0.5 && e2 < 0.5;
}

double Signature::sum() const {
    double total = 0.0;
    for (double v : values) total += v;
    return total;
}

double Signature::energy() const {
    double total = 0.0;
    for (double v : values) total += v * v;
    return total;
}

GaussLegendreRule gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 1; j <= order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = order * (z * p0 - p1) / (z * z - 1.0);
            const double step = p0 / dp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(order - 1 - i)] = z;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
    }
    if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    return rule;
}

Signature render_signature(const PsfModel& model, SubpixelOffset offset, int half_width,
                           int quad_order, OffsetDomain domain) {
    check_window(half_width);
    if (quad_order < 2) throw std::invalid_argument("quadrature order must be >= 2");
    const bool valid = domain == OffsetDomain::half_open
                           ? offset.in_pixel()
                           : (std::abs(offset.e1) <= 0.5 && std::abs(offset.e2) <= 0.5);
    if (!valid) {
        std::ostringstream msg;
        msg << "subpixel offset (" << offset.e1 << ", " << offset.e2 << ") outside "
            << (domain == OffsetDomain::half_open ? "[-0.5, 0.5[^2" : "[-0.5, 0.5]^2");
        throw std::invalid_argument(msg.str());
    }

    const GaussLegendreRule rule = gauss_legendre(quad_order);
    const int side = 2 * half_width + 1;
    const auto q = static_cast<std::size_t>(quad_order);

    // Sample coordinates along each axis; each pixel spans [i - 0.5, i + 0.5].
    std::vector<double> us(static_cast<std::size_t>(side) * q);
    std::vector<double> vs(us.size());
    for (int i = 0; i < side; ++i) {
        for (std::size_t a = 0; a < q; ++a) {
            const double x = (i - half_width) + 0.5 * rule.nodes[a];
            us[static_cast<std::size_t>(i) * q + a] = x - offset.e1;
            vs[static_cast<std::size_t>(i) * q + a] = x - offset.e2;
        }
    }

    Signature sig;
    sig.half_width = half_width;
    sig.offset = offset;
    sig.cutoff = model.cutoff();
    sig.values.assign(static_cast<std::size_t>(side) * side, 0.0);
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            double total = 0.0;
            for (std::size_t a = 0; a < q; ++a) {
                const double u = us[static_cast<std::size_t>(i) * q + a];
                double row = 0.0;
                for (std::size_t b = 0; b < q; ++b) {
                    row += rule.weights[b] * model.value(u, vs[static_cast<std::size_t>(j) * q + b]);
                }
                total += rule.weights[a] * row;
            }
            sig.values[static_cast<std::size_t>(i) * side + j] = 0.25 * total;
        }
    }
    return sig;
}

std::vector<double> grid_cell_centers(int grid_size) {
    if (grid_size < 1) throw std::invalid_argument("grid size must be >= 1");
    std::vector<double> centers(static_cast<std::size_t>(grid_size));
    for (int k = 0; k < grid_size; ++k) {
        centers[static_cast<std::size_t>(k)] = (k + 0.5) / grid_size - 0.5;
    }
    return centers;
}

double average_energy(const PsfModel& model, int half_width, std::span<const SubpixelOffset> nodes,
                      int quad_order) {
    if (nodes.empty()) throw std::invalid_argument("average_energy needs at least one node");
    double total = 0.0;
    for (const auto& node : nodes) total += render_signature(model, node, half_width, quad_order).energy();
    return total / static_cast<double>(nodes.size());
}

double average_energy(const PsfModel& model, int half_width, int grid_size, int quad_order) {
    check_window(half_width);
    const std::vector<double> centers = grid_cell_centers(grid_size);
    // The energy is invariant under sign flips and swapping of the two offset
    // components, so each orbit of the grid is rendered once.
    std::map<std::pair<double, double>, int> orbits;
    for (double a : centers) {
        for (double b : centers) {
            double x = std::abs(a);
            double y = std::abs(b);
            if (y > x) std::swap(x, y);
            ++orbits[{x, y}];
        }
    }
    double total = 0.0;
    for (const auto& [key, count] : orbits) {
        SubpixelOffset node{key.first, key.second};
        // |e| may be exactly 0.5 only for a degenerate grid; the energy is the
        // same on the closed boundary.
        total += count * render_signature(model, node, half_width, quad_order, OffsetDomain::closed).energy();
    }
    return total / static_cast<double>(centers.size() * centers.size());
}

SignatureBank::SignatureBank(double cutoff, int half_width, int grid_size, int quad_order,
                             std::vector<SubpixelOffset> nodes, Eigen::MatrixXd signatures)
    : cutoff_(cutoff),
      half_width_(half_width),
      grid_size_(grid_size),
      quad_order_(quad_order),
      nodes_(std::move(nodes)),
      signatures_(std::move(signatures)) {
    const int side = 2 * half_width_ + 1;
    if (signatures_.rows() != side * side || static_cast<std::size_t>(signatures_.cols()) != nodes_.size()) {
        throw std::invalid_argument("signature matrix shape does not match window and node count");
    }
    if (nodes_.size() < grid_count()) throw std::invalid_argument("bank holds fewer nodes than its grid");
    const auto center = std::find(nodes_.begin(), nodes_.end(), SubpixelOffset{0.0, 0.0});
    if (center == nodes_.end()) throw std::invalid_argument("signature bank must contain the (0, 0) node");
    center_index_ = static_cast<std::size_t>(center - nodes_.begin());
}

std::size_t SignatureBank::index_of(SubpixelOffset offset) const {
    const auto it = std::find(nodes_.begin(), nodes_.end(), offset);
    if (it == nodes_.end()) {
        std::ostringstream msg;
        msg << "offset (" << offset.e1 << ", " << offset.e2 << ") is not a bank node";
        throw std::out_of_range(msg.str());
    }
    return static_cast<std::size_t>(it - nodes_.begin());
}

void SignatureBank::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "# subpix-bank cutoff=" << cutoff_ << " half_width=" << half_width_ << " grid_size=" << grid_size_
        << " quad_order=" << quad_order_ << " nodes=" << nodes_.size() << '\n';
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        out << nodes_[k].e1 << ',' << nodes_[k].e2;
        for (Eigen::Index r = 0; r < signatures_.rows(); ++r) out << ',' << signatures_(r, static_cast<Eigen::Index>(k));
        out << '\n';
    }
}

SignatureBank SignatureBank::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    double cutoff = 0.0;
    int half_width = 0;
    int grid_size = 0;
    int quad_order = 0;
    std::size_t count = 0;
    {
        std::istringstream fields(header);
        std::string token;
        fields >> token;
        if (token != "#") throw std::runtime_error(path.string() + ": missing bank header");
        fields >> token;
        if (token != "subpix-bank") throw std::runtime_error(path.string() + ": not a signature bank file");
        while (fields >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "cutoff") cutoff = std::stod(value);
            else if (key == "half_width") half_width = std::stoi(value);
            else if (key == "grid_size") grid_size = std::stoi(value);
            else if (key == "quad_order") quad_order = std::stoi(value);
            else if (key == "nodes") count = std::stoul(value);
        }
    }
    const int side = 2 * half_width + 1;
    if (half_width < 1 || count == 0) throw std::runtime_error(path.string() + ": incomplete bank header");
    std::vector<SubpixelOffset> nodes;
    Eigen::MatrixXd signatures(side * side, static_cast<Eigen::Index>(count));
    std::string line;
    std::size_t k = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (k >= count) throw std::runtime_error(path.string() + ": more rows than declared nodes");
        std::istringstream row(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != static_cast<std::size_t>(side * side + 2)) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(k + 2) + " has wrong width");
        }
        nodes.push_back({cells[0], cells[1]});
        for (int r = 0; r < side * side; ++r) {
            signatures(r, static_cast<Eigen::Index>(k)) = cells[static_cast<std::size_t>(r) + 2];
        }
        ++k;
    }
    if (k != count) throw std::runtime_error(path.string() + ": fewer rows than declared nodes");
    return SignatureBank(cutoff, half_width, grid_size, quad_order, std::move(nodes), std::move(signatures));
}

SignatureBank build_signature_bank(const PsfModel& model, int grid_size, int half_width, int quad_order) {
    check_window(half_width);
    if (grid_size < 2 || grid_size % 2 != 0) throw std::invalid_argument("grid size must be even and >= 2");
    const std::vector<double> centers = grid_cell_centers(grid_size);
    std::vector<SubpixelOffset> nodes;
    nodes.reserve(centers.size() * centers.size() + 1);
    for (double a : centers) {
        for (double b : centers) nodes.push_back({a, b});
    }
    nodes.push_back({0.0, 0.0});

    const int side = 2 * half_width + 1;
    Eigen::MatrixXd signatures(side * side, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Signature sig = render_signature(model, nodes[k], half_width, quad_order);
        signatures.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(sig.values.data(), side * side);
    }
    return SignatureBank(model.cutoff(), half_width, grid_size, quad_order, std::move(nodes), std::move(signatures));
}

SignatureBank build_half_pixel_bank(const PsfModel& model, int half_width, int quad_order) {
    check_window(half_width);
    constexpr std::array<double, 3> positions{-0.5, 0.0, 0.5};
    std::vector<SubpixelOffset> nodes;
    for (double a : positions) {
        for (double b : positions) nodes.push_back({a, b});
    }
    const int side = 2 * half_width + 1;
    Eigen::MatrixXd signatures(side * side, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Signature sig = render_signature(model, nodes[k], half_width, quad_order, OffsetDomain::closed);
        signatures.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(sig.values.data(), side * side);
    }
    return SignatureBank(model.cutoff(), half_width, 3, quad_order, std::move(nodes), std::move(signatures));
}

}  // namespace subpix
