#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace subpix {

/// Default tensor-product Gauss-Legendre order per pixel axis.
inline constexpr int kDefaultQuadOrder = 16;
/// Window half-width used to evaluate the (effectively full-plane) spot energy.
inline constexpr int kEnergyHalfWidth = 25;
/// Default subpixel grid resolution per axis.
inline constexpr int kDefaultGridSize = 20;

/// Bessel function of the first kind, order one.
double bessel_j1(double x);

/// Diffraction-limited circular-aperture optics, described by the cutoff
/// frequency normalized to the sampling frequency.
class PsfModel {
public:
    explicit PsfModel(double cutoff);

    double cutoff() const { return cutoff_; }

    /// Airy intensity at focal-plane position (u, v), in pixel units.
    /// Integrates to one over the plane.
    double value(double u, double v) const;

private:
    double cutoff_;
    double scale_;  // pi * cutoff
};

inline double psf_value(const PsfModel& model, double u, double v) { return model.value(u, v); }

/// Target offset from the pixel center, in pixels.
struct SubpixelOffset {
    double e1 = 0.0;
    double e2 = 0.0;

    /// True if both components lie in [-0.5, 0.5[.
    bool in_pixel() const;
    friend bool operator==(const SubpixelOffset&, const SubpixelOffset&) = default;
};

/// Whether an offset must lie in the half-open pixel or may sit on its closed boundary.
/// Boundary offsets are only needed by the half-pixel trapezoidal rule.
enum class OffsetDomain { half_open, closed };

/// Pixel-integrated spot on a (2w+1) x (2w+1) window centered on pixel (0, 0).
/// Row index i follows the first offset component.
struct Signature {
    int half_width = 0;
    SubpixelOffset offset;
    double cutoff = 0.0;
    std::vector<double> values;  // row-major, (i + w) * (2w + 1) + (j + w)

    int side() const { return 2 * half_width + 1; }
    double at(int i, int j) const {
        return values[static_cast<std::size_t>((i + half_width) * side() + (j + half_width))];
    }
    double sum() const;
    double energy() const;  // sum of squared values
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int order);

/// Integrates the PSF over every window pixel. Throws std::invalid_argument on a bad
/// offset, window or order.
Signature render_signature(const PsfModel& model, SubpixelOffset offset, int half_width,
                           int quad_order = kDefaultQuadOrder,
                           OffsetDomain domain = OffsetDomain::half_open);

/// Cell centers of an even G-partition of [-0.5, 0.5[: (k + 0.5) / G - 0.5.
std::vector<double> grid_cell_centers(int grid_size);

/// Spot energy sum_ij s[i,j]^2 averaged over the given offsets.
double average_energy(const PsfModel& model, int half_width, std::span<const SubpixelOffset> nodes,
                      int quad_order = kDefaultQuadOrder);
/// Average over the G x G cell-center grid. Exploits the grid's dihedral symmetry.
double average_energy(const PsfModel& model, int half_width = kEnergyHalfWidth,
                      int grid_size = kDefaultGridSize, int quad_order = kDefaultQuadOrder);

/// Signatures rendered on the G x G cell-center grid (row-major in offset), followed
/// by the exact center node (0, 0).
class SignatureBank {
public:
    SignatureBank(double cutoff, int half_width, int grid_size, int quad_order,
                  std::vector<SubpixelOffset> nodes, Eigen::MatrixXd signatures);

    double cutoff() const { return cutoff_; }
    int half_width() const { return half_width_; }
    int grid_size() const { return grid_size_; }
    int quad_order() const { return quad_order_; }
    int window_length() const { return static_cast<int>(signatures_.rows()); }

    std::size_t size() const { return nodes_.size(); }
    /// Number of leading nodes that form the G x G grid.
    std::size_t grid_count() const { return static_cast<std::size_t>(grid_size_) * grid_size_; }
    /// Index of the (0, 0) node.
    std::size_t center_index() const { return center_index_; }

    const std::vector<SubpixelOffset>& nodes() const { return nodes_; }
    const SubpixelOffset& node(std::size_t k) const { return nodes_.at(k); }
    /// Window-length column per node.
    const Eigen::MatrixXd& signatures() const { return signatures_; }
    Eigen::VectorXd signature(std::size_t k) const { return signatures_.col(static_cast<Eigen::Index>(k)); }

    /// Exact-match lookup; throws std::out_of_range if the offset is not a node.
    std::size_t index_of(SubpixelOffset offset) const;

    /// CSV cache: a `#` header line with the bank parameters, then one row per node
    /// holding e1, e2 and the row-major window values.
    void save_csv(const std::filesystem::path& path) const;
    static SignatureBank load_csv(const std::filesystem::path& path);

private:
    double cutoff_;
    int half_width_;
    int grid_size_;
    int quad_order_;
    std::vector<SubpixelOffset> nodes_;
    Eigen::MatrixXd signatures_;
    std::size_t center_index_;
};

SignatureBank build_signature_bank(const PsfModel& model, int grid_size, int half_width,
                                   int quad_order = kDefaultQuadOrder);

/// The nine half-pixel nodes {-0.5, 0, 0.5}^2 (row-major), rendered exactly on the
/// closed pixel. grid_size() is 3 and there is no extra center node.
SignatureBank build_half_pixel_bank(const PsfModel& model, int half_width,
                                    int quad_order = kDefaultQuadOrder);

}  // namespace subpix
