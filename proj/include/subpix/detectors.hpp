#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "subpix/covariance.hpp"
#include "subpix/optics.hpp"

namespace subpix {

enum class DetectorId { gpmf, glrt, elrt, alrt, sm_glrt };

inline constexpr std::array<DetectorId, 5> kAllDetectors{DetectorId::gpmf, DetectorId::glrt, DetectorId::elrt,
                                                         DetectorId::alrt, DetectorId::sm_glrt};

std::string_view detector_name(DetectorId id);
std::optional<DetectorId> parse_detector(std::string_view name);

/// Detector output. GPMF, GLRT and SM-GLRT scores are ratios of squares; ELRT and
/// ALRT are log-likelihood ratios up to an additive constant.
struct DetectorScore {
    DetectorId id = DetectorId::gpmf;
    double score = 0.0;
    std::optional<double> alpha;
    std::optional<SubpixelOffset> offset;
};

/// Window data (mean-removed) and the image pixel it is centered on.
struct DataWindow {
    Eigen::VectorXd values;
    int center_row = 0;
    int center_col = 0;
};

/// Window of half-width w around (row, col); throws std::out_of_range if it leaves the field.
DataWindow extract_window(const NoiseField& field, int row, int col, int half_width);

/// A signature bank bound to a noise covariance: caches R^-1 s_k and s_k^t R^-1 s_k
/// for every node.
class WhitenedBank {
public:
    /// Throws NumericalError if some node has a non-positive energy.
    WhitenedBank(SignatureBank bank, const CovarianceModel& covariance);

    const SignatureBank& bank() const { return bank_; }
    std::size_t size() const { return bank_.size(); }
    int window_length() const { return bank_.window_length(); }
    /// Columns R^-1 s_k.
    const Eigen::MatrixXd& whitened() const { return whitened_; }
    /// s_k^t R^-1 s_k.
    const Eigen::VectorXd& energies() const { return energies_; }
    /// Indices 0 .. G^2 - 1 of the grid nodes (the bank minus any appended center node).
    const std::vector<std::size_t>& grid_nodes() const { return grid_nodes_; }
    /// True if the bound covariance is the exact white form.
    bool white_noise() const { return white_noise_; }

    /// Matched-filter outputs T_k(z) = s_k^t R^-1 z for every node.
    Eigen::VectorXd correlate(const Eigen::VectorXd& z) const;

private:
    SignatureBank bank_;
    Eigen::MatrixXd whitened_;
    Eigen::VectorXd energies_;
    std::vector<std::size_t> grid_nodes_;
    bool white_noise_ = false;
};

/// s_k^t R^-1 z for one node. Throws std::out_of_range for an unknown node.
double matched_statistic(const Eigen::VectorXd& z, std::size_t node, const WhitenedBank& bank);
double matched_statistic(const Eigen::VectorXd& z, SubpixelOffset node, const WhitenedBank& bank);

/// Node maximizing T_k^2 / E_k; ties go to the lowest index.
struct MlSearchResult {
    std::size_t node = 0;
    double ratio = 0.0;        // T_k^2 / E_k at the maximum
    double correlation = 0.0;  // T_k at the maximum
};
MlSearchResult ml_search(const Eigen::VectorXd& correlations, const Eigen::VectorXd& energies);

/// log sum_k w_k E_k^-1/2 exp(T_k^2 / (2 E_k)), evaluated with log-sum-exp.
double log_marginal_likelihood(const Eigen::VectorXd& correlations, const Eigen::VectorXd& energies,
                               std::span<const std::size_t> nodes, std::span<const double> weights);

DetectorScore gpmf(const Eigen::VectorXd& z, const WhitenedBank& bank);
DetectorScore glrt(const Eigen::VectorXd& z, const WhitenedBank& bank);
/// Uniform-weight quadrature over `nodes` (default: the bank's G x G grid).
DetectorScore elrt(const Eigen::VectorXd& z, const WhitenedBank& bank);
DetectorScore elrt(const Eigen::VectorXd& z, const WhitenedBank& bank, std::span<const std::size_t> nodes);

/// Trapezoidal weights (1/4, 1/2, 1/4) x (1/4, 1/2, 1/4) over the half-pixel nodes,
/// in the row-major order of build_half_pixel_bank.
const std::array<double, 9>& half_pixel_weights();
/// `half_pixel_bank` must be built from build_half_pixel_bank.
DetectorScore alrt(const Eigen::VectorXd& z, const WhitenedBank& half_pixel_bank);

/// Orthonormal basis of the dominant P-dimensional subspace of the raw grid
/// signatures (left singular vectors). Each vector's largest-magnitude entry is positive.
struct SubspaceModel {
    int order = 0;
    Eigen::MatrixXd basis;            // window length x P
    Eigen::VectorXd singular_values;  // all of them, descending
};
SubspaceModel build_subspace(const SignatureBank& bank, int order = 1);

/// Subspace bound to a covariance: D(z) = z^t R^-1 S (S^t R^-1 S)^-1 S^t R^-1 z.
class WhitenedSubspace {
public:
    /// Throws NumericalError if S^t R^-1 S is singular.
    WhitenedSubspace(const SubspaceModel& subspace, const CovarianceModel& covariance);

    int order() const { return static_cast<int>(whitened_.cols()); }
    double statistic(const Eigen::VectorXd& z) const;

private:
    Eigen::MatrixXd whitened_;  // R^-1 S
    Eigen::LLT<Eigen::MatrixXd> gram_;
};

DetectorScore sm_glrt(const Eigen::VectorXd& z, const WhitenedSubspace& subspace);
DetectorScore sm_glrt(const Eigen::VectorXd& z, const SubspaceModel& subspace, const CovarianceModel& covariance);

/// Everything needed to run all five detectors against one optics/noise setup.
/// Immutable after construction and safe to share across threads.
class DetectorSuite {
public:
    DetectorSuite(const PsfModel& model, const CovarianceModel& covariance, int half_width,
                  int grid_size = kDefaultGridSize, int quad_order = kDefaultQuadOrder, int subspace_order = 1);
    DetectorSuite(SignatureBank bank, SignatureBank half_pixel_bank, const CovarianceModel& covariance,
                  int subspace_order = 1);

    const WhitenedBank& bank() const { return bank_; }
    const WhitenedBank& half_pixel_bank() const { return half_pixel_; }
    const SubspaceModel& subspace() const { return subspace_; }
    const WhitenedSubspace& whitened_subspace() const { return whitened_subspace_; }

    DetectorScore score(DetectorId id, const Eigen::VectorXd& z) const;
    /// Scores for the listed detectors, sharing one correlation pass over the bank.
    std::vector<DetectorScore> score(std::span<const DetectorId> ids, const Eigen::VectorXd& z) const;

private:
    WhitenedBank bank_;
    WhitenedBank half_pixel_;
    SubspaceModel subspace_;
    WhitenedSubspace whitened_subspace_;
};

}  // namespace subpix
