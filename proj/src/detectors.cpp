#include "subpix/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "subpix/errors.hpp"

namespace subpix {

namespace {

void check_length(const Eigen::VectorXd& z, int expected) {
    if (z.size() != expected) {
        std::ostringstream msg;
        msg << "data window has " << z.size() << " values, bank expects " << expected;
        throw std::invalid_argument(msg.str());
    }
}

DetectorScore gpmf_from(const Eigen::VectorXd& t, const WhitenedBank& bank) {
    const auto k = static_cast<Eigen::Index>(bank.bank().center_index());
    const double tk = t[k];
    const double ek = bank.energies()[k];
    return {DetectorId::gpmf, tk * tk / ek, tk / ek, std::nullopt};
}

DetectorScore glrt_from(const Eigen::VectorXd& t, const WhitenedBank& bank) {
    const MlSearchResult best = ml_search(t, bank.energies());
    const double alpha = best.correlation / bank.energies()[static_cast<Eigen::Index>(best.node)];
    return {DetectorId::glrt, best.ratio, alpha, bank.bank().node(best.node)};
}

DetectorScore elrt_from(const Eigen::VectorXd& t, const WhitenedBank& bank, std::span<const std::size_t> nodes) {
    if (nodes.empty()) throw std::invalid_argument("ELRT quadrature grid is empty");
    return {DetectorId::elrt, log_marginal_likelihood(t, bank.energies(), nodes, {}), std::nullopt, std::nullopt};
}

constexpr std::array<std::size_t, 9> kHalfPixelNodes{0, 1, 2, 3, 4, 5, 6, 7, 8};

DetectorScore alrt_from(const Eigen::VectorXd& t, const WhitenedBank& bank) {
    if (bank.size() != 9) throw std::invalid_argument("ALRT needs the nine-node half-pixel bank");
    return {DetectorId::alrt, log_marginal_likelihood(t, bank.energies(), kHalfPixelNodes, half_pixel_weights()),
            std::nullopt, std::nullopt};
}

}  // namespace

std::string_view detector_name(DetectorId id) {
    switch (id) {
        case DetectorId::gpmf: return "GPMF";
        case DetectorId::glrt: return "GLRT";
        case DetectorId::elrt: return "ELRT";
        case DetectorId::alrt: return "ALRT";
        case DetectorId::sm_glrt: return "SM-GLRT";
    }
    return "?";
}

std::optional<DetectorId> parse_detector(std::string_view name) {
    std::string lowered(name);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) {
        return c == '_' ? '-' : static_cast<char>(std::tolower(c));
    });
    for (DetectorId id : kAllDetectors) {
        std::string candidate(detector_name(id));
        std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (candidate == lowered) return id;
    }
    return std::nullopt;
}

DataWindow extract_window(const NoiseField& field, int row, int col, int half_width) {
    if (row - half_width < 0 || col - half_width < 0 || row + half_width >= field.height ||
        col + half_width >= field.width) {
        throw std::out_of_range("window leaves the field");
    }
    const int side = 2 * half_width + 1;
    DataWindow window{Eigen::VectorXd(side * side), row, col};
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) window.values[i * side + j] = field.at(row - half_width + i, col - half_width + j);
    }
    return window;
}

WhitenedBank::WhitenedBank(SignatureBank bank, const CovarianceModel& covariance)
    : bank_(std::move(bank)), white_noise_(covariance.is_white()) {
    if (covariance.dimension() != bank_.window_length()) {
        throw std::invalid_argument("covariance dimension does not match the signature window");
    }
    whitened_ = covariance.solve(bank_.signatures());
    energies_ = (bank_.signatures().array() * whitened_.array()).colwise().sum().transpose();
    for (Eigen::Index k = 0; k < energies_.size(); ++k) {
        if (!(energies_[k] > 0.0)) throw NumericalError("non-positive whitened signature energy");
    }
    grid_nodes_.resize(bank_.grid_count());
    std::iota(grid_nodes_.begin(), grid_nodes_.end(), std::size_t{0});
}

Eigen::VectorXd WhitenedBank::correlate(const Eigen::VectorXd& z) const {
    check_length(z, window_length());
    return whitened_.transpose() * z;
}

double matched_statistic(const Eigen::VectorXd& z, std::size_t node, const WhitenedBank& bank) {
    check_length(z, bank.window_length());
    if (node >= bank.size()) throw std::out_of_range("node index outside the bank");
    return bank.whitened().col(static_cast<Eigen::Index>(node)).dot(z);
}

double matched_statistic(const Eigen::VectorXd& z, SubpixelOffset node, const WhitenedBank& bank) {
    return matched_statistic(z, bank.bank().index_of(node), bank);
}

MlSearchResult ml_search(const Eigen::VectorXd& correlations, const Eigen::VectorXd& energies) {
    if (correlations.size() == 0 || correlations.size() != energies.size()) {
        throw std::invalid_argument("ML search needs matching, non-empty correlation and energy vectors");
    }
    MlSearchResult best{0, -1.0, 0.0};
    for (Eigen::Index k = 0; k < correlations.size(); ++k) {
        const double t = correlations[k];
        const double ratio = t * t / energies[k];
        if (ratio > best.ratio) best = {static_cast<std::size_t>(k), ratio, t};
    }
    return best;
}

double log_marginal_likelihood(const Eigen::VectorXd& correlations, const Eigen::VectorXd& energies,
                               std::span<const std::size_t> nodes, std::span<const double> weights) {
    if (nodes.empty()) throw std::invalid_argument("quadrature needs at least one node");
    if (!weights.empty() && weights.size() != nodes.size()) {
        throw std::invalid_argument("quadrature weights and nodes differ in length");
    }
    const double uniform = 1.0 / static_cast<double>(nodes.size());
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(nodes.size());
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        const auto k = static_cast<Eigen::Index>(nodes[m]);
        const double t = correlations[k];
        const double e = energies[k];
        const double w = weights.empty() ? uniform : weights[m];
        terms[m] = std::log(w) - 0.5 * std::log(e) + t * t / (2.0 * e);
        peak = std::max(peak, terms[m]);
    }
    double total = 0.0;
    for (double a : terms) total += std::exp(a - peak);
    return peak + std::log(total);
}

DetectorScore gpmf(const Eigen::VectorXd& z, const WhitenedBank& bank) { return gpmf_from(bank.correlate(z), bank); }

DetectorScore glrt(const Eigen::VectorXd& z, const WhitenedBank& bank) { return glrt_from(bank.correlate(z), bank); }

DetectorScore elrt(const Eigen::VectorXd& z, const WhitenedBank& bank) {
    return elrt_from(bank.correlate(z), bank, bank.grid_nodes());
}

DetectorScore elrt(const Eigen::VectorXd& z, const WhitenedBank& bank, std::span<const std::size_t> nodes) {
    for (std::size_t k : nodes) {
        if (k >= bank.size()) throw std::out_of_range("ELRT node outside the bank");
    }
    return elrt_from(bank.correlate(z), bank, nodes);
}

const std::array<double, 9>& half_pixel_weights() {
    static const std::array<double, 9> weights = [] {
        constexpr std::array<double, 3> axis{0.25, 0.5, 0.25};
        std::array<double, 9> w{};
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) w[a * 3 + b] = axis[a] * axis[b];
        }
        return w;
    }();
    return weights;
}

DetectorScore alrt(const Eigen::VectorXd& z, const WhitenedBank& half_pixel_bank) {
    return alrt_from(half_pixel_bank.correlate(z), half_pixel_bank);
}

SubspaceModel build_subspace(const SignatureBank& bank, int order) {
    const auto columns = static_cast<Eigen::Index>(bank.grid_count());
    if (order < 1 || order > std::min<Eigen::Index>(columns, bank.window_length())) {
        throw std::invalid_argument("subspace order must lie in [1, min(nodes, window length)]");
    }
    const Eigen::MatrixXd raw = bank.signatures().leftCols(columns);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(raw, Eigen::ComputeThinU);
    SubspaceModel model;
    model.order = order;
    model.singular_values = svd.singularValues();
    model.basis = svd.matrixU().leftCols(order);
    for (int p = 0; p < order; ++p) {
        Eigen::Index largest = 0;
        model.basis.col(p).cwiseAbs().maxCoeff(&largest);
        if (model.basis(largest, p) < 0.0) model.basis.col(p) *= -1.0;
    }
    return model;
}

WhitenedSubspace::WhitenedSubspace(const SubspaceModel& subspace, const CovarianceModel& covariance) {
    if (subspace.basis.rows() != covariance.dimension()) {
        throw std::invalid_argument("subspace basis does not match the covariance dimension");
    }
    whitened_ = covariance.solve(subspace.basis);
    const Eigen::MatrixXd gram = subspace.basis.transpose() * whitened_;
    gram_.compute(gram);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (gram_.info() != Eigen::Success || !(lo > 1e-12 * hi)) {
        std::ostringstream msg;
        msg << "S^t R^-1 S is singular (eigenvalues in [" << lo << ", " << hi << "])";
        throw NumericalError(msg.str());
    }
}

double WhitenedSubspace::statistic(const Eigen::VectorXd& z) const {
    check_length(z, static_cast<int>(whitened_.rows()));
    const Eigen::VectorXd projected = whitened_.transpose() * z;
    return projected.dot(gram_.solve(projected));
}

DetectorScore sm_glrt(const Eigen::VectorXd& z, const WhitenedSubspace& subspace) {
    return {DetectorId::sm_glrt, subspace.statistic(z), std::nullopt, std::nullopt};
}

DetectorScore sm_glrt(const Eigen::VectorXd& z, const SubspaceModel& subspace, const CovarianceModel& covariance) {
    return sm_glrt(z, WhitenedSubspace(subspace, covariance));
}

DetectorSuite::DetectorSuite(const PsfModel& model, const CovarianceModel& covariance, int half_width,
                             int grid_size, int quad_order, int subspace_order)
    : DetectorSuite(build_signature_bank(model, grid_size, half_width, quad_order),
                    build_half_pixel_bank(model, half_width, quad_order), covariance, subspace_order) {}

DetectorSuite::DetectorSuite(SignatureBank bank, SignatureBank half_pixel_bank, const CovarianceModel& covariance,
                             int subspace_order)
    : bank_(std::move(bank), covariance),
      half_pixel_(std::move(half_pixel_bank), covariance),
      subspace_(build_subspace(bank_.bank(), subspace_order)),
      whitened_subspace_(subspace_, covariance) {}

DetectorScore DetectorSuite::score(DetectorId id, const Eigen::VectorXd& z) const {
    const std::array<DetectorId, 1> one{id};
    return score(one, z).front();
}

std::vector<DetectorScore> DetectorSuite::score(std::span<const DetectorId> ids, const Eigen::VectorXd& z) const {
    const bool needs_bank = std::any_of(ids.begin(), ids.end(), [](DetectorId id) {
        return id == DetectorId::gpmf || id == DetectorId::glrt || id == DetectorId::elrt;
    });
    Eigen::VectorXd t;
    if (needs_bank) t = bank_.correlate(z);
    std::vector<DetectorScore> scores;
    scores.reserve(ids.size());
    for (DetectorId id : ids) {
        switch (id) {
            case DetectorId::gpmf: scores.push_back(gpmf_from(t, bank_)); break;
            case DetectorId::glrt: scores.push_back(glrt_from(t, bank_)); break;
            case DetectorId::elrt: scores.push_back(elrt_from(t, bank_, bank_.grid_nodes())); break;
            case DetectorId::alrt: scores.push_back(alrt_from(half_pixel_.correlate(z), half_pixel_)); break;
            case DetectorId::sm_glrt: scores.push_back(sm_glrt(z, whitened_subspace_)); break;
        }
    }
    return scores;
}

}  // namespace subpix
