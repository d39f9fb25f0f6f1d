#include "subpix/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

namespace subpix {

std::string_view estimator_name(EstimatorId id) {
    switch (id) {
        case EstimatorId::ml: return "ML";
        case EstimatorId::pm: return "PM";
        case EstimatorId::default_center: return "DEFAULT";
    }
    return "?";
}

std::optional<EstimatorId> parse_estimator(std::string_view name) {
    std::string lowered(name);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "ml") return EstimatorId::ml;
    if (lowered == "pm") return EstimatorId::pm;
    if (lowered == "default") return EstimatorId::default_center;
    return std::nullopt;
}

PositionEstimate estimate_ml_from(const Eigen::VectorXd& correlations, const WhitenedBank& bank) {
    const MlSearchResult best = ml_search(correlations, bank.energies());
    const SubpixelOffset& node = bank.bank().node(best.node);
    return {EstimatorId::ml, node.e1, node.e2, best.correlation / bank.energies()[static_cast<Eigen::Index>(best.node)],
            {}};
}

PositionEstimate estimate_pm_from(const Eigen::VectorXd& correlations, const WhitenedBank& bank, bool keep_weights) {
    const auto& nodes = bank.grid_nodes();
    const auto& energies = bank.energies();
    std::vector<double> log_weights(nodes.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        const auto k = static_cast<Eigen::Index>(nodes[m]);
        const double t = correlations[k];
        log_weights[m] = -0.5 * std::log(energies[k]) + t * t / (2.0 * energies[k]);
        peak = std::max(peak, log_weights[m]);
    }
    double total = 0.0;
    for (double& w : log_weights) {
        w = std::exp(w - peak);
        total += w;
    }
    PositionEstimate estimate{EstimatorId::pm, 0.0, 0.0, std::nullopt, {}};
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        log_weights[m] /= total;
        const SubpixelOffset& node = bank.bank().node(nodes[m]);
        estimate.e1 += log_weights[m] * node.e1;
        estimate.e2 += log_weights[m] * node.e2;
    }
    if (keep_weights) estimate.weights = std::move(log_weights);
    return estimate;
}

PositionEstimate estimate_ml(const Eigen::VectorXd& z, const WhitenedBank& bank) {
    return estimate_ml_from(bank.correlate(z), bank);
}

PositionEstimate estimate_pm(const Eigen::VectorXd& z, const WhitenedBank& bank) {
    return estimate_pm_from(bank.correlate(z), bank);
}

PositionEstimate estimate_default() { return {EstimatorId::default_center, 0.0, 0.0, std::nullopt, {}}; }

}  // namespace subpix
