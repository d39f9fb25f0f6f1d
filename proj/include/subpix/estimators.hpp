#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "subpix/detectors.hpp"

namespace subpix {

enum class EstimatorId { ml, pm, default_center };

std::string_view estimator_name(EstimatorId id);
std::optional<EstimatorId> parse_estimator(std::string_view name);

/// Subpixel position estimate. The posterior-mean estimator marginalizes the
/// amplitude, so it reports no alpha; apply alpha = T / E at the estimate if needed.
struct PositionEstimate {
    EstimatorId id = EstimatorId::default_center;
    double e1 = 0.0;
    double e2 = 0.0;
    std::optional<double> alpha;
    std::vector<double> weights;  // posterior over the grid nodes, PM only
};

/// Grid argmax of T_k^2 / E_k, the same search the GLRT runs.
PositionEstimate estimate_ml(const Eigen::VectorXd& z, const WhitenedBank& bank);
/// Posterior mean over the G x G grid with weights E_k^-1/2 exp(T_k^2 / (2 E_k)).
PositionEstimate estimate_pm(const Eigen::VectorXd& z, const WhitenedBank& bank);
PositionEstimate estimate_default();

/// Both estimators from precomputed correlations T = W^t z.
PositionEstimate estimate_ml_from(const Eigen::VectorXd& correlations, const WhitenedBank& bank);
PositionEstimate estimate_pm_from(const Eigen::VectorXd& correlations, const WhitenedBank& bank,
                                  bool keep_weights = true);

}  // namespace subpix
