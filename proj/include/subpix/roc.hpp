#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace subpix {

struct RocPoint {
    double threshold = 0.0;
    double pfa = 0.0;
    double pd = 0.0;
};

/// Step ROC curve, points in increasing threshold order (so Pfa and Pd never increase).
/// Empirical curves start at (1, 1) and end at (0, 0) with threshold +inf.
struct RocCurve {
    std::string label;
    std::vector<RocPoint> points;
    std::size_t trials_h0 = 0;
    std::size_t trials_h1 = 0;
    std::string config_hash;

    /// Best Pd achievable with Pfa <= pfa.
    double pd_at_pfa(double pfa) const;
    /// Smallest Pfa achieving Pd >= pd (1 if unreachable).
    double pfa_at_pd(double pd) const;
};

/// Exact empirical ROC: one threshold per distinct pooled score, decision "score >= threshold".
RocCurve empirical_roc_from_scores(std::span<const double> scores_h0, std::span<const double> scores_h1);

/// At most `max_points` points kept at log-spaced Pfa levels; endpoints always kept.
RocCurve thin_roc(const RocCurve& curve, std::size_t max_points);

/// Writes `label,threshold,pfa,pd` rows (no header).
void write_roc_rows(std::ostream& out, const RocCurve& curve);

}  // namespace subpix
