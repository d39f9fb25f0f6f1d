#include "subpix/roc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace subpix {

double RocCurve::pd_at_pfa(double pfa) const {
    double best = 0.0;
    for (const auto& p : points) {
        if (p.pfa <= pfa) best = std::max(best, p.pd);
    }
    return best;
}

double RocCurve::pfa_at_pd(double pd) const {
    double best = 1.0;
    for (const auto& p : points) {
        if (p.pd >= pd) best = std::min(best, p.pfa);
    }
    return best;
}

RocCurve empirical_roc_from_scores(std::span<const double> scores_h0, std::span<const double> scores_h1) {
    if (scores_h0.empty() || scores_h1.empty()) throw std::invalid_argument("ROC needs scores under both hypotheses");
    std::vector<double> h0(scores_h0.begin(), scores_h0.end());
    std::vector<double> h1(scores_h1.begin(), scores_h1.end());
    for (double s : h0) {
        if (std::isnan(s)) throw std::invalid_argument("NaN score under H0");
    }
    for (double s : h1) {
        if (std::isnan(s)) throw std::invalid_argument("NaN score under H1");
    }
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());
    std::vector<double> pooled;
    pooled.reserve(h0.size() + h1.size());
    std::merge(h0.begin(), h0.end(), h1.begin(), h1.end(), std::back_inserter(pooled));
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    RocCurve curve;
    curve.trials_h0 = h0.size();
    curve.trials_h1 = h1.size();
    curve.points.reserve(pooled.size() + 1);
    const double n0 = static_cast<double>(h0.size());
    const double n1 = static_cast<double>(h1.size());
    // Both score lists and thresholds ascend, so "count >= tau" is a moving lower bound.
    std::size_t below0 = 0;
    std::size_t below1 = 0;
    for (double tau : pooled) {
        while (below0 < h0.size() && h0[below0] < tau) ++below0;
        while (below1 < h1.size() && h1[below1] < tau) ++below1;
        curve.points.push_back({tau, static_cast<double>(h0.size() - below0) / n0,
                                static_cast<double>(h1.size() - below1) / n1});
    }
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    return curve;
}

RocCurve thin_roc(const RocCurve& curve, std::size_t max_points) {
    if (max_points == 0 || curve.points.size() <= max_points) return curve;
    if (max_points < 3) throw std::invalid_argument("thinned ROC needs at least three points");
    RocCurve out = curve;
    out.points.clear();
    const auto& pts = curve.points;
    double smallest = 1.0;
    for (const auto& p : pts) {
        if (p.pfa > 0.0) smallest = std::min(smallest, p.pfa);
    }
    // Targets log-spaced in Pfa from 1 down to the smallest positive Pfa; for each, keep
    // the first point (lowest threshold) whose Pfa has fallen to the target.
    const std::size_t levels = max_points - 2;
    std::vector<std::size_t> keep{0};
    std::size_t cursor = 0;
    for (std::size_t l = 1; l <= levels; ++l) {
        const double frac = static_cast<double>(l) / static_cast<double>(levels);
        const double target = std::exp(frac * std::log(smallest));
        while (cursor + 1 < pts.size() && pts[cursor].pfa > target) ++cursor;
        if (cursor != keep.back()) keep.push_back(cursor);
    }
    if (keep.back() != pts.size() - 1) keep.push_back(pts.size() - 1);
    for (std::size_t k : keep) out.points.push_back(pts[k]);
    return out;
}

void write_roc_rows(std::ostream& out, const RocCurve& curve) {
    const auto precision = out.precision(12);
    for (const auto& p : curve.points) {
        out << curve.label << ',' << p.threshold << ',' << p.pfa << ',' << p.pd << '\n';
    }
    out.precision(precision);
}

}  // namespace subpix
