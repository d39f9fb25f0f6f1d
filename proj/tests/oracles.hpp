#pragma once

// Independent reference implementations shared by the unit tests and the acceptance run.
// Nothing here reuses the library's caches, quadrature or log-sum-exp paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "subpix/optics.hpp"
#include "subpix/roc.hpp"

namespace subpix::oracle {

/// Pixel (i, j) of the spot at `offset`, integrated with an n x n midpoint rule.
inline double midpoint_pixel(const PsfModel& model, SubpixelOffset offset, int i, int j, int n) {
    const double h = 1.0 / n;
    long double total = 0.0L;
    for (int a = 0; a < n; ++a) {
        const double u = i - 0.5 + (a + 0.5) * h - offset.e1;
        for (int b = 0; b < n; ++b) total += model.value(u, j - 0.5 + (b + 0.5) * h - offset.e2);
    }
    return static_cast<double>(total * h * h);
}

/// All five detectors by brute force: signatures rendered one at a time, R^-1 from a
/// dense LU, marginal sums in long double without log-sum-exp, subspace from the
/// eigenvectors of sum_k s_k s_k^t.
class Detectors {
public:
    Detectors(const PsfModel& model, int half_width, int grid_size, const Eigen::MatrixXd& covariance)
        : length_(static_cast<int>(covariance.rows())), inverse_(covariance.fullPivLu().inverse()) {
        for (double a : grid_cell_centers(grid_size)) {
            for (double b : grid_cell_centers(grid_size)) {
                grid_.push_back(render(model, {a, b}, half_width, OffsetDomain::half_open));
            }
        }
        center_ = render(model, {0.0, 0.0}, half_width, OffsetDomain::half_open);
        for (double a : {-0.5, 0.0, 0.5}) {
            for (double b : {-0.5, 0.0, 0.5}) half_.push_back(render(model, {a, b}, half_width, OffsetDomain::closed));
        }
    }

    long double correlation(const Eigen::VectorXd& s, const Eigen::VectorXd& z) const {
        long double total = 0.0L;
        for (int a = 0; a < length_; ++a) {
            for (int b = 0; b < length_; ++b) total += static_cast<long double>(s[a]) * inverse_(a, b) * z[b];
        }
        return total;
    }

    double gpmf(const Eigen::VectorXd& z) const { return ratio(center_, z); }

    double glrt(const Eigen::VectorXd& z) const {
        double best = ratio(center_, z);
        for (const auto& s : grid_) best = std::max(best, ratio(s, z));
        return best;
    }

    double elrt(const Eigen::VectorXd& z) const {
        long double total = 0.0L;
        for (const auto& s : grid_) total += term(s, z);
        return static_cast<double>(std::log(total / static_cast<long double>(grid_.size())));
    }

    double alrt(const Eigen::VectorXd& z) const {
        const double axis[3] = {0.25, 0.5, 0.25};
        long double total = 0.0L;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) total += axis[a] * axis[b] * term(half_[static_cast<std::size_t>(a * 3 + b)], z);
        }
        return static_cast<double>(std::log(total));
    }

    /// The statistic is invariant to the basis chosen within the subspace.
    double sm_glrt(const Eigen::VectorXd& z, int order) const {
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(length_, length_);
        for (const auto& s : grid_) scatter += s * s.transpose();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
        const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(order);
        const Eigen::MatrixXd gram = basis.transpose() * inverse_ * basis;
        const Eigen::VectorXd projected = basis.transpose() * inverse_ * z;
        return projected.dot(gram.fullPivLu().inverse() * projected);
    }

    const Eigen::VectorXd& grid_signature(std::size_t k) const { return grid_[k]; }

private:
    static Eigen::VectorXd render(const PsfModel& model, SubpixelOffset offset, int half_width, OffsetDomain domain) {
        const Signature sig = render_signature(model, offset, half_width, kDefaultQuadOrder, domain);
        return Eigen::Map<const Eigen::VectorXd>(sig.values.data(), static_cast<Eigen::Index>(sig.values.size()));
    }

    double ratio(const Eigen::VectorXd& s, const Eigen::VectorXd& z) const {
        const long double t = correlation(s, z);
        return static_cast<double>(t * t / correlation(s, s));
    }

    long double term(const Eigen::VectorXd& s, const Eigen::VectorXd& z) const {
        const long double t = correlation(s, z);
        const long double e = correlation(s, s);
        return std::exp(t * t / (2.0L * e)) / std::sqrt(e);
    }

    int length_;
    Eigen::MatrixXd inverse_;
    std::vector<Eigen::VectorXd> grid_;
    Eigen::VectorXd center_;
    std::vector<Eigen::VectorXd> half_;
};

/// Quadratic-time ROC: one threshold per distinct pooled score, counted directly.
inline std::vector<RocPoint> counting_roc(const std::vector<double>& h0, const std::vector<double>& h1) {
    std::set<double> thresholds(h0.begin(), h0.end());
    thresholds.insert(h1.begin(), h1.end());
    std::vector<RocPoint> out;
    for (double tau : thresholds) {
        std::size_t a = 0, b = 0;
        for (double s : h0) a += s >= tau ? 1 : 0;
        for (double s : h1) b += s >= tau ? 1 : 0;
        out.push_back({tau, static_cast<double>(a) / static_cast<double>(h0.size()),
                       static_cast<double>(b) / static_cast<double>(h1.size())});
    }
    out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    return out;
}

/// min over Pfa in [lo, hi] of Pd_a(Pfa) - Pd_b(Pfa). Both are step functions that only
/// change at their own Pfa values, so checking lo and every breakpoint inside is exact.
inline double min_pd_gap(const RocCurve& a, const RocCurve& b, double lo, double hi) {
    std::vector<double> at{lo};
    for (const RocCurve* c : {&a, &b}) {
        for (const RocPoint& p : c->points) {
            if (p.pfa >= lo && p.pfa <= hi) at.push_back(p.pfa);
        }
    }
    double gap = std::numeric_limits<double>::infinity();
    for (double p : at) gap = std::min(gap, a.pd_at_pfa(p) - b.pd_at_pfa(p));
    return gap;
}

/// max over Pfa in [lo, hi] of |Pd_a - Pd_b|, evaluated the same way.
inline double max_abs_pd_gap(const RocCurve& a, const RocCurve& b, double lo, double hi) {
    std::vector<double> at{lo};
    for (const RocCurve* c : {&a, &b}) {
        for (const RocPoint& p : c->points) {
            if (p.pfa >= lo && p.pfa <= hi) at.push_back(p.pfa);
        }
    }
    double gap = 0.0;
    for (double p : at) gap = std::max(gap, std::abs(a.pd_at_pfa(p) - b.pd_at_pfa(p)));
    return gap;
}

}  // namespace subpix::oracle
