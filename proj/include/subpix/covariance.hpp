#pragma once

#include <Eigen/Dense>

#include "subpix/clutter.hpp"

namespace subpix {

/// Default ridge added to empirical window covariances, relative to the lag-zero variance.
inline constexpr double kDefaultRegularization = 1e-6;

/// Noise covariance of a (2w+1) x (2w+1) detection window, flattened row-major.
///
/// The white form is R = sigma^2 I and its services are exact (no factorization).
/// The empirical form is assembled from a stationary autocovariance table, so R is
/// block-Toeplitz with Toeplitz blocks, and is held with its Cholesky factor.
class CovarianceModel {
public:
    enum class Form { white, empirical };

    static CovarianceModel white(int half_width, double variance);
    /// Throws NumericalError if R is not positive definite after regularization.
    static CovarianceModel from_autocovariance(const AutocovarianceTable& acf, int half_width,
                                               double regularization = kDefaultRegularization);

    Form form() const { return form_; }
    bool is_white() const { return form_ == Form::white; }
    int half_width() const { return half_width_; }
    int dimension() const { return static_cast<int>(matrix_.rows()); }
    /// sigma^2 for the white form, R(0,0) otherwise.
    double variance() const { return matrix_(0, 0); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }

    /// R^-1 y.
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& y) const;
    /// x^t R^-1 y.
    double quad(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    /// L^-1 x with R = L L^t; whitened noise has identity covariance.
    Eigen::VectorXd whiten(const Eigen::VectorXd& x) const;

private:
    CovarianceModel(Form form, int half_width, Eigen::MatrixXd matrix);

    Form form_;
    int half_width_;
    Eigen::MatrixXd matrix_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
};

inline CovarianceModel assemble_window_covariance(const AutocovarianceTable& acf, int half_width,
                                                  double regularization = kDefaultRegularization) {
    return CovarianceModel::from_autocovariance(acf, half_width, regularization);
}

}  // namespace subpix
