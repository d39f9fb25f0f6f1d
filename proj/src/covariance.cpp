#include "subpix/covariance.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "subpix/errors.hpp"

namespace subpix {

CovarianceModel::CovarianceModel(Form form, int half_width, Eigen::MatrixXd matrix)
    : form_(form), half_width_(half_width), matrix_(std::move(matrix)) {}

CovarianceModel CovarianceModel::white(int half_width, double variance) {
    if (half_width < 1) throw std::invalid_argument("window half-width must be >= 1");
    if (!(variance > 0.0) || !std::isfinite(variance)) throw std::invalid_argument("white noise variance must be > 0");
    const int side = 2 * half_width + 1;
    return CovarianceModel(Form::white, half_width,
                           variance * Eigen::MatrixXd::Identity(side * side, side * side));
}

CovarianceModel CovarianceModel::from_autocovariance(const AutocovarianceTable& acf, int half_width,
                                                     double regularization) {
    if (half_width < 1) throw std::invalid_argument("window half-width must be >= 1");
    if (acf.max_lag < 2 * half_width) {
        throw std::invalid_argument("autocovariance table must cover lags up to 2w");
    }
    if (regularization < 0.0) throw std::invalid_argument("regularization must be >= 0");
    const int side = 2 * half_width + 1;
    const int n = side * side;
    Eigen::MatrixXd r(n, n);
    for (int a = 0; a < n; ++a) {
        const int i = a / side;
        const int j = a % side;
        for (int b = 0; b < n; ++b) {
            const int k = b / side;
            const int l = b % side;
            r(a, b) = acf.at(i - k, j - l);
        }
    }
    r.diagonal().array() += regularization * acf.variance();

    CovarianceModel model(Form::empirical, half_width, std::move(r));
    model.factor_.compute(model.matrix_);
    if (model.factor_.info() != Eigen::Success) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.matrix_, Eigen::EigenvaluesOnly);
        std::ostringstream msg;
        msg << "window covariance is not positive definite after regularization (smallest eigenvalue "
            << eig.eigenvalues().minCoeff() << ")";
        throw NumericalError(msg.str());
    }
    return model;
}

Eigen::VectorXd CovarianceModel::solve(const Eigen::VectorXd& y) const {
    if (y.size() != matrix_.rows()) throw std::invalid_argument("vector length does not match covariance");
    if (is_white()) return y / matrix_(0, 0);
    return factor_.solve(y);
}

Eigen::MatrixXd CovarianceModel::solve(const Eigen::MatrixXd& y) const {
    if (y.rows() != matrix_.rows()) throw std::invalid_argument("matrix rows do not match covariance");
    if (is_white()) return y / matrix_(0, 0);
    return factor_.solve(y);
}

double CovarianceModel::quad(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (x.size() != matrix_.rows()) throw std::invalid_argument("vector length does not match covariance");
    if (is_white()) return x.dot(y) / matrix_(0, 0);
    // Symmetric form (L^-1 x) . (L^-1 y) keeps quad(x, y) == quad(y, x) bit for bit.
    return whiten(x).dot(whiten(y));
}

Eigen::VectorXd CovarianceModel::whiten(const Eigen::VectorXd& x) const {
    if (x.size() != matrix_.rows()) throw std::invalid_argument("vector length does not match covariance");
    if (is_white()) return x / std::sqrt(matrix_(0, 0));
    return factor_.matrixL().solve(x);
}

}  // namespace subpix
