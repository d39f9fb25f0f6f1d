#include "subpix/covariance.hpp"
#include "subpix/errors.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>

namespace subpix {
namespace {

Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v[k] = normal(rng);
    return v;
}

TEST(WhiteCovariance, ExactServices) {
    const CovarianceModel cov = CovarianceModel::white(2, 4.0);
    EXPECT_TRUE(cov.is_white());
    EXPECT_EQ(cov.dimension(), 25);
    EXPECT_EQ(cov.variance(), 4.0);
    const Eigen::VectorXd y = random_vector(25, 1);
    const Eigen::VectorXd x = random_vector(25, 2);
    EXPECT_EQ((cov.solve(y) - y / 4.0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(cov.quad(x, y), x.dot(y) / 4.0, 1e-13);
    EXPECT_NEAR((cov.whiten(y) - y / 2.0).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_THROW(CovarianceModel::white(2, 0.0), std::invalid_argument);
}

TEST(EmpiricalCovariance, BlockToeplitzLayout) {
    const AutocovarianceTable acf = estimate_autocovariance(synthesize_fbm(0.7, 64, 3), 4);
    const double lambda = 1e-3;
    const CovarianceModel cov = CovarianceModel::from_autocovariance(acf, 2, lambda);
    ASSERT_EQ(cov.dimension(), 25);
    EXPECT_FALSE(cov.is_white());
    const Eigen::MatrixXd& r = cov.matrix();
    for (int a = 0; a < 25; ++a) {
        for (int b = 0; b < 25; ++b) {
            const int di = a / 5 - b / 5;
            const int dj = a % 5 - b % 5;
            const double expected = acf.at(di, dj) + (a == b ? lambda * acf.variance() : 0.0);
            EXPECT_NEAR(r(a, b), expected, 1e-15);
        }
    }
    EXPECT_EQ((r - r.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EmpiricalCovariance, SolveAndQuadMatchDenseInverse) {
    const AutocovarianceTable acf = estimate_autocovariance(synthesize_fbm(0.7, 128, 4), 5);
    const CovarianceModel cov = CovarianceModel::from_autocovariance(acf, 2);
    const Eigen::MatrixXd inverse = cov.matrix().fullPivLu().inverse();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::VectorXd x = random_vector(25, 10 + seed);
        const Eigen::VectorXd y = random_vector(25, 20 + seed);
        const Eigen::VectorXd oracle = inverse * y;
        EXPECT_LE((cov.solve(y) - oracle).cwiseAbs().maxCoeff(), 1e-10 * oracle.cwiseAbs().maxCoeff());
        const double q = x.dot(inverse * y);
        EXPECT_NEAR(cov.quad(x, y), q, 1e-10 * std::max(1.0, std::abs(q)));
    }
    const Eigen::MatrixXd block = Eigen::MatrixXd::Identity(25, 25);
    EXPECT_LE((cov.solve(block) - inverse).cwiseAbs().maxCoeff(), 1e-10 * inverse.cwiseAbs().maxCoeff());
}

TEST(EmpiricalCovariance, WhiteningGivesIdentity) {
    const AutocovarianceTable acf = estimate_autocovariance(synthesize_fbm(0.5, 64, 5), 3);
    const CovarianceModel cov = CovarianceModel::from_autocovariance(acf, 1);
    Eigen::MatrixXd whitened(9, 9);
    for (int k = 0; k < 9; ++k) whitened.col(k) = cov.whiten(cov.matrix().col(k));
    // L^-1 R = L^t, so L^-1 R L^-t = I; check via whiten applied to rows.
    Eigen::MatrixXd both(9, 9);
    for (int k = 0; k < 9; ++k) both.col(k) = cov.whiten(whitened.row(k).transpose());
    EXPECT_LE((both - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EmpiricalCovariance, WhiteAcfReducesToWhiteForm) {
    const CovarianceModel cov = CovarianceModel::from_autocovariance(white_autocovariance(2.0, 4), 2, 0.0);
    EXPECT_LE((cov.matrix() - 2.0 * Eigen::MatrixXd::Identity(25, 25)).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::VectorXd y = random_vector(25, 3);
    EXPECT_LE((cov.solve(y) - y / 2.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EmpiricalCovariance, IndefiniteTableThrowsNumericalError) {
    AutocovarianceTable acf = white_autocovariance(1.0, 2);
    acf.values[static_cast<std::size_t>(2 * 5 + 1)] = 2.0;  // r(0, -1)
    acf.values[static_cast<std::size_t>(2 * 5 + 3)] = 2.0;  // r(0, +1)
    try {
        CovarianceModel::from_autocovariance(acf, 1, 0.0);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos) << e.what();
    }
}

TEST(EmpiricalCovariance, RejectsWindowWiderThanTable) {
    const AutocovarianceTable acf = white_autocovariance(1.0, 2);
    EXPECT_THROW(CovarianceModel::from_autocovariance(acf, 2), std::invalid_argument);
    EXPECT_NO_THROW(CovarianceModel::from_autocovariance(acf, 1));
}

}  // namespace
}  // namespace subpix
