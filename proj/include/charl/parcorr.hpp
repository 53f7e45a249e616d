#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace charl {

struct ParCorrResult {
    double r = 0.0;
    double p_value = 1.0;
    /// Residual of x or y had (numerically) zero variance; r = 0 and p = 1 are reported.
    bool degenerate = false;
    /// The conditioning regression was rank deficient and solved by pseudo-inverse.
    bool pseudo_inverse = false;
    /// Degrees of freedom n - 2 - |Z| of the t statistic.
    long dof = 0;
};

/// Two-sided p-value of a partial correlation r with `dof` degrees of freedom.
double parcorr_p_value(double r, long dof);

/// Partial correlation of x and y given the conditioning series: Pearson correlation of
/// the least-squares residuals (with intercept). Requires equal lengths n > |Z| + 3.
ParCorrResult parcorr(std::span<const double> x, std::span<const double> y,
                      const std::vector<std::span<const double>>& conditioners);

/// Same statistic computed from a covariance (or centred Gram) matrix over all series.
/// `n` is the sample count behind the matrix.
ParCorrResult parcorr_from_covariance(const Eigen::MatrixXd& cov, std::size_t x, std::size_t y,
                                      std::span<const std::size_t> conditioners, std::size_t n);

}  // namespace charl
