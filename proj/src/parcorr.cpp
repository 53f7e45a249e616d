#include "charl/parcorr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace charl {

namespace {

// Residual sums of squares below this fraction of the total are treated as zero.
constexpr double kDegenerateRatio = 1e-12;

ParCorrResult finish(double sxy, double sxx, double syy, double sxx_total, double syy_total, long dof,
                     bool pseudo) {
    ParCorrResult res;
    res.dof = dof;
    res.pseudo_inverse = pseudo;
    if (sxx <= kDegenerateRatio * sxx_total || syy <= kDegenerateRatio * syy_total || sxx <= 0.0 ||
        syy <= 0.0) {
        res.degenerate = true;
        return res;
    }
    res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    res.p_value = parcorr_p_value(res.r, dof);
    return res;
}

}  // namespace

double parcorr_p_value(double r, long dof) {
    if (dof < 1) return 1.0;
    const double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    const double t = std::abs(r) * std::sqrt(static_cast<double>(dof) / (1.0 - r2));
    const boost::math::students_t dist(static_cast<double>(dof));
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

ParCorrResult parcorr(std::span<const double> x, std::span<const double> y,
                      const std::vector<std::span<const double>>& conditioners) {
    const std::size_t n = x.size();
    const std::size_t k = conditioners.size();
    if (y.size() != n) throw std::invalid_argument("parcorr: x and y differ in length");
    for (const auto& z : conditioners)
        if (z.size() != n) throw std::invalid_argument("parcorr: conditioner length differs from x");
    if (n <= k + 3) throw std::invalid_argument("parcorr: need more samples than |Z| + 3");

    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    const double sxx_total = (xv.array() - xv.mean()).square().sum();
    const double syy_total = (yv.array() - yv.mean()).square().sum();

    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k + 1));
    design.col(0).setOnes();
    for (std::size_t c = 0; c < k; ++c)
        design.col(static_cast<Eigen::Index>(c + 1)) =
            Eigen::Map<const Eigen::VectorXd>(conditioners[c].data(), static_cast<Eigen::Index>(n));

    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    const bool pseudo = cod.rank() < design.cols();
    const Eigen::VectorXd rx = xv - design * cod.solve(xv);
    const Eigen::VectorXd ry = yv - design * cod.solve(yv);
    return finish(rx.dot(ry), rx.squaredNorm(), ry.squaredNorm(), sxx_total, syy_total,
                  static_cast<long>(n) - 2 - static_cast<long>(k), pseudo);
}

ParCorrResult parcorr_from_covariance(const Eigen::MatrixXd& cov, std::size_t x, std::size_t y,
                                      std::span<const std::size_t> conditioners, std::size_t n) {
    const auto k = static_cast<Eigen::Index>(conditioners.size());
    if (n <= conditioners.size() + 3) throw std::invalid_argument("parcorr: need more samples than |Z| + 3");
    const auto xi = static_cast<Eigen::Index>(x);
    const auto yi = static_cast<Eigen::Index>(y);
    const long dof = static_cast<long>(n) - 2 - static_cast<long>(k);
    if (k == 0) return finish(cov(xi, yi), cov(xi, xi), cov(yi, yi), cov(xi, xi), cov(yi, yi), dof, false);

    Eigen::MatrixXd szz(k, k);
    Eigen::MatrixXd szb(k, 2);
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto ca = static_cast<Eigen::Index>(conditioners[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < k; ++b)
            szz(a, b) = cov(ca, static_cast<Eigen::Index>(conditioners[static_cast<std::size_t>(b)]));
        szb(a, 0) = cov(ca, xi);
        szb(a, 1) = cov(ca, yi);
    }
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(szz);
    const Eigen::MatrixXd coef = cod.solve(szb);
    const Eigen::Matrix2d explained = szb.transpose() * coef;
    return finish(cov(xi, yi) - explained(0, 1), cov(xi, xi) - explained(0, 0), cov(yi, yi) - explained(1, 1),
                  cov(xi, xi), cov(yi, yi), dof, cod.rank() < k);
}

}  // namespace charl
