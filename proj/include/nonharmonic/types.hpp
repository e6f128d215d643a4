#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace nonharmonic {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Conditioning of an LU factorization: the smaller of Eigen's rcond estimate
/// and min|u_ii| / max|u_ii|. The estimate alone misses exact zero pivots.
template <class LU>
double lu_condition(const LU& lu) {
    const auto d = lu.matrixLU().diagonal().cwiseAbs();
    const double hi = d.maxCoeff();
    const double ratio = hi > 0 ? d.minCoeff() / hi : 0.0;
    const double rc = lu.rcond();
    return std::isnan(rc) ? 0.0 : std::min(rc, ratio);
}

}  // namespace nonharmonic
