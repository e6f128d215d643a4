#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

/// Which transform produced a coefficient vector.
enum class Basis { L, Lstar };

/// Exponential factor carried by grid samples, in units of log h:
/// +1 for the span of u, -1 for the span of v, 0 for plain trigonometric data.
/// Quadrature of a product uses the sum of the factors' twists.
struct GridFunction {
    CVector values;
    int twist = 0;
};

struct CoeffVector {
    CVector values;
    Basis tag = Basis::L;
};

namespace detail {

inline void check_grid(const ModelProblem& model, const GridFunction& f) {
    if (f.values.size() != model.Q())
        throw ShapeError("grid function has " + std::to_string(f.values.size()) + " samples, model has Q = " +
                         std::to_string(model.Q()));
    if (f.twist < -1 || f.twist > 1) throw UsageError("grid function twist must be -1, 0 or 1");
}

inline void check_coeffs(const ModelProblem& model, const CoeffVector& c, Basis want, const char* op) {
    if (c.values.size() != model.size())
        throw ShapeError(std::string(op) + ": coefficient vector has length " + std::to_string(c.values.size()) +
                         ", expected " + std::to_string(model.size()));
    if (c.tag != want) throw UsageError(std::string(op) + ": coefficient tag does not match");
}

// out(xi) = sum_i w_i f_i conj(B(i, xi))
inline CVector project(const ModelProblem& model, const CVector& f, const CMatrix& B, int twist) {
    const auto& w = model.rule().weights(twist);
    CVector wf(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) wf(i) = w[static_cast<std::size_t>(i)] * f(i);
    return B.adjoint() * wf;
}

}  // namespace detail

/// f^(xi) = (f, v_xi).
inline CoeffVector fourier(const ModelProblem& model, const GridFunction& f) {
    detail::check_grid(model, f);
    return {detail::project(model, f.values, model.V(), f.twist - 1), Basis::L};
}

/// f^_*(xi) = (f, u_xi).
inline CoeffVector fourier_star(const ModelProblem& model, const GridFunction& f) {
    detail::check_grid(model, f);
    return {detail::project(model, f.values, model.U(), f.twist + 1), Basis::Lstar};
}

inline GridFunction inverse(const ModelProblem& model, const CoeffVector& c) {
    detail::check_coeffs(model, c, Basis::L, "inverse");
    return {model.U() * c.values, 1};
}

inline GridFunction inverse_star(const ModelProblem& model, const CoeffVector& c) {
    detail::check_coeffs(model, c, Basis::Lstar, "inverse_star");
    return {model.V() * c.values, -1};
}

/// ||f||_{L^2} by quadrature of |f|^2.
inline double l2_norm(const ModelProblem& model, const GridFunction& f) {
    detail::check_grid(model, f);
    const auto& w = model.rule().weights(2 * f.twist);
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) s += w[static_cast<std::size_t>(i)] * std::norm(f.values(i));
    return std::sqrt(std::max(0.0, s));
}

namespace detail {

inline double checked_sqrt(cplx s, const char* what) {
    const double scale = std::max(1.0, std::abs(s.real()));
    if (std::abs(s.imag()) > 1e-10 * scale)
        throw ConsistencyError(std::string(what) + ": sum has imaginary residue " + std::to_string(s.imag()));
    if (s.real() < -1e-10 * scale)
        throw ConsistencyError(std::string(what) + ": sum is negative (" + std::to_string(s.real()) + ")");
    return std::sqrt(std::max(0.0, s.real()));
}

}  // namespace detail

/// (sum c(xi) conj(f^_*(xi)))^{1/2} with f the L-inverse of c.
inline double l2L_norm(const ModelProblem& model, const CoeffVector& c) {
    detail::check_coeffs(model, c, Basis::L, "l2L_norm");
    CoeffVector fs = fourier_star(model, inverse(model, c));
    return detail::checked_sqrt(fs.values.dot(c.values), "l2L_norm");
}

/// Weighted pairing sum <xi>^{2s} f^(xi) conj(f^_*(xi)).
/// On the quasi-periodic model this sum is not real for s != 0 and the
/// assertion raises ConsistencyError; see sobolev_norm_hilbert.
inline double sobolev_norm(const ModelProblem& model, const CoeffVector& c, double s) {
    detail::check_coeffs(model, c, Basis::L, "sobolev_norm");
    CoeffVector fs = fourier_star(model, inverse(model, c));
    cplx acc{0.0, 0.0};
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        const int k = model.index(xi);
        acc += std::pow(model.bracket(xi), 2.0 * s) * c.values(k) * std::conj(fs.values(k));
    }
    return detail::checked_sqrt(acc, "sobolev_norm");
}

/// ||Op(<xi>^s) f||_{L^2}, computed as l2L_norm of <xi>^s c. Real by construction.
inline double sobolev_norm_hilbert(const ModelProblem& model, const CoeffVector& c, double s) {
    detail::check_coeffs(model, c, Basis::L, "sobolev_norm_hilbert");
    CoeffVector w = c;
    for (int xi = model.lo(); xi <= model.hi(); ++xi) w.values(model.index(xi)) *= std::pow(model.bracket(xi), s);
    return l2L_norm(model, w);
}

inline GridFunction l_convolution(const ModelProblem& model, const GridFunction& f, const GridFunction& g) {
    CoeffVector a = fourier(model, f);
    CoeffVector b = fourier(model, g);
    return inverse(model, {a.values.cwiseProduct(b.values), Basis::L});
}

/// G[xi, eta] = (u_eta, u_xi).
inline CMatrix gram_matrix(const ModelProblem& model) {
    const auto& w = model.rule().weights(2);
    CMatrix WU = model.U();
    for (int i = 0; i < model.Q(); ++i) WU.row(i) *= w[static_cast<std::size_t>(i)];
    CMatrix G = model.U().adjoint() * WU;
    return 0.5 * (G + G.adjoint());
}

/// Two-sided bounds sum|f^|^2 / ||f||^2 in [hat_lower, hat_upper] and
/// sum|f^_*|^2 / ||f||^2 in [star_lower, star_upper] over the truncated span.
struct FrameBounds {
    double hat_lower = 0, hat_upper = 0;
    double star_lower = 0, star_upper = 0;
};

inline FrameBounds frame_bounds(const ModelProblem& model) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(gram_matrix(model));
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0)) throw ConsistencyError("Gram matrix is not positive definite");
    return {1.0 / lmax, 1.0 / lmin, lmin, lmax};
}

}  // namespace nonharmonic
