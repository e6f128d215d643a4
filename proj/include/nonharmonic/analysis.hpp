#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/quantize.hpp"
#include "nonharmonic/symbols.hpp"
#include "nonharmonic/transform.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

inline constexpr const char* kGeneratorName = "mt19937_64+normal_distribution";

/// Complex standard normal vector: (X + iY)/sqrt(2), X, Y ~ N(0, 1).
inline CVector random_coefficients(std::mt19937_64& gen, int n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    CVector c(n);
    for (int k = 0; k < n; ++k) {
        double re = nd(gen);
        double im = nd(gen);
        c(k) = cplx(re, im) / std::sqrt(2.0);
    }
    return c;
}

// ---------------------------------------------------------------- Garding

struct GardingTrial {
    double re_form = 0;   // Re(Au, u)
    double h_norm2 = 0;   // ||u||^2_{H^{m/2}}
    double l2_norm2 = 0;  // ||u||^2_{L^2}
};

struct GardingReport {
    double C0 = 0, C1 = 0, C2 = 0;
    std::vector<GardingTrial> trials;
    std::vector<std::pair<double, double>> sweep;  // (C1, C2(C1))
    int violations = 0;
    bool pass = false;
    std::string generator = kGeneratorName;
    std::uint64_t seed = 0;
};

/// Re(Au, u) >= C1 ||u||^2_{H^{m/2}} - C2 ||u||^2_{L^2} fitted over random u.
/// C1 is swept over (0, 1/C0] and C2(C1) is the largest normalized deficit.
inline GardingReport garding_estimate(const ModelProblem& model, const Symbol& a, double m, int trials,
                                      std::uint64_t seed, int sweep_points = 1000) {
    if (trials < 1 || sweep_points < 1) throw UsageError("garding_estimate needs trials >= 1");
    GardingReport rep;
    rep.seed = seed;
    const Symbol aw = a.window(model.lo(), model.hi());
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        const double br = std::pow(model.bracket(xi), m);
        for (int i = 0; i < model.Q(); ++i) {
            const double A = aw.at(i, xi).real();
            if (!(A > 0))
                throw EllipticityError("Re a is not positive at xi = " + std::to_string(xi) + ", grid point " +
                                       std::to_string(i));
            rep.C0 = std::max(rep.C0, br / A);
        }
    }

    const CMatrix G = gram_matrix(model);
    const CMatrix M = galerkin_matrix(model, aw).M;
    RVector wgt(model.size());
    for (int xi = model.lo(); xi <= model.hi(); ++xi) wgt(model.index(xi)) = std::pow(model.bracket(xi), m / 2.0);

    std::mt19937_64 gen(seed);
    for (int t = 0; t < trials; ++t) {
        CVector c = random_coefficients(gen, model.size());
        CVector wc = wgt.cast<cplx>().cwiseProduct(c);
        GardingTrial tr;
        tr.re_form = c.dot(G * (M * c)).real();
        tr.h_norm2 = wc.dot(G * wc).real();
        tr.l2_norm2 = c.dot(G * c).real();
        rep.trials.push_back(tr);
    }

    const double c1max = 1.0 / rep.C0;
    for (int k = 1; k <= sweep_points; ++k) {
        const double c1 = c1max * k / sweep_points;
        double c2 = 0.0;
        for (const auto& tr : rep.trials) c2 = std::max(c2, (c1 * tr.h_norm2 - tr.re_form) / tr.l2_norm2);
        rep.sweep.emplace_back(c1, c2);
    }
    rep.C1 = rep.sweep.back().first;
    rep.C2 = rep.sweep.back().second;
    for (const auto& tr : rep.trials) {
        const double rhs = rep.C1 * tr.h_norm2 - rep.C2 * tr.l2_norm2;
        if (tr.re_form < rhs - 1e-10 * std::max(1.0, std::abs(tr.re_form))) ++rep.violations;
    }
    rep.pass = rep.violations == 0;
    return rep;
}

// ---------------------------------------------------------------- interpolation

namespace detail {

inline void check_interpolation_domain(double s, double t, double eps) {
    const bool ok = (s >= t && t >= 0) || (s < 0 && t < 0);
    if (!ok) throw UsageError("interpolation needs s >= t >= 0 or s, t < 0");
    if (!(eps > 0)) throw UsageError("interpolation needs eps > 0");
}

}  // namespace detail

/// C_eps = max over the window of <xi>^{2t} - eps <xi>^{2s}, floored at 0.
inline double interpolation_constant(const ModelProblem& model, double s, double t, double eps) {
    detail::check_interpolation_domain(s, t, eps);
    double c = 0.0;
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        const double b = model.bracket(xi);
        c = std::max(c, std::pow(b, 2 * t) - eps * std::pow(b, 2 * s));
    }
    return c;
}

struct InterpolationReport {
    double C_eps = 0;
    int trials = 0;
    int violations = 0;
    double worst_margin = 0;  // min over trials of rhs - lhs, normalized by rhs
};

/// ||u||_t^2 <= eps ||u||_s^2 + C_eps ||u||_0^2 on random coefficient vectors,
/// with ||u||_r^2 = sum <xi>^{2r} |c(xi)|^2.
inline InterpolationReport validate_interpolation(const ModelProblem& model, double s, double t, double eps,
                                                  int trials = 100, std::uint64_t seed = 0) {
    InterpolationReport rep;
    rep.C_eps = interpolation_constant(model, s, t, eps);
    rep.trials = trials;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    std::mt19937_64 gen(seed);
    for (int k = 0; k < trials; ++k) {
        CVector c = random_coefficients(gen, model.size());
        double nt = 0, ns = 0, n0 = 0;
        for (int xi = model.lo(); xi <= model.hi(); ++xi) {
            const double b = model.bracket(xi), p = std::norm(c(model.index(xi)));
            nt += std::pow(b, 2 * t) * p;
            ns += std::pow(b, 2 * s) * p;
            n0 += p;
        }
        const double rhs = eps * ns + rep.C_eps * n0;
        const double margin = (rhs - nt) / std::max(rhs, 1e-300);
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (nt > rhs * (1 + 1e-12)) ++rep.violations;
    }
    return rep;
}

// ---------------------------------------------------------------- norms

/// ||K_a||_{L^2 x L^2} by the twisted product rule on the kernel table.
inline double hilbert_schmidt_norm(const ModelProblem& model, const Symbol& a) {
    KernelTable k = kernel(model, a);
    const auto& wx = model.rule().weights(2);
    const auto& wy = model.rule().weights(-2);
    double s = 0.0;
    for (int i = 0; i < model.Q(); ++i)
        for (int j = 0; j < model.Q(); ++j)
            s += wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)] * std::norm(k.K(i, j));
    return std::sqrt(s);
}

/// Operator norm of the Galerkin section in the l^2_L geometry, one value per
/// truncation. Each truncation uses Q = max(base.Q, 8N) points.
inline std::vector<double> l2_operator_norm(const ModelSpec& base, const SymbolFunction& a,
                                            const std::vector<int>& truncations) {
    if (!std::is_sorted(truncations.begin(), truncations.end())) throw UsageError("truncations must be ascending");
    std::vector<double> out;
    for (int n : truncations) {
        ModelSpec sp = base;
        sp.N = n;
        sp.Q = std::max(base.Q, 8 * n);
        ModelProblem model(sp);
        CMatrix M = galerkin_matrix(model, sample(model, a, 0)).M;
        Eigen::LLT<CMatrix> llt(gram_matrix(model));
        if (llt.info() != Eigen::Success) throw ConsistencyError("Gram matrix is not positive definite");
        CMatrix R = llt.matrixU();
        CMatrix RM = R * M;
        CMatrix B = R.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(RM);
        Eigen::JacobiSVD<CMatrix> svd(B);
        out.push_back(svd.singularValues()(0));
    }
    return out;
}

}  // namespace nonharmonic
