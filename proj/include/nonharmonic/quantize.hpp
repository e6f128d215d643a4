#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/parallel.hpp"
#include "nonharmonic/symbols.hpp"
#include "nonharmonic/transform.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

/// M[eta, xi] = (Op(a) u_xi, v_eta) over the model window.
struct GalerkinMatrix {
    CMatrix M;
    std::string provenance;
};

struct KernelTable {
    CMatrix K;  // K(x_i, y_j)
};

namespace detail {

inline void require_model_window(const ModelProblem& model, const Symbol& a) {
    if (a.points() != model.Q()) throw ShapeError("symbol grid does not match model");
    if (!a.covers(model.lo(), model.hi()))
        throw WindowError("symbol '" + a.name() + "' does not cover the model window");
}

}  // namespace detail

/// Op(a) f = sum_xi u_xi a(., xi) f^(xi).
inline GridFunction op_apply(const ModelProblem& model, const Symbol& a, const GridFunction& f) {
    detail::require_model_window(model, a);
    CoeffVector c = fourier(model, f);
    CVector out = CVector::Zero(model.Q());
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        const cplx cx = c.values(model.index(xi));
        out += (model.U().col(model.index(xi)).cwiseProduct(a.column(xi))) * cx;
    }
    return {std::move(out), 1};
}

/// sigma(x_i, xi) = u_xi(x_i)^{-1} (A u_xi)(x_i) for xi in [lo, hi].
inline Symbol extract_symbol(const ModelProblem& model, const std::function<CVector(int)>& apply_to_mode, int lo,
                             int hi, const std::string& name = "extracted") {
    if (hi < lo) throw UsageError("empty extraction window");
    CMatrix t(model.Q(), hi - lo + 1);
    for (int xi = lo; xi <= hi; ++xi) {
        CVector au = apply_to_mode(xi);
        if (au.size() != model.Q()) throw ShapeError("operator action returned wrong length");
        for (int i = 0; i < model.Q(); ++i) {
            cplx ui = model.u(xi, i);
            if (std::abs(ui) < 1e-12) throw WzError("u_" + std::to_string(xi) + " vanishes at grid point " + std::to_string(i));
            t(i, xi - lo) = au(i) / ui;
        }
    }
    return {name, lo, hi, std::move(t)};
}

/// Extraction through op_apply: exact on the model window.
inline Symbol extract_symbol(const ModelProblem& model, const Symbol& a) {
    return extract_symbol(
        model,
        [&](int xi) {
            GridFunction uxi{model.U().col(model.index(xi)), 1};
            return op_apply(model, a, uxi).values;
        },
        model.lo(), model.hi(), "sigma(Op(" + a.name() + "))");
}

/// Extraction from a Galerkin matrix: A u_xi = sum_eta M[eta, xi] u_eta.
/// Modes pushed outside the window by A are lost, so only the interior is reliable.
inline Symbol extract_symbol(const ModelProblem& model, const GalerkinMatrix& g) {
    if (g.M.rows() != model.size() || g.M.cols() != model.size()) throw ShapeError("Galerkin matrix size mismatch");
    CMatrix AU = model.U() * g.M;
    return extract_symbol(
        model, [&](int xi) { return CVector(AU.col(model.index(xi))); }, model.lo(), model.hi(),
        "sigma(" + g.provenance + ")");
}

/// K(x, y) = sum_xi u_xi(x) sigma(x, xi) conj(v_xi(y)).
inline KernelTable kernel(const ModelProblem& model, const Symbol& a) {
    detail::require_model_window(model, a);
    CMatrix S = model.U().cwiseProduct(a.window(model.lo(), model.hi()).table());
    return {S * model.V().adjoint()};
}

/// int K(x, y) f(y) dy by the twisted rule in y.
inline GridFunction kernel_apply(const ModelProblem& model, const KernelTable& k, const GridFunction& f) {
    detail::check_grid(model, f);
    const auto& w = model.rule().weights(f.twist - 1);
    CVector wf(model.Q());
    for (int j = 0; j < model.Q(); ++j) wf(j) = w[static_cast<std::size_t>(j)] * f.values(j);
    return {k.K * wf, 1};
}

inline GalerkinMatrix galerkin_matrix(const ModelProblem& model, const Symbol& a) {
    detail::require_model_window(model, a);
    const int n = model.size();
    const auto& w = model.rule().weights(0);
    CMatrix WV = model.V();
    for (int i = 0; i < model.Q(); ++i) WV.row(i) *= w[static_cast<std::size_t>(i)];
    CMatrix M(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t c) {
        const int xi = model.lo() + static_cast<int>(c);
        const auto ac = a.column(xi);
        if ((ac.array() == ac(0)).all()) {
            // x-independent column: (a u_xi, v_eta) = a(xi) delta by biorthogonality.
            M.col(static_cast<Eigen::Index>(c)).setZero();
            M(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = ac(0);
            return;
        }
        CVector col = model.U().col(static_cast<Eigen::Index>(c)).cwiseProduct(ac);
        M.col(static_cast<Eigen::Index>(c)) = WV.adjoint() * col;
    });
    return {std::move(M), "Op(" + a.name() + ")"};
}

inline GalerkinMatrix operator*(const GalerkinMatrix& a, const GalerkinMatrix& b) {
    return {a.M * b.M, a.provenance + "*" + b.provenance};
}

/// sum_{alpha < terms} (1/alpha!) Delta^alpha a * D^(alpha) b.
inline Symbol compose_symbols(const ModelProblem& model, const Symbol& a, const Symbol& b, int terms,
                              const AdmissibleFamily& q = AdmissibleFamily()) {
    if (terms < 1) throw UsageError("compose_symbols needs terms >= 1");
    Symbol acc;
    double fact = 1.0;
    for (int alpha = 0; alpha < terms; ++alpha) {
        if (alpha > 0) fact *= alpha;
        Symbol term = (1.0 / fact) * (apply_Delta(model, a, alpha, q) * apply_D(model, b, alpha, q));
        acc = alpha == 0 ? term : acc + term;
    }
    return acc.with_name("compose(" + a.name() + "," + b.name() + ";" + std::to_string(terms) + ")")
        .with_order(a.order() + b.order());
}

/// Symbol of Op(a) Op(b) from the product of Galerkin matrices.
inline Symbol compose_exact(const ModelProblem& model, const Symbol& a, const Symbol& b) {
    return extract_symbol(model, galerkin_matrix(model, a) * galerkin_matrix(model, b));
}

/// Exact adjoint symbol: N = M^H acts on the v-basis, tau = v_xi^{-1} sum_zeta N[zeta, xi] v_zeta.
inline Symbol adjoint_exact(const ModelProblem& model, const Symbol& a) {
    GalerkinMatrix g = galerkin_matrix(model, a);
    CMatrix VN = model.V() * g.M.adjoint();
    CMatrix t(model.Q(), model.size());
    for (int c = 0; c < model.size(); ++c) {
        const int xi = model.lo() + c;
        for (int i = 0; i < model.Q(); ++i) {
            cplx vi = model.v(xi, i);
            if (std::abs(vi) < 1e-12) throw WzError("v_" + std::to_string(xi) + " vanishes at a grid point");
            t(i, c) = VN(i, c) / vi;
        }
    }
    return {"adjoint(" + a.name() + ")", model.lo(), model.hi(), std::move(t), a.order(), a.rho(), a.delta()};
}

/// sup over |xi| <= N/2 and the grid of |a - b| <xi>^weight.
inline double inner_deviation(const ModelProblem& model, const Symbol& a, const Symbol& b, double weight) {
    const int half = model.N() / 2;
    double sup = 0.0;
    for (int xi = -half; xi <= half; ++xi)
        sup = std::max(sup, (a.column(xi) - b.column(xi)).cwiseAbs().maxCoeff() * std::pow(model.bracket(xi), weight));
    return sup;
}

/// Truncated adjoint expansion sum_{alpha < terms} (1/alpha!) Dt^alpha D^(alpha) conj(a).
/// Dt (adjoint differences) and D both use the family qt.
inline Symbol adjoint_symbol(const ModelProblem& model, const Symbol& a, int terms,
                             const AdmissibleFamily& qt = AdmissibleFamily::exponential(-1)) {
    if (terms < 1) throw UsageError("adjoint_symbol needs terms >= 1");
    const AdmissibleFamily& q = qt;
    const Symbol ca = conj(a);
    Symbol acc;
    double fact = 1.0;
    for (int alpha = 0; alpha < terms; ++alpha) {
        if (alpha > 0) fact *= alpha;
        Symbol term = (1.0 / fact) * apply_Delta(model, apply_D(model, ca, alpha, q), alpha, qt, Basis::Lstar);
        acc = alpha == 0 ? term : acc + term;
    }
    return acc.with_name("adjoint_expansion(" + a.name() + ";" + std::to_string(terms) + ")");
}

}  // namespace nonharmonic
