#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/parallel.hpp"
#include "nonharmonic/transform.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

struct SymbolArgs {
    double x;
    int xi;
    cplx lambda;
    double bracket;
};

/// Evaluator a(x, xi) with declared class data. Must be reentrant.
struct SymbolFunction {
    std::string name;
    std::function<cplx(const SymbolArgs&)> eval;
    double order = 0.0;
    double rho = 1.0;
    double delta = 0.0;
};

/// Sample table of a symbol on the grid and an index window [lo, hi].
class Symbol {
public:
    Symbol() = default;
    Symbol(std::string name, int lo, int hi, CMatrix table, double order = 0.0, double rho = 1.0, double delta = 0.0)
        : name_(std::move(name)), lo_(lo), hi_(hi), table_(std::move(table)), order_(order), rho_(rho), delta_(delta) {
        if (hi < lo || table_.cols() != hi - lo + 1) throw ShapeError("symbol table does not match its window");
    }

    const std::string& name() const { return name_; }
    int lo() const { return lo_; }
    int hi() const { return hi_; }
    int width() const { return hi_ - lo_ + 1; }
    Eigen::Index points() const { return table_.rows(); }
    double order() const { return order_; }
    double rho() const { return rho_; }
    double delta() const { return delta_; }
    const CMatrix& table() const { return table_; }
    CMatrix& table() { return table_; }

    bool covers(int a, int b) const { return a >= lo_ && b <= hi_; }

    cplx at(int i, int xi) const {
        if (xi < lo_ || xi > hi_)
            throw WindowError("symbol '" + name_ + "' read at xi = " + std::to_string(xi) + " outside [" +
                              std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
        return table_(i, xi - lo_);
    }
    auto column(int xi) const {
        if (xi < lo_ || xi > hi_) throw WindowError("symbol '" + name_ + "' column outside window");
        return table_.col(xi - lo_);
    }

    /// Restriction to [a, b].
    Symbol window(int a, int b) const {
        if (!covers(a, b)) throw WindowError("symbol '" + name_ + "' does not cover the requested window");
        return {name_, a, b, table_.middleCols(a - lo_, b - a + 1), order_, rho_, delta_};
    }

    Symbol with_name(std::string n) const {
        Symbol s = *this;
        s.name_ = std::move(n);
        return s;
    }
    Symbol with_order(double m) const {
        Symbol s = *this;
        s.order_ = m;
        return s;
    }

private:
    std::string name_;
    int lo_ = 0, hi_ = -1;
    CMatrix table_;
    double order_ = 0.0, rho_ = 1.0, delta_ = 0.0;
};

inline constexpr int kDefaultMargin = 4;

inline Symbol sample(const ModelProblem& model, const SymbolFunction& fn, int margin = kDefaultMargin) {
    if (margin < 0) throw UsageError("margin must be nonnegative");
    const int lo = model.lo() - margin, hi = model.hi() + margin;
    CMatrix t(model.Q(), hi - lo + 1);
    for (int xi = lo; xi <= hi; ++xi) {
        const cplx lam = model.eigenvalue(xi);
        const double br = model.bracket(xi);
        for (int i = 0; i < model.Q(); ++i) t(i, xi - lo) = fn.eval({model.x(i), xi, lam, br});
    }
    return {fn.name, lo, hi, std::move(t), fn.order, fn.rho, fn.delta};
}

namespace detail {

inline std::pair<int, int> common_window(const Symbol& a, const Symbol& b) {
    const int lo = std::max(a.lo(), b.lo()), hi = std::min(a.hi(), b.hi());
    if (hi < lo) throw WindowError("symbols '" + a.name() + "' and '" + b.name() + "' have disjoint windows");
    if (a.points() != b.points()) throw ShapeError("symbols sampled on different grids");
    return {lo, hi};
}

}  // namespace detail

inline Symbol operator+(const Symbol& a, const Symbol& b) {
    auto [lo, hi] = detail::common_window(a, b);
    return {a.name() + "+" + b.name(), lo, hi, a.window(lo, hi).table() + b.window(lo, hi).table(),
            std::max(a.order(), b.order()), std::min(a.rho(), b.rho()), std::max(a.delta(), b.delta())};
}

inline Symbol operator-(const Symbol& a, const Symbol& b) {
    auto [lo, hi] = detail::common_window(a, b);
    return {a.name() + "-" + b.name(), lo, hi, a.window(lo, hi).table() - b.window(lo, hi).table(),
            std::max(a.order(), b.order()), std::min(a.rho(), b.rho()), std::max(a.delta(), b.delta())};
}

inline Symbol operator*(const Symbol& a, const Symbol& b) {
    auto [lo, hi] = detail::common_window(a, b);
    return {a.name() + "*" + b.name(), lo, hi,
            a.window(lo, hi).table().cwiseProduct(b.window(lo, hi).table()), a.order() + b.order(),
            std::min(a.rho(), b.rho()), std::max(a.delta(), b.delta())};
}

inline Symbol operator*(cplx c, const Symbol& a) {
    return {a.name(), a.lo(), a.hi(), c * a.table(), a.order(), a.rho(), a.delta()};
}

inline Symbol conj(const Symbol& a) {
    return {"conj(" + a.name() + ")", a.lo(), a.hi(), a.table().conjugate(), a.order(), a.rho(), a.delta()};
}

inline Symbol real_part(const Symbol& a) {
    return {"Re(" + a.name() + ")", a.lo(), a.hi(), a.table().real().cast<cplx>(), a.order(), a.rho(), a.delta()};
}

inline Symbol constant_symbol(const ModelProblem& model, cplx c, int margin = kDefaultMargin) {
    return sample(model, {"constant", [c](const SymbolArgs&) { return c; }, 0.0}, margin);
}

/// Admissible family q(x, y) = sum_f c_f e^{2 pi i f (y - x)} with q(x, x) = 0.
/// The default family is e^{2 pi i (y - x)} - 1; its conjugate is the adjoint family.
class AdmissibleFamily {
public:
    AdmissibleFamily() : AdmissibleFamily(std::map<int, cplx>{{0, -1.0}, {1, 1.0}}) {}

    explicit AdmissibleFamily(std::map<int, cplx> coeffs) : coeffs_(std::move(coeffs)) {
        cplx diag{0.0, 0.0};
        for (auto& [f, c] : coeffs_) diag += c;
        if (coeffs_.empty() || std::abs(diag) > 1e-14) throw AdmissibilityError("q(x, x) must vanish");
    }

    /// e^{sign 2 pi i (y - x)} - 1.
    static AdmissibleFamily exponential(int sign = 1) {
        if (sign != 1 && sign != -1) throw UsageError("sign must be +1 or -1");
        return AdmissibleFamily(std::map<int, cplx>{{0, -1.0}, {sign, 1.0}});
    }

    AdmissibleFamily adjoint() const {
        std::map<int, cplx> c;
        for (auto& [f, v] : coeffs_) c[-f] = std::conj(v);
        return AdmissibleFamily(std::move(c));
    }

    const std::map<int, cplx>& coefficients() const { return coeffs_; }

    /// Frequency coefficients of q^alpha.
    std::map<int, cplx> power_coefficients(int alpha) const {
        std::map<int, cplx> p{{0, 1.0}};
        for (int a = 0; a < alpha; ++a) {
            std::map<int, cplx> next;
            for (auto& [f1, c1] : p)
                for (auto& [f2, c2] : coeffs_) next[f1 + f2] += c1 * c2;
            p = std::move(next);
        }
        return p;
    }

    cplx power(int alpha, double x, double y) const { return evaluate(power_coefficients(alpha), x, y); }

    static cplx evaluate(const std::map<int, cplx>& coeffs, double x, double y) {
        cplx s{0.0, 0.0};
        for (auto& [f, c] : coeffs) {
            double t = f * (y - x);
            s += c * std::polar(1.0, kTwoPi * (t - std::floor(t)));
        }
        return s;
    }

    /// d^beta/dy^beta q^alpha(x, y) at y = x.
    cplx diagonal_derivative(int beta, int alpha) const {
        cplx s{0.0, 0.0};
        for (auto& [f, c] : power_coefficients(alpha)) s += c * std::pow(cplx(0.0, kTwoPi * f), beta);
        return s;
    }

    /// Frequency range of q^alpha in y, i.e. the index offsets eta - xi that
    /// the coupling integral can reach.
    std::pair<int, int> reach(int alpha) const {
        int lo = 0, hi = 0;
        bool first = true;
        for (auto& [f, c] : power_coefficients(alpha)) {
            if (c == cplx(0.0, 0.0)) continue;
            if (first) lo = hi = f, first = false;
            lo = std::min(lo, f);
            hi = std::max(hi, f);
        }
        return {lo, hi};
    }

private:
    std::map<int, cplx> coeffs_;
};

inline constexpr int kMaxDOrder = 8;

/// T[beta, alpha] = (1/alpha!) d^beta_y q^alpha at y = x, so that
/// d^beta = sum_alpha T[beta, alpha] D^(alpha) and D = T^{-1} d.
struct DTransform {
    CMatrix T;
    CMatrix Tinv;
};

inline DTransform d_operator_transform(const AdmissibleFamily& q, int max_order) {
    if (max_order < 0 || max_order > kMaxDOrder)
        throw UsageError("derivative order must be in [0, " + std::to_string(kMaxDOrder) + "]");
    const int n = max_order + 1;
    CMatrix T = CMatrix::Zero(n, n);
    double fact = 1.0;
    for (int alpha = 0; alpha < n; ++alpha) {
        if (alpha > 0) fact *= alpha;
        for (int beta = alpha; beta < n; ++beta) T(beta, alpha) = q.diagonal_derivative(beta, alpha) / fact;
    }
    for (int k = 0; k < n; ++k) {
        const double scale = std::pow(kTwoPi, k);
        if (std::abs(T(k, k)) < 1e-12 * scale)
            throw AdmissibilityError("admissible family is degenerate: d_y q vanishes on the diagonal");
    }
    CMatrix Tinv = T.triangularView<Eigen::Lower>().solve(CMatrix::Identity(n, n));
    return {std::move(T), std::move(Tinv)};
}

/// d^beta/dx^beta of every column by differentiating the trigonometric
/// interpolant. The Nyquist mode is dropped for odd beta.
inline Symbol spectral_derivative(const ModelProblem& model, const Symbol& a, int beta) {
    if (beta < 0) throw UsageError("derivative order must be nonnegative");
    if (a.points() != model.Q()) throw ShapeError("symbol grid does not match model");
    if (beta == 0) return a;
    const auto& freq = model.dft_frequencies();
    CMatrix F = model.dft() * a.table();
    for (std::size_t r = 0; r < freq.size(); ++r) {
        const int k = freq[r];
        cplx factor = std::pow(cplx(0.0, kTwoPi * k), beta);
        if (2 * k == model.Q() && beta % 2 == 1) factor = 0.0;
        F.row(static_cast<Eigen::Index>(r)) *= factor;
    }
    CMatrix out = model.idft() * F;
    // The interpolant of an x-independent column is constant; keep its derivative exactly zero.
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        if ((a.table().col(c).array() == a.table()(0, c)).all()) out.col(c).setZero();
    return {"d" + std::to_string(beta) + "(" + a.name() + ")", a.lo(), a.hi(), std::move(out), a.order(), a.rho(),
            a.delta()};
}

/// D^(beta)_x a.
inline Symbol apply_D(const ModelProblem& model, const Symbol& a, int beta,
                      const AdmissibleFamily& q = AdmissibleFamily()) {
    if (beta == 0) return a;
    DTransform dt = d_operator_transform(q, beta);
    CMatrix acc = CMatrix::Zero(a.points(), a.width());
    for (int k = 1; k <= beta; ++k) {
        cplx c = dt.Tinv(beta, k);
        if (c == cplx(0.0, 0.0)) continue;
        acc += c * spectral_derivative(model, a, k).table();
    }
    if (dt.Tinv(beta, 0) != cplx(0.0, 0.0)) acc += dt.Tinv(beta, 0) * a.table();
    return {"D" + std::to_string(beta) + "(" + a.name() + ")", a.lo(), a.hi(), std::move(acc),
            a.order() + a.delta() * beta, a.rho(), a.delta()};
}

/// Delta^alpha a through the coupling integral
///   C_i[eta, xi] = int q^alpha(x_i, y) conj(v_eta(y)) u_xi(y) dy,
///   (Delta^alpha a)(x_i, xi) = u_xi(x_i)^{-1} sum_eta u_eta(x_i) a(x_i, eta) C_i[eta, xi].
/// With basis = Lstar the roles of u and v are exchanged (adjoint differences).
/// The output window shrinks by the reach of q^alpha.
inline Symbol apply_Delta(const ModelProblem& model, const Symbol& a, int alpha,
                          const AdmissibleFamily& q = AdmissibleFamily(), Basis basis = Basis::L) {
    if (alpha < 0) throw UsageError("difference order must be nonnegative");
    if (a.points() != model.Q()) throw ShapeError("symbol grid does not match model");
    if (alpha == 0) return a;
    auto [rlo, rhi] = q.reach(alpha);
    const int lo = a.lo() - rlo, hi = a.hi() - rhi;
    if (hi < lo) throw WindowError("symbol '" + a.name() + "' window exhausted by difference of order " +
                                   std::to_string(alpha));
    const int Q = model.Q();
    const int W = hi - lo + 1;
    const int band = rhi - rlo + 1;
    const bool dual = basis == Basis::Lstar;
    const auto& w = model.rule().weights(0);

    // Qm(i, k) = q^alpha(x_i, y_k)
    const auto qa = q.power_coefficients(alpha);
    CMatrix Qm(Q, Q);
    for (int i = 0; i < Q; ++i)
        for (int k = 0; k < Q; ++k) Qm(i, k) = AdmissibleFamily::evaluate(qa, model.x(i), model.x(k));

    // P(k, (xi, j)) = w_k conj(v_{xi + r_j}(y_k)) u_xi(y_k)
    const CMatrix Ua = dual ? model.V(a.lo(), a.hi()) : model.U(a.lo(), a.hi());
    const CMatrix Va = dual ? model.U(a.lo(), a.hi()) : model.V(a.lo(), a.hi());
    CMatrix P(Q, static_cast<Eigen::Index>(W) * band);
    for (int c = 0; c < W; ++c) {
        const int xi = lo + c;
        for (int j = 0; j < band; ++j) {
            const int eta = xi + rlo + j;
            for (int k = 0; k < Q; ++k)
                P(k, c * band + j) = w[static_cast<std::size_t>(k)] * std::conj(Va(k, eta - a.lo())) * Ua(k, xi - a.lo());
        }
    }
    CMatrix C = Qm * P;

    CMatrix out(Q, W);
    for (int c = 0; c < W; ++c) {
        const int xi = lo + c;
        for (int i = 0; i < Q; ++i) {
            cplx acc{0.0, 0.0};
            for (int j = 0; j < band; ++j) {
                const int eta = xi + rlo + j;
                acc += Ua(i, eta - a.lo()) * a.at(i, eta) * C(i, c * band + j);
            }
            const cplx base = Ua(i, xi - a.lo());
            if (std::abs(base) < 1e-12) throw WzError("eigenfunction vanishes at a grid point");
            out(i, c) = acc / base;
        }
    }
    return {std::string(dual ? "Dt" : "Delta") + std::to_string(alpha) + "(" + a.name() + ")", lo, hi, std::move(out),
            a.order() - a.rho() * alpha, a.rho(), a.delta()};
}

/// sup over grid x window of |Delta^alpha D^(beta) a| <xi>^{-l + rho alpha - delta beta}.
/// The window is the model window intersected with what the differences leave.
inline double seminorm(const ModelProblem& model, const Symbol& a, double l, int alpha, int beta, double rho,
                       double delta, const AdmissibleFamily& q = AdmissibleFamily()) {
    Symbol s = apply_Delta(model, apply_D(model, a, beta, q), alpha, q);
    const int lo = std::max(s.lo(), model.lo()), hi = std::min(s.hi(), model.hi());
    double sup = 0.0;
    for (int xi = lo; xi <= hi; ++xi) {
        const double wgt = std::pow(model.bracket(xi), -l + rho * alpha - delta * beta);
        sup = std::max(sup, s.column(xi).cwiseAbs().maxCoeff() * wgt);
    }
    return sup;
}

struct SeminormGroup {
    int alpha = 0, beta = 0;
    bool vanishes = false;
    double slope = 0.0;      // d log sup_x |Delta^alpha D^beta a| / d log <xi>
    double order = 0.0;      // slope + rho alpha - delta beta
    double seminorm = 0.0;   // p at l = fitted order
};

struct SeminormReport {
    std::vector<SeminormGroup> groups;
    double m_hat = 0.0;
};

/// Each (alpha, beta) <= 2 group is fitted separately over |xi| in [N/2, N]; the
/// estimate is the largest group order. Groups that vanish identically are skipped.
inline SeminormReport estimate_order(const ModelProblem& model, const Symbol& a, double rho, double delta,
                                     const AdmissibleFamily& q = AdmissibleFamily()) {
    SeminormReport rep;
    const double amax = a.window(model.lo(), model.hi()).table().cwiseAbs().maxCoeff();
    const double floor = 1e-9 * std::max(amax, 1e-300);
    const int n0 = std::max(1, model.N() / 2);
    std::vector<Symbol> derived;
    bool any = false;
    double best = -std::numeric_limits<double>::infinity();
    for (int beta = 0; beta <= 2; ++beta) {
        Symbol db = apply_D(model, a, beta, q);
        for (int alpha = 0; alpha <= 2; ++alpha) {
            Symbol s = apply_Delta(model, db, alpha, q);
            SeminormGroup g{alpha, beta};
            double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0, gmax = 0;
            for (int xi = model.lo(); xi <= model.hi(); ++xi) {
                if (xi < s.lo() || xi > s.hi()) continue;
                gmax = std::max(gmax, s.column(xi).cwiseAbs().maxCoeff());
            }
            g.vanishes = gmax <= floor;
            if (!g.vanishes) {
                for (int k = n0; k <= model.N(); ++k) {
                    for (int xi : {-k, k}) {
                        if (xi < s.lo() || xi > s.hi()) continue;
                        double y = s.column(xi).cwiseAbs().maxCoeff();
                        if (y <= floor) continue;
                        double lx = std::log(model.bracket(xi)), ly = std::log(y);
                        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, n += 1;
                    }
                }
                double den = n * sxx - sx * sx;
                g.slope = (n >= 2 && den > 1e-300) ? (n * sxy - sx * sy) / den : 0.0;
                g.order = g.slope + rho * alpha - delta * beta;
                best = std::max(best, g.order);
                any = true;
            }
            rep.groups.push_back(g);
            derived.push_back(std::move(s));
        }
    }
    rep.m_hat = any ? best : 0.0;
    for (std::size_t k = 0; k < rep.groups.size(); ++k) {
        auto& g = rep.groups[k];
        const Symbol& s = derived[k];
        double sup = 0.0;
        for (int xi = std::max(s.lo(), model.lo()); xi <= std::min(s.hi(), model.hi()); ++xi)
            sup = std::max(sup, s.column(xi).cwiseAbs().maxCoeff() *
                                    std::pow(model.bracket(xi), -rep.m_hat + rho * g.alpha - delta * g.beta));
        g.seminorm = sup;
    }
    return rep;
}

}  // namespace nonharmonic
