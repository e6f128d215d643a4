#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nonharmonic/error.hpp"
#include "nonharmonic/quadrature.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

enum class ModelKind { torus_derivative, h_derivative, torus_laplacian };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::torus_derivative: return "torus_derivative";
        case ModelKind::h_derivative: return "h_derivative";
        case ModelKind::torus_laplacian: return "torus_laplacian";
    }
    return "unknown";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "torus_derivative") return ModelKind::torus_derivative;
    if (s == "h_derivative") return ModelKind::h_derivative;
    if (s == "torus_laplacian") return ModelKind::torus_laplacian;
    throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

/// Order of the model operator for each kind.
inline double natural_order(ModelKind k) { return k == ModelKind::torus_laplacian ? 2.0 : 1.0; }

struct ModelSpec {
    ModelKind kind = ModelKind::torus_derivative;
    double h = 1.0;
    int N = 16;
    int Q = 128;
    std::optional<double> order;

    double m() const { return order.value_or(natural_order(kind)); }

    /// Throws ConfigError if an invariant fails. With check_quadrature=false the
    /// Q >= 2(2N+1) rule is skipped (aliasing experiments only).
    void validate(bool check_quadrature = true) const {
        if (N < 1) throw ConfigError("N must be >= 1, got " + std::to_string(N));
        if (Q < 1) throw ConfigError("Q must be >= 1, got " + std::to_string(Q));
        if (check_quadrature && Q < 2 * (2 * N + 1))
            throw ConfigError("Q must be >= 2(2N+1) = " + std::to_string(2 * (2 * N + 1)) + ", got Q = " +
                              std::to_string(Q));
        if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h must be a positive finite real");
        if (kind != ModelKind::h_derivative && h != 1.0)
            throw ConfigError("h is only meaningful for h_derivative");
        if (order && *order != natural_order(kind))
            throw ConfigError("order " + std::to_string(*order) + " does not match kind " + std::string(to_string(kind)));
    }
};

/// Truncated biorthogonal eigen-system on [0,1) built from closed forms.
class ModelProblem {
public:
    explicit ModelProblem(const ModelSpec& spec, bool check_quadrature = true) : spec_(spec) {
        spec_.validate(check_quadrature);
        log_h_ = spec_.kind == ModelKind::h_derivative ? std::log(spec_.h) : 0.0;
        rule_ = PeriodicRule(spec_.Q, log_h_);
        U_ = U(lo(), hi());
        V_ = V(lo(), hi());
        build_dft();
    }

    const ModelSpec& spec() const { return spec_; }
    ModelKind kind() const { return spec_.kind; }
    int N() const { return spec_.N; }
    int Q() const { return spec_.Q; }
    int lo() const { return -spec_.N; }
    int hi() const { return spec_.N; }
    int size() const { return 2 * spec_.N + 1; }
    int index(int xi) const { return xi + spec_.N; }
    double m() const { return spec_.m(); }
    double log_h() const { return log_h_; }
    const PeriodicRule& rule() const { return rule_; }
    const std::vector<double>& grid() const { return rule_.nodes(); }
    double x(int i) const { return rule_.nodes()[static_cast<std::size_t>(i)]; }

    cplx eigenvalue(int xi) const {
        switch (spec_.kind) {
            case ModelKind::torus_derivative: return {kTwoPi * xi, 0.0};
            case ModelKind::h_derivative: return {kTwoPi * xi, 0.0 - log_h_};
            case ModelKind::torus_laplacian: return {kTwoPi * kTwoPi * xi * xi, 0.0};
        }
        return {};
    }

    double bracket(int xi) const { return std::pow(1.0 + std::norm(eigenvalue(xi)), 1.0 / (2.0 * m())); }

    /// u_xi at grid point i. The phase is reduced modulo Q so that all kinds
    /// share the same arithmetic (h = 1 reproduces the torus bitwise).
    cplx u(int xi, int i) const { return std::polar(std::pow(base(), x(i)), grid_phase(xi, i)); }
    cplx v(int xi, int i) const { return std::polar(std::pow(base(), -x(i)), grid_phase(xi, i)); }

    cplx u_at(int xi, double xv) const { return std::polar(std::pow(base(), xv), free_phase(xi, xv)); }
    cplx v_at(int xi, double xv) const { return std::polar(std::pow(base(), -xv), free_phase(xi, xv)); }

    /// Q x (b-a+1) sample matrices, column j holds mode a+j.
    CMatrix U(int a, int b) const { return sample(a, b, false); }
    CMatrix V(int a, int b) const { return sample(a, b, true); }
    const CMatrix& U() const { return U_; }
    const CMatrix& V() const { return V_; }

    CVector eigenvalues() const {
        CVector ev(size());
        for (int xi = lo(); xi <= hi(); ++xi) ev(index(xi)) = eigenvalue(xi);
        return ev;
    }

    /// Forward DFT F[k,i] = e^{-2 pi i k i / Q} / Q for k = kmin..kmax (symmetric order)
    /// and its inverse; used for spectral x-differentiation.
    const CMatrix& dft() const { return dft_; }
    const CMatrix& idft() const { return idft_; }
    const std::vector<int>& dft_frequencies() const { return freq_; }

private:
    double base() const { return spec_.kind == ModelKind::h_derivative ? spec_.h : 1.0; }

    double grid_phase(int xi, int i) const {
        const long q = spec_.Q;
        long r = (static_cast<long>(xi) * i) % q;
        if (r < 0) r += q;
        return kTwoPi * static_cast<double>(r) / static_cast<double>(q);
    }

    static double free_phase(int xi, double xv) {
        double t = xi * xv;
        return kTwoPi * (t - std::floor(t));
    }

    CMatrix sample(int a, int b, bool dual) const {
        CMatrix out(spec_.Q, b - a + 1);
        for (int j = 0; j <= b - a; ++j)
            for (int i = 0; i < spec_.Q; ++i) out(i, j) = dual ? v(a + j, i) : u(a + j, i);
        return out;
    }

    void build_dft() {
        const int q = spec_.Q;
        const int kmin = -((q - 1) / 2);
        const int kmax = q / 2;
        freq_.clear();
        for (int k = kmin; k <= kmax; ++k) freq_.push_back(k);
        dft_.resize(q, q);
        idft_.resize(q, q);
        for (int r = 0; r < q; ++r) {
            const int k = freq_[static_cast<std::size_t>(r)];
            for (int i = 0; i < q; ++i) {
                double ph = grid_phase(k, i);
                dft_(r, i) = std::polar(1.0 / q, -ph);
                idft_(i, r) = std::polar(1.0, ph);
            }
        }
    }

    ModelSpec spec_;
    double log_h_ = 0.0;
    PeriodicRule rule_;
    CMatrix U_, V_;
    CMatrix dft_, idft_;
    std::vector<int> freq_;
};

inline ModelProblem build_model(const ModelSpec& spec) { return ModelProblem(spec); }

/// Skips the Q >= 2(2N+1) invariant so aliasing can be observed.
inline ModelProblem build_model_unchecked(const ModelSpec& spec) { return ModelProblem(spec, false); }

/// max over (xi, eta) of |(u_xi, v_eta) - delta|.
inline double check_biorthogonality(const ModelProblem& model) {
    const auto& w = model.rule().weights(0);
    const CMatrix& U = model.U();
    const CMatrix& V = model.V();
    CMatrix WU = U;
    for (int i = 0; i < model.Q(); ++i) WU.row(i) *= w[static_cast<std::size_t>(i)];
    CMatrix P = V.adjoint() * WU;  // P[eta, xi] = sum_i w u_xi conj(v_eta)
    double dev = 0.0;
    for (int r = 0; r < P.rows(); ++r)
        for (int c = 0; c < P.cols(); ++c) dev = std::max(dev, std::abs(P(r, c) - cplx(r == c ? 1.0 : 0.0)));
    return dev;
}

struct WzReport {
    std::vector<int> xi;
    std::vector<double> inf_u, inf_v;
    double C = 0.0;         // fitted constant in inf|u| >= C <xi>^{-exponent}
    double exponent = 0.0;  // fitted decay exponent
    bool pass = false;
};

/// Infima are taken over the grid and the closing endpoint x = 1, i.e. over the
/// closed interval on which the eigenfunctions are defined.
inline WzReport check_wz(const ModelProblem& model) {
    WzReport rep;
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        double iu = std::abs(model.u_at(xi, 1.0));
        double iv = std::abs(model.v_at(xi, 1.0));
        for (int i = 0; i < model.Q(); ++i) {
            iu = std::min(iu, std::abs(model.u(xi, i)));
            iv = std::min(iv, std::abs(model.v(xi, i)));
        }
        rep.xi.push_back(xi);
        rep.inf_u.push_back(iu);
        rep.inf_v.push_back(iv);
    }
    rep.pass = std::all_of(rep.inf_u.begin(), rep.inf_u.end(), [](double d) { return d > 0.0; }) &&
               std::all_of(rep.inf_v.begin(), rep.inf_v.end(), [](double d) { return d > 0.0; });
    if (!rep.pass) return rep;

    // log inf|u| = log C - exponent * log<xi>
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.xi.size());
    for (std::size_t k = 0; k < rep.xi.size(); ++k) {
        double lx = std::log(model.bracket(rep.xi[k]));
        double ly = std::log(rep.inf_u[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double den = n * sxx - sx * sx;
    double slope = std::abs(den) > 1e-300 ? (n * sxy - sx * sy) / den : 0.0;
    rep.exponent = -slope;
    rep.C = std::exp((sy - slope * sx) / n);
    return rep;
}

struct BracketTable {
    std::vector<int> xi;
    std::vector<double> values;
};

inline BracketTable bracket(const ModelProblem& model) {
    BracketTable t;
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        t.xi.push_back(xi);
        t.values.push_back(model.bracket(xi));
    }
    return t;
}

struct TailReport {
    double s = 0.0;
    std::vector<int> k;
    std::vector<double> partial;     // sum over |xi| <= k of <xi>^{-s}
    std::vector<double> increments;  // partial[k] - partial[k-1]
    double decay_exponent = 0.0;     // fitted p in increment ~ k^{-p}
    bool convergent = false;
};

/// Partial sums of <xi>^{-s}. Convergence is judged from the decay of the
/// increments over the last half of the window: the series converges iff the
/// fitted exponent exceeds 1.
inline TailReport s0_tail(const ModelProblem& model, double s) {
    if (!(s >= 0.0)) throw UsageError("s0_tail needs s >= 0");
    TailReport rep;
    rep.s = s;
    double acc = std::pow(model.bracket(0), -s);
    for (int k = 1; k <= model.N(); ++k) {
        double inc = std::pow(model.bracket(k), -s) + std::pow(model.bracket(-k), -s);
        acc += inc;
        rep.k.push_back(k);
        rep.partial.push_back(acc);
        rep.increments.push_back(inc);
    }
    const int first = std::max(1, model.N() / 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (int k = first; k <= model.N(); ++k) {
        double lx = std::log(static_cast<double>(k));
        double ly = std::log(rep.increments[static_cast<std::size_t>(k - 1)]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        n += 1;
    }
    double den = n * sxx - sx * sx;
    rep.decay_exponent = den > 0 ? -(n * sxy - sx * sy) / den : 0.0;
    rep.convergent = rep.decay_exponent > 1.0;
    return rep;
}

}  // namespace nonharmonic
