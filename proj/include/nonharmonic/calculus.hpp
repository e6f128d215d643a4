#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/parallel.hpp"
#include "nonharmonic/quadrature.hpp"
#include "nonharmonic/quantize.hpp"
#include "nonharmonic/symbols.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

// ---------------------------------------------------------------- parametrix

struct ParametrixOptions {
    bool factorial = true;  // weight the gamma-th term by 1/gamma!
};

struct ParametrixResult {
    Symbol B;                    // sum of the terms on their common window
    std::vector<Symbol> terms;   // B_0, B_1, ...
    double ellipticity_sup = 0;  // sup |<xi>^m / a| over grid x model window
};

/// B_0 = 1/a, B_n = -a^{-1} sum_{k<n} (1/(n-k)!) Delta^{n-k} a D^(n-k) B_k.
inline ParametrixResult parametrix(const ModelProblem& model, const Symbol& a, double m, double rho, double delta,
                                   int n_terms, const AdmissibleFamily& q = AdmissibleFamily(),
                                   ParametrixOptions opt = {}) {
    if (n_terms < 0) throw UsageError("parametrix needs n_terms >= 0");
    (void)rho;
    (void)delta;
    ParametrixResult res;
    const CMatrix& A = a.table();
    for (Eigen::Index c = 0; c < A.cols(); ++c)
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            if (std::abs(A(i, c)) < 1e-12)
                throw EllipticityError("symbol '" + a.name() + "' vanishes at grid point " + std::to_string(i) +
                                       ", xi = " + std::to_string(a.lo() + c));
    const int lo = std::max(a.lo(), model.lo()), hi = std::min(a.hi(), model.hi());
    for (int xi = lo; xi <= hi; ++xi)
        res.ellipticity_sup = std::max(
            res.ellipticity_sup, (std::pow(model.bracket(xi), m) * a.column(xi).cwiseInverse()).cwiseAbs().maxCoeff());

    Symbol inv_a{"1/" + a.name(), a.lo(), a.hi(), A.cwiseInverse(), -a.order(), a.rho(), a.delta()};
    res.terms.push_back(inv_a);
    std::vector<Symbol> diffs;  // Delta^g a, g >= 1
    for (int n = 1; n <= n_terms; ++n) {
        diffs.push_back(apply_Delta(model, a, n, q));
        Symbol sum;
        bool first = true;
        for (int k = 0; k < n; ++k) {
            const int g = n - k;
            double w = 1.0;
            if (opt.factorial)
                for (int j = 2; j <= g; ++j) w /= j;
            Symbol t = w * (diffs[static_cast<std::size_t>(g - 1)] * apply_D(model, res.terms[static_cast<std::size_t>(k)], g, q));
            sum = first ? t : sum + t;
            first = false;
        }
        res.terms.push_back(((-1.0) * (inv_a * sum)).with_name("B" + std::to_string(n)).with_order(-a.order() - n * (rho - delta)));
    }
    res.B = res.terms.front();
    for (std::size_t k = 1; k < res.terms.size(); ++k) res.B = res.B + res.terms[k];
    res.B = res.B.with_name("parametrix(" + a.name() + ";" + std::to_string(n_terms) + ")").with_order(-a.order());
    return res;
}

// ---------------------------------------------------------------- contours

enum class ContourKind { keyhole_negative_axis, circle, polyline };

/// Quadrature-discretized closed curve. weights[k] already include dz/dt, so
/// sum_k weights[k] g(nodes[k]) approximates the contour integral of g dz.
struct Contour {
    ContourKind kind = ContourKind::keyhole_negative_axis;
    double eps = 0.1, R = 1.0, theta = kPi / 6;
    int nodes_per_segment = 100;
    std::vector<cplx> nodes;
    std::vector<cplx> weights;
    int orientation = 1;  // set by calibrate_orientation

    std::size_t size() const { return nodes.size(); }

    /// Keyhole around the negative real axis: outgoing ray at -(pi - theta), arc
    /// of radius R, incoming ray at +(pi - theta), small arc of radius eps back
    /// through the positive axis. Radial nodes are graded geometrically in r.
    static Contour keyhole(double eps, double R, double theta, int per_segment) {
        if (!(eps > 0) || !(R > eps)) throw UsageError("keyhole needs 0 < eps < R");
        if (!(theta > 0) || !(theta < kPi)) throw UsageError("keyhole opening angle must be in (0, pi)");
        if (per_segment < 1) throw UsageError("keyhole needs at least one node per segment");
        Contour c;
        c.kind = ContourKind::keyhole_negative_axis;
        c.eps = eps;
        c.R = R;
        c.theta = theta;
        c.nodes_per_segment = per_segment;
        const GaussLegendre gl = gauss_legendre(per_segment);
        const double phi = kPi - theta;
        const double L = std::log(R / eps);
        auto ray = [&](double angle, bool outward) {
            const cplx dir = std::polar(1.0, angle);
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                double t = outward ? gl.nodes[k] : -gl.nodes[k];
                double r = eps * std::exp(L * (t + 1.0) / 2.0);
                double dr = r * L / 2.0 * (outward ? 1.0 : -1.0);
                c.nodes.push_back(r * dir);
                c.weights.push_back(gl.weights[k] * dr * dir);
            }
        };
        auto arc = [&](double radius, double a0, double a1) {
            const double half = (a1 - a0) / 2.0, mid = (a1 + a0) / 2.0;
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                double ang = mid + half * gl.nodes[k];
                cplx z = std::polar(radius, ang);
                c.nodes.push_back(z);
                c.weights.push_back(gl.weights[k] * half * kI * z);
            }
        };
        ray(-phi, true);
        arc(R, -phi, phi);
        ray(phi, false);
        arc(eps, phi, -phi);
        return c;
    }

    static Contour circle(cplx center, double radius, int nodes) {
        if (!(radius > 0) || nodes < 3) throw UsageError("circle needs radius > 0 and at least 3 nodes");
        Contour c;
        c.kind = ContourKind::circle;
        c.R = radius;
        c.eps = radius;
        c.nodes_per_segment = nodes;
        for (int k = 0; k < nodes; ++k) {
            double ang = kTwoPi * k / nodes;
            cplx dz = std::polar(radius, ang) * kI * (kTwoPi / nodes);
            c.nodes.push_back(center + std::polar(radius, ang));
            c.weights.push_back(dz);
        }
        return c;
    }

    /// Closed polygon through the given vertices, Gauss-Legendre on each edge.
    static Contour polyline(const std::vector<cplx>& vertices, int per_segment) {
        if (vertices.size() < 3 || per_segment < 1) throw UsageError("polyline needs >= 3 vertices");
        Contour c;
        c.kind = ContourKind::polyline;
        c.nodes_per_segment = per_segment;
        const GaussLegendre gl = gauss_legendre(per_segment);
        for (std::size_t s = 0; s < vertices.size(); ++s) {
            cplx a = vertices[s], b = vertices[(s + 1) % vertices.size()];
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                c.nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k]);
                c.weights.push_back(gl.weights[k] * 0.5 * (b - a));
            }
        }
        return c;
    }

    /// (1/2 pi i) int dz / (z - p), times the orientation flag.
    double winding(cplx p) const {
        cplx s{0.0, 0.0};
        for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] / (nodes[k] - p);
        return (s / (kTwoPi * kI)).real() * orientation;
    }

    /// Chooses the orientation so that the functional calculus reproduces
    /// F = 1 at the probe point, i.e. -(1/2 pi i) int (p - z)^{-1} dz = 1.
    void calibrate_orientation(cplx probe) {
        orientation = 1;
        const double w = winding(probe);
        if (std::abs(std::abs(w) - 1.0) > 1e-6)
            throw UsageError("contour does not wind once around the probe point (winding " + std::to_string(w) + ")");
        orientation = w > 0 ? 1 : -1;
    }
};

/// Default contour for an operator with Galerkin matrix M: keyhole with
/// theta = pi/6, eps = 0.1, R = 4 max|eig M|, per_segment nodes per segment.
inline Contour default_contour(const CMatrix& M, int per_segment = 100) {
    Eigen::ComplexEigenSolver<CMatrix> es(M, false);
    const double rmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double eps = 0.1;
    Contour c = Contour::keyhole(eps, std::max(4.0 * rmax, 10.0 * eps), kPi / 6, per_segment);
    c.calibrate_orientation(cplx(std::sqrt(c.eps * c.R), 0.0));
    return c;
}

// ---------------------------------------------------------------- scalar functions

/// F with declared decay |F(z)| <= C |z|^decay.
struct ScalarFunction {
    std::string name;
    std::function<cplx(cplx)> f;
    double decay = -1.0;
};

inline cplx principal_power(cplx z, cplx s) {
    if (z == cplx(0.0, 0.0)) throw BranchError("power of zero");
    return std::exp(s * std::log(z));
}

inline ScalarFunction make_scalar_function(const std::string& name, double s = 0.0) {
    if (name == "inverse") return {"inverse", [](cplx z) { return 1.0 / z; }, -1.0};
    if (name == "inverse_sqrt") return {"inverse_sqrt", [](cplx z) { return principal_power(z, -0.5); }, -0.5};
    if (name == "power") {
        if (!(s < 0)) throw UsageError("power F(z) = z^s needs s < 0 for the contour calculus");
        return {"power", [s](cplx z) { return principal_power(z, s); }, s};
    }
    if (name == "zero") return {"zero", [](cplx) { return cplx(0.0, 0.0); }, -std::numeric_limits<double>::infinity()};
    throw ConfigError("unknown scalar function '" + name + "'");
}

// ---------------------------------------------------------------- resolvent and F(A)

namespace detail {

inline Eigen::PartialPivLU<CMatrix> checked_lu(const CMatrix& M, cplx z) {
    CMatrix S = M - z * CMatrix::Identity(M.rows(), M.cols());
    Eigen::PartialPivLU<CMatrix> lu(S);
    const double rc = lu_condition(lu);
    if (!(rc >= 1e-12))
        throw SpectrumError("z = (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                            ") is too close to the truncated spectrum (rcond " + std::to_string(rc) + ")");
    return lu;
}

}  // namespace detail

/// Symbol of the exact truncated resolvent (Op(a) - z)^{-1}.
inline Symbol resolvent_symbol(const ModelProblem& model, const Symbol& a, cplx z) {
    GalerkinMatrix g = galerkin_matrix(model, a);
    auto lu = detail::checked_lu(g.M, z);
    GalerkinMatrix r{lu.solve(CMatrix::Identity(g.M.rows(), g.M.cols())), "resolvent(" + a.name() + ")"};
    return extract_symbol(model, r).with_order(-a.order());
}

struct DunfordRieszResult {
    Symbol sigma;    // exact truncated symbol of F(A)
    Symbol leading;  // pointwise -(1/2 pi i) int F(z) (a - z)^{-1} dz
    CMatrix matrix;  // Galerkin matrix of F(A)
};

inline DunfordRieszResult dunford_riesz(const ModelProblem& model, const Symbol& a, const ScalarFunction& F,
                                        const Contour& contour) {
    if (!(F.decay < 0)) throw UsageError("F must decay (declared exponent < 0)");
    if (contour.size() == 0) throw UsageError("empty contour");
    GalerkinMatrix g = galerkin_matrix(model, a);
    const std::size_t n = contour.size();
    const cplx pref = -1.0 / (kTwoPi * kI) * static_cast<double>(contour.orientation);

    std::vector<cplx> fz(n);
    for (std::size_t k = 0; k < n; ++k) {
        fz[k] = F.f(contour.nodes[k]);
        if (!std::isfinite(fz[k].real()) || !std::isfinite(fz[k].imag()))
            throw SpectrumError("F is not finite at contour node " + std::to_string(k));
    }

    std::vector<CMatrix> parts(n);
    const CMatrix I = CMatrix::Identity(g.M.rows(), g.M.cols());
    parallel_for(n, [&](std::size_t k) {
        if (fz[k] == cplx(0.0, 0.0)) {
            parts[k] = CMatrix::Zero(g.M.rows(), g.M.cols());
            return;
        }
        auto lu = detail::checked_lu(g.M, contour.nodes[k]);
        parts[k] = (contour.weights[k] * fz[k]) * lu.solve(I);
    });
    CMatrix FA = CMatrix::Zero(g.M.rows(), g.M.cols());
    for (std::size_t k = 0; k < n; ++k) FA += parts[k];
    FA *= pref;

    DunfordRieszResult res;
    res.matrix = FA;
    res.sigma = extract_symbol(model, GalerkinMatrix{FA, F.name + "(" + a.name() + ")"})
                    .with_order(a.order() * F.decay);

    Symbol lead = a.window(model.lo(), model.hi());
    CMatrix& T = lead.table();
    for (Eigen::Index c = 0; c < T.cols(); ++c)
        for (Eigen::Index i = 0; i < T.rows(); ++i) {
            const cplx av = T(i, c);
            cplx s{0.0, 0.0};
            for (std::size_t k = 0; k < n; ++k) {
                const cplx d = av - contour.nodes[k];
                if (std::abs(d) < 1e-14 * std::max(1.0, std::abs(av)))
                    throw SpectrumError("contour node coincides with a symbol value");
                s += contour.weights[k] * fz[k] / d;
            }
            T(i, c) = pref * s;
        }
    res.leading = lead.with_name("leading:" + F.name + "(" + a.name() + ")");
    return res;
}

/// Pointwise exp(s Log a) with the principal branch.
inline Symbol fractional_power_symbol(const ModelProblem& model, const Symbol& a, cplx s) {
    (void)model;
    CMatrix T(a.points(), a.width());
    for (Eigen::Index c = 0; c < T.cols(); ++c)
        for (Eigen::Index i = 0; i < T.rows(); ++i) {
            const cplx av = a.table()(i, c);
            if (av.real() <= 0.0 && av.imag() == 0.0)
                throw BranchError("symbol '" + a.name() + "' touches the branch cut at xi = " +
                                  std::to_string(a.lo() + c));
            T(i, c) = s == cplx(0.0, 0.0) ? cplx(1.0, 0.0) : std::exp(s * std::log(av));
        }
    return {a.name() + "^s", a.lo(), a.hi(), std::move(T), a.order() * s.real(), a.rho(), a.delta()};
}

// ---------------------------------------------------------------- parameter ellipticity

/// Sampled parameter set Lambda.
struct LambdaSet {
    std::vector<cplx> points;

    /// Geometric samples r e^{i angle}, r in [r_min, r_max], optionally with 0.
    static LambdaSet ray(double angle, double r_min, double r_max, int samples, bool include_origin = true) {
        if (!(r_min > 0) || !(r_max >= r_min) || samples < 1) throw UsageError("ray needs 0 < r_min <= r_max, samples >= 1");
        LambdaSet L;
        if (include_origin) L.points.emplace_back(0.0, 0.0);
        const cplx dir = std::polar(1.0, angle);
        for (int k = 0; k < samples; ++k) {
            double t = samples == 1 ? 0.0 : static_cast<double>(k) / (samples - 1);
            L.points.push_back(r_min * std::pow(r_max / r_min, t) * dir);
        }
        return L;
    }

    static LambdaSet from_contour(const Contour& c) { return {c.nodes}; }
};

struct EllipticityCertificate {
    double sup = 0.0;
    double bound = std::numeric_limits<double>::infinity();
    bool pass = false;
    double derivative_rel_error = 0.0;  // max relative error of d_lambda R vs R^2
    int jitters = 0;
    std::vector<cplx> lambdas;          // samples actually used
};

/// sup over Lambda x grid x window of |(|lambda|^{1/m} + <xi>)^m (a - lambda)^{-1}|.
inline EllipticityCertificate certify_parameter_ellipticity(const ModelProblem& model, const Symbol& a, double m,
                                                             const LambdaSet& lambda_set,
                                                             double bound = std::numeric_limits<double>::infinity(),
                                                             bool check_derivative = true) {
    if (!(m > 0)) throw UsageError("order m must be positive");
    EllipticityCertificate cert;
    cert.bound = bound;
    const Symbol aw = a.window(model.lo(), model.hi());
    const CMatrix& T = aw.table();
    for (cplx lam : lambda_set.points) {
        int attempt = 0;
        for (;;) {
            double mind = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < T.cols(); ++c)
                for (Eigen::Index i = 0; i < T.rows(); ++i) mind = std::min(mind, std::abs(T(i, c) - lam));
            if (mind > 1e-12 * std::max(1.0, std::abs(lam))) break;
            if (++attempt > 3) throw EllipticityError("parameter sample keeps hitting a value of the symbol");
            lam += 1e-6 * std::max(1.0, std::abs(lam)) * std::polar(1.0, kPi / 4 * attempt);
            ++cert.jitters;
        }
        cert.lambdas.push_back(lam);
        const double lr = std::pow(std::abs(lam), 1.0 / m);
        for (Eigen::Index c = 0; c < T.cols(); ++c) {
            const double w = std::pow(lr + model.bracket(aw.lo() + static_cast<int>(c)), m);
            for (Eigen::Index i = 0; i < T.rows(); ++i) {
                const cplx d = T(i, c) - lam;
                const cplx R = 1.0 / d;
                cert.sup = std::max(cert.sup, w * std::abs(R));
                if (check_derivative) {
                    const double h = 1e-5 * std::abs(d);
                    const cplx fd = (1.0 / (T(i, c) - (lam + h)) - 1.0 / (T(i, c) - (lam - h))) / (2.0 * h);
                    cert.derivative_rel_error = std::max(cert.derivative_rel_error, std::abs(fd - R * R) / std::abs(R * R));
                }
            }
        }
    }
    cert.pass = std::isfinite(cert.sup) && cert.sup <= bound;
    return cert;
}

}  // namespace nonharmonic
