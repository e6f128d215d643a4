#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "nonharmonic/analysis.hpp"
#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/quantize.hpp"
#include "nonharmonic/symbols.hpp"
#include "nonharmonic/transform.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

enum class Scheme { crank_nicolson, backward_euler, picard };

inline Scheme parse_scheme(const std::string& s) {
    if (s == "crank_nicolson") return Scheme::crank_nicolson;
    if (s == "backward_euler") return Scheme::backward_euler;
    if (s == "picard") return Scheme::picard;
    throw ConfigError("unknown scheme '" + s + "'");
}

/// dv/dt = K(t) v + f(t), v(0) = u0.
struct EvolutionProblem {
    std::function<Symbol(double)> generator;    // K(t) sampled on the model
    std::function<GridFunction(double)> forcing;  // may be empty (f = 0)
    GridFunction u0;
    double T = 1.0;
    int steps = 100;
    Scheme scheme = Scheme::crank_nicolson;
    bool literal_sign = false;  // gate on Re K instead of -Re K
};

struct Trajectory {
    std::vector<double> t;
    std::vector<CVector> coeffs;
    std::vector<double> norms;  // ||v(t_k)||_{L^2}
    int picard_iterations = 0;
    bool picard_converged = true;
};

namespace detail {

inline double gram_norm(const CMatrix& G, const CVector& c) { return std::sqrt(std::max(0.0, c.dot(G * c).real())); }

inline CVector forcing_hat(const ModelProblem& model, const EvolutionProblem& p, double t) {
    if (!p.forcing) return CVector::Zero(model.size());
    return fourier(model, p.forcing(t)).values;
}

inline CMatrix generator_matrix(const ModelProblem& model, const EvolutionProblem& p, double t) {
    return galerkin_matrix(model, p.generator(t)).M;
}

inline Eigen::PartialPivLU<CMatrix> solver(const CMatrix& A) {
    Eigen::PartialPivLU<CMatrix> lu(A);
    const double rc = lu_condition(lu);
    if (!(rc >= 1e-12)) throw SolveError("time-step matrix is singular (rcond " + std::to_string(rc) + ")");
    return lu;
}

}  // namespace detail

/// Requires -Re K(t) (Re K(t) with literal_sign) to be positive on grid x window
/// at t in {0, T/2, T}. K = 0 passes.
inline void check_dissipative(const ModelProblem& model, const EvolutionProblem& p) {
    if (!p.generator) throw ConfigError("evolution problem has no generator");
    for (double t : {0.0, p.T / 2, p.T}) {
        const Symbol K = p.generator(t).window(model.lo(), model.hi());
        if (K.table().cwiseAbs().maxCoeff() == 0.0) continue;
        const double sign = p.literal_sign ? 1.0 : -1.0;
        for (int xi = model.lo(); xi <= model.hi(); ++xi)
            for (int i = 0; i < model.Q(); ++i)
                if (!(sign * K.at(i, xi).real() > 0))
                    throw EllipticityError("generator fails the dissipativity gate at t = " + std::to_string(t) +
                                           ", xi = " + std::to_string(xi));
    }
}

inline Trajectory solve_ivp(const ModelProblem& model, const EvolutionProblem& p) {
    if (!(p.T > 0) || p.steps < 1) throw ConfigError("evolution needs T > 0 and steps >= 1");
    check_dissipative(model, p);
    const int n = model.size();
    const double dt = p.T / p.steps;
    const CMatrix I = CMatrix::Identity(n, n);
    const CMatrix G = gram_matrix(model);

    Trajectory tr;
    for (int k = 0; k <= p.steps; ++k) tr.t.push_back(k == p.steps ? p.T : k * dt);
    CVector v = fourier(model, p.u0).values;

    if (p.scheme == Scheme::picard) {
        // Trapezoidal Volterra map v <- v_k + dt/2 (K_k v_k + f_k + K_{k+1} v + f_{k+1}),
        // iterated to a fixed point on each step in turn.
        tr.coeffs.push_back(v);
        CMatrix Mk = detail::generator_matrix(model, p, 0.0);
        CVector gk = detail::forcing_hat(model, p, 0.0);
        tr.picard_converged = true;
        for (int k = 0; k < p.steps; ++k) {
            const double t1 = tr.t[static_cast<std::size_t>(k) + 1];
            const CMatrix M1 = detail::generator_matrix(model, p, t1);
            const CVector g1 = detail::forcing_hat(model, p, t1);
            const CVector base = v + 0.5 * dt * (Mk * v + gk + g1);
            CVector w = v;
            double prev = std::numeric_limits<double>::infinity();
            int growth = 0, it = 0;
            bool done = false;
            for (it = 1; it <= 50; ++it) {
                CVector next = base + 0.5 * dt * (M1 * w);
                const double diff = (next - w).norm();
                w = std::move(next);
                if (diff <= 1e-10 * std::max(1.0, w.norm())) {
                    done = true;
                    break;
                }
                growth = diff > prev ? growth + 1 : 0;
                if (growth >= 5) throw SolveError("Picard iteration is not contracting at step " + std::to_string(k));
                prev = diff;
            }
            tr.picard_iterations = std::max(tr.picard_iterations, std::min(it, 50));
            tr.picard_converged = tr.picard_converged && done;
            v = std::move(w);
            tr.coeffs.push_back(v);
            Mk = M1;
            gk = g1;
        }
    } else {
        tr.coeffs.push_back(v);
        CMatrix Mk = detail::generator_matrix(model, p, 0.0);
        for (int k = 0; k < p.steps; ++k) {
            const double t0 = tr.t[static_cast<std::size_t>(k)], t1 = tr.t[static_cast<std::size_t>(k) + 1];
            CMatrix M1 = detail::generator_matrix(model, p, t1);
            if (p.scheme == Scheme::crank_nicolson) {
                CVector rhs = v + 0.5 * dt * (Mk * v) + dt * detail::forcing_hat(model, p, 0.5 * (t0 + t1));
                v = detail::solver(I - 0.5 * dt * M1).solve(rhs);
            } else {
                CVector rhs = v + dt * detail::forcing_hat(model, p, t1);
                v = detail::solver(I - dt * M1).solve(rhs);
            }
            tr.coeffs.push_back(v);
            Mk = std::move(M1);
        }
    }
    for (const auto& c : tr.coeffs) tr.norms.push_back(detail::gram_norm(G, c));
    return tr;
}

/// Gronwall rate C2: the largest Garding C2 of -K(t) (K(t) with literal_sign)
/// over t in {0, T/2, T}. Zero generators contribute 0.
inline double gronwall_rate(const ModelProblem& model, const EvolutionProblem& p, int trials = 200,
                            std::uint64_t seed = 0) {
    double c2 = 0.0;
    for (double t : {0.0, p.T / 2, p.T}) {
        Symbol K = p.generator(t).window(model.lo(), model.hi());
        if (K.table().cwiseAbs().maxCoeff() == 0.0) continue;
        Symbol A = (p.literal_sign ? 1.0 : -1.0) * K;
        const double m = K.order() > 0 ? K.order() : model.m();
        c2 = std::max(c2, garding_estimate(model, A, m, trials, seed).C2);
    }
    return c2;
}

struct EnergyReport {
    double C2 = 0;        // Gronwall rate from the Garding constants
    double C = 1;         // coefficient of ||u0||^2
    double C_prime = 0;   // tightest coefficient of int ||f||^2 given C
    double C_prime_bound = 0;
    std::vector<double> margins;  // bound - ||v(t_k)||^2 with (C, C_prime_bound)
    int violations = 0;
};

/// ||v(t_k)||^2 <= C ||u0||^2 + C' int_0^{t_k} ||f||^2. With f = 0, C = e^{2 C2 T};
/// otherwise the forcing pairing adds 1 to the rate and C = C' = e^{(2 C2 + 1) T}.
inline EnergyReport energy_check(const ModelProblem& model, const EvolutionProblem& p, const Trajectory& tr,
                                 int trials = 200, std::uint64_t seed = 0) {
    EnergyReport rep;
    rep.C2 = gronwall_rate(model, p, trials, seed);
    const std::size_t n = tr.t.size();
    std::vector<double> fint(n, 0.0);
    bool forced = false;
    if (p.forcing) {
        std::vector<double> f2(n);
        for (std::size_t k = 0; k < n; ++k) {
            f2[k] = std::pow(l2_norm(model, p.forcing(tr.t[k])), 2);
            forced = forced || f2[k] > 0;
        }
        for (std::size_t k = 1; k < n; ++k) fint[k] = fint[k - 1] + 0.5 * (tr.t[k] - tr.t[k - 1]) * (f2[k] + f2[k - 1]);
    }
    const double rate = forced ? 2 * rep.C2 + 1 : 2 * rep.C2;
    rep.C = std::exp(rate * p.T);
    rep.C_prime_bound = forced ? rep.C : 0.0;
    const double u02 = tr.norms.front() * tr.norms.front();
    for (std::size_t k = 0; k < n; ++k) {
        const double v2 = tr.norms[k] * tr.norms[k];
        const double bound = rep.C * u02 + rep.C_prime_bound * fint[k];
        rep.margins.push_back(bound - v2);
        if (v2 > bound + 1e-12 * std::max(1.0, bound)) ++rep.violations;
        if (fint[k] > 0) rep.C_prime = std::max(rep.C_prime, (v2 - rep.C * u02) / fint[k]);
    }
    rep.C_prime = std::max(0.0, rep.C_prime);
    return rep;
}

struct UniquenessReport {
    bool bitwise_identical = false;
    double homogeneous_max = 0;
    double C2 = 0;
    std::vector<double> ratio;     // ||v_pert(t) - v(t)|| / scale
    std::vector<double> envelope;  // e^{C2 t}
    bool within_envelope = false;
};

inline UniquenessReport uniqueness_probe(const ModelProblem& model, const EvolutionProblem& p, double scale,
                                         std::uint64_t seed = 0, int trials = 200) {
    if (!(scale > 0)) throw UsageError("perturbation scale must be positive");
    UniquenessReport rep;
    const Trajectory a = solve_ivp(model, p);
    const Trajectory b = solve_ivp(model, p);
    rep.bitwise_identical = a.coeffs.size() == b.coeffs.size();
    for (std::size_t k = 0; rep.bitwise_identical && k < a.coeffs.size(); ++k)
        rep.bitwise_identical = a.coeffs[k].size() == b.coeffs[k].size() &&
                                std::equal(a.coeffs[k].data(), a.coeffs[k].data() + a.coeffs[k].size(), b.coeffs[k].data());

    EvolutionProblem hom = p;
    hom.forcing = nullptr;
    hom.u0 = {CVector::Zero(model.Q()), 1};
    const Trajectory z = solve_ivp(model, hom);
    for (double nv : z.norms) rep.homogeneous_max = std::max(rep.homogeneous_max, nv);

    std::mt19937_64 gen(seed);
    CoeffVector c{random_coefficients(gen, model.size()), Basis::L};
    c.values /= l2L_norm(model, c);
    EvolutionProblem pert = p;
    CVector u0c = fourier(model, p.u0).values + scale * c.values;
    pert.u0 = inverse(model, {u0c, Basis::L});
    const Trajectory d = solve_ivp(model, pert);

    rep.C2 = gronwall_rate(model, p, trials, seed);
    const CMatrix G = gram_matrix(model);
    rep.within_envelope = true;
    for (std::size_t k = 0; k < a.coeffs.size(); ++k) {
        const double r = detail::gram_norm(G, d.coeffs[k] - a.coeffs[k]) / scale;
        const double env = std::exp(rep.C2 * a.t[k]);
        rep.ratio.push_back(r);
        rep.envelope.push_back(env);
        if (r > env * (1 + 1e-6)) rep.within_envelope = false;
    }
    return rep;
}

/// Central-difference defect (v_{k+1} - v_{k-1}) / (2 dt) - (K v_k + f_k) at interior steps.
inline std::vector<double> residual(const ModelProblem& model, const EvolutionProblem& p, const Trajectory& tr) {
    const CMatrix G = gram_matrix(model);
    std::vector<double> out;
    for (std::size_t k = 1; k + 1 < tr.t.size(); ++k) {
        const double h = tr.t[k + 1] - tr.t[k - 1];
        CVector d = (tr.coeffs[k + 1] - tr.coeffs[k - 1]) / h -
                    (detail::generator_matrix(model, p, tr.t[k]) * tr.coeffs[k] + detail::forcing_hat(model, p, tr.t[k]));
        out.push_back(detail::gram_norm(G, d));
    }
    return out;
}

}  // namespace nonharmonic
