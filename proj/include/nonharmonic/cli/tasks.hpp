#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonharmonic/cli/config.hpp"
#include "nonharmonic/cli/io.hpp"
#include "nonharmonic/nonharmonic.hpp"

namespace nonharmonic::cli {

struct TaskResult {
    Table table;
    json summary = json::object();
    bool pass = false;
};

namespace detail {

inline bool x_independent(const Symbol& s) {
    const CMatrix& t = s.table();
    for (Eigen::Index c = 0; c < t.cols(); ++c)
        if (!(t.col(c).array() == t(0, c)).all()) return false;
    return true;
}

inline SymbolFunction param_symbol(const ExperimentConfig& c, const std::string& key) {
    return make_symbol(require(c.params, key, "params"), c.model.m());
}

}  // namespace detail

// CSV columns: xi,lambda_re,lambda_im,bracket,inf_u,inf_v,biorth_dev
inline TaskResult task_model_check(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"max_deviation"}, "params");
    const double tol = detail::get_or<double>(c.params, "max_deviation", 1e-12, "params");
    ModelProblem model(c.model);
    const auto& w = model.rule().weights(0);
    CMatrix WU = model.U();
    for (int i = 0; i < model.Q(); ++i) WU.row(i) *= w[static_cast<std::size_t>(i)];
    const CMatrix P = model.V().adjoint() * WU;
    const WzReport wz = check_wz(model);

    TaskResult r;
    r.table.header = {"xi", "lambda_re", "lambda_im", "bracket", "inf_u", "inf_v", "biorth_dev"};
    double dev = 0.0;
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        const int k = model.index(xi);
        double d = 0.0;
        for (int e = 0; e < model.size(); ++e) d = std::max(d, std::abs(P(e, k) - cplx(e == k ? 1.0 : 0.0)));
        dev = std::max(dev, d);
        const cplx lam = model.eigenvalue(xi);
        r.table.add({static_cast<long long>(xi), lam.real(), lam.imag(), model.bracket(xi),
                     wz.inf_u[static_cast<std::size_t>(k)], wz.inf_v[static_cast<std::size_t>(k)], d});
    }
    r.summary = {{"biorth_max_deviation", dev}, {"wz_pass", wz.pass}, {"wz_C", wz.C}, {"wz_exponent", wz.exponent}};
    r.pass = dev <= tol && wz.pass;
    return r;
}

// CSV columns: sample,roundtrip_error,l2_norm,l2L_norm,parseval_error
inline TaskResult task_transform_check(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"samples"}, "params");
    const int samples = detail::get_or<int>(c.params, "samples", 20, "params");
    if (samples < 1) throw ConfigError("samples must be >= 1");
    ModelProblem model(c.model);
    std::mt19937_64 gen(c.seed);
    TaskResult r;
    r.table.header = {"sample", "roundtrip_error", "l2_norm", "l2L_norm", "parseval_error"};
    double worst_rt = 0, worst_p = 0;
    for (int s = 0; s < samples; ++s) {
        CoeffVector cv{random_coefficients(gen, model.size()), Basis::L};
        GridFunction f = inverse(model, cv);
        const double rt = (fourier(model, f).values - cv.values).cwiseAbs().maxCoeff();
        const double n = l2_norm(model, f), nl = l2L_norm(model, cv);
        const double pe = std::abs(n - nl) / n;
        worst_rt = std::max(worst_rt, rt);
        worst_p = std::max(worst_p, pe);
        r.table.add({static_cast<long long>(s), rt, n, nl, pe});
    }
    r.summary = {{"max_roundtrip_error", worst_rt}, {"max_parseval_error", worst_p}, {"generator", kGeneratorName}};
    r.pass = worst_rt <= 1e-12 && worst_p <= 1e-10;
    return r;
}

// CSV columns: alpha,beta,vanishes,slope,order,seminorm
inline TaskResult task_symbol_order(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"symbol", "rho", "delta", "expected_order", "tolerance"}, "params");
    const SymbolFunction fn = detail::param_symbol(c, "symbol");
    const double rho = detail::get_or<double>(c.params, "rho", 1.0, "params");
    const double delta = detail::get_or<double>(c.params, "delta", 0.0, "params");
    const double tol = detail::get_or<double>(c.params, "tolerance", 0.1, "params");
    ModelProblem model(c.model);
    const SeminormReport rep = estimate_order(model, sample(model, fn), rho, delta);
    TaskResult r;
    r.table.header = {"alpha", "beta", "vanishes", "slope", "order", "seminorm"};
    for (const auto& g : rep.groups)
        r.table.add({static_cast<long long>(g.alpha), static_cast<long long>(g.beta),
                     static_cast<long long>(g.vanishes ? 1 : 0), g.slope, g.order, g.seminorm});
    r.summary = {{"symbol", fn.name}, {"declared_order", fn.order}, {"m_hat", rep.m_hat}};
    r.pass = true;
    if (c.params.contains("expected_order")) {
        const double want = detail::get<double>(c.params, "expected_order", "params");
        r.pass = std::abs(rep.m_hat - want) <= tol;
        r.summary["expected_order"] = want;
    }
    return r;
}

// CSV columns: terms,remainder
inline TaskResult task_compose(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"a", "b", "terms_max", "floor"}, "params");
    const SymbolFunction fa = detail::param_symbol(c, "a"), fb = detail::param_symbol(c, "b");
    const int terms_max = detail::get_or<int>(c.params, "terms_max", 3, "params");
    const double floor = detail::get_or<double>(c.params, "floor", 1e-9, "params");
    if (terms_max < 1) throw ConfigError("terms_max must be >= 1");
    ModelProblem model(c.model);
    const Symbol a = sample(model, fa), b = sample(model, fb);
    const Symbol exact = compose_exact(model, a, b);
    TaskResult r;
    r.table.header = {"terms", "remainder"};
    std::vector<double> rem;
    for (int t = 1; t <= terms_max; ++t) {
        const Symbol approx = compose_symbols(model, a, b, t);
        rem.push_back(inner_deviation(model, exact, approx, -(fa.order + fb.order) + t));
        r.table.add({static_cast<long long>(t), rem.back()});
    }
    r.pass = true;
    for (std::size_t k = 1; k < rem.size(); ++k) r.pass = r.pass && rem[k] <= std::max(rem[k - 1], floor);
    r.summary = {{"remainders", rem}, {"floor", floor}};
    return r;
}

// CSV columns: n_terms,remainder
inline TaskResult task_parametrix(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"symbol", "n_terms_max", "m", "factorial"}, "params");
    const SymbolFunction fn = detail::param_symbol(c, "symbol");
    const int nmax = detail::get_or<int>(c.params, "n_terms_max", 2, "params");
    const double m = detail::get_or<double>(c.params, "m", fn.order, "params");
    ParametrixOptions opt;
    opt.factorial = detail::get_or<bool>(c.params, "factorial", true, "params");
    if (nmax < 0) throw ConfigError("n_terms_max must be >= 0");
    ModelProblem model(c.model);
    const Symbol a = sample(model, fn);
    const Symbol one = constant_symbol(model, 1.0);
    TaskResult r;
    r.table.header = {"n_terms", "remainder"};
    std::vector<double> rem;
    double sup = 0;
    for (int n = 0; n <= nmax; ++n) {
        const ParametrixResult p = parametrix(model, a, m, fn.rho, fn.delta, n, AdmissibleFamily(), opt);
        sup = p.ellipticity_sup;
        rem.push_back(inner_deviation(model, compose_exact(model, a, p.B), one, 0.0));
        r.table.add({static_cast<long long>(n), rem.back()});
    }
    r.pass = rem.back() <= 1e-12 || (rem.size() > 1 && rem.back() <= 0.5 * rem.front());
    r.summary = {{"remainders", rem}, {"ellipticity_sup", sup}};
    return r;
}

// CSV columns: xi,sigma_re,sigma_im,leading_re,leading_im,oracle_re,oracle_im,rel_error
inline TaskResult task_funcalc(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"symbol", "function", "contour", "tolerance"}, "params");
    const SymbolFunction fn = detail::param_symbol(c, "symbol");
    const ScalarFunction F = make_function(detail::require(c.params, "function", "params"));
    const double tol = detail::get_or<double>(c.params, "tolerance", 1e-6, "params");
    json cj = c.params.value("contour", json::object());
    detail::reject_unknown(cj, {"nodes_per_segment", "eps", "R", "theta"}, "contour");
    const int per = detail::get_or<int>(cj, "nodes_per_segment", 100, "contour");

    ModelProblem model(c.model);
    const Symbol a = sample(model, fn);
    const GalerkinMatrix g = galerkin_matrix(model, a);
    Contour contour = default_contour(g.M, per);
    if (cj.contains("eps") || cj.contains("R") || cj.contains("theta")) {
        contour = Contour::keyhole(detail::get_or<double>(cj, "eps", contour.eps, "contour"),
                                   detail::get_or<double>(cj, "R", contour.R, "contour"),
                                   detail::get_or<double>(cj, "theta", contour.theta, "contour"), per);
        contour.calibrate_orientation(cplx(std::sqrt(contour.eps * contour.R), 0.0));
    }
    const DunfordRieszResult dr = dunford_riesz(model, a, F, contour);
    const bool multiplier = detail::x_independent(a);

    TaskResult r;
    r.table.header = {"xi", "sigma_re", "sigma_im", "leading_re", "leading_im", "oracle_re", "oracle_im", "rel_error"};
    double worst = 0.0;
    for (int xi = model.lo(); xi <= model.hi(); ++xi) {
        const cplx s = dr.sigma.at(0, xi), l = dr.leading.at(0, xi), o = F.f(a.at(0, xi));
        const double e = std::abs(s - o) / std::abs(o);
        worst = std::max(worst, e);
        r.table.add({static_cast<long long>(xi), s.real(), s.imag(), l.real(), l.imag(), o.real(), o.imag(), e});
    }
    r.summary = {{"function", F.name},         {"contour_nodes", contour.size()}, {"eps", contour.eps},
                 {"R", contour.R},             {"theta", contour.theta},          {"max_rel_error", worst},
                 {"oracle_exact", multiplier}};
    r.pass = !multiplier || worst <= tol;
    return r;
}

// CSV columns: trial,generator,seed,re_form,h_norm2,l2_norm2,margin
inline TaskResult task_garding(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"symbol", "m", "trials", "min_C1"}, "params");
    const SymbolFunction fn = detail::param_symbol(c, "symbol");
    const double m = detail::get_or<double>(c.params, "m", fn.order, "params");
    const int trials = detail::get_or<int>(c.params, "trials", 200, "params");
    const double min_c1 = detail::get_or<double>(c.params, "min_C1", 0.0, "params");
    ModelProblem model(c.model);
    const GardingReport g = garding_estimate(model, sample(model, fn), m, trials, c.seed);
    TaskResult r;
    r.table.header = {"trial", "generator", "seed", "re_form", "h_norm2", "l2_norm2", "margin"};
    for (std::size_t k = 0; k < g.trials.size(); ++k) {
        const auto& t = g.trials[k];
        r.table.add({static_cast<long long>(k), g.generator, static_cast<long long>(g.seed), t.re_form, t.h_norm2,
                     t.l2_norm2, t.re_form - (g.C1 * t.h_norm2 - g.C2 * t.l2_norm2)});
    }
    r.summary = {{"C0", g.C0}, {"C1", g.C1}, {"C2", g.C2}, {"violations", g.violations}, {"generator", g.generator}};
    r.pass = g.pass && g.C1 >= min_c1;
    return r;
}

// CSV columns: N,Q,operator_norm,hs_norm
inline TaskResult task_l2norm(const ExperimentConfig& c) {
    detail::reject_unknown(c.params, {"symbol", "truncations", "max_growth"}, "params");
    const SymbolFunction fn = detail::param_symbol(c, "symbol");
    const auto ns = detail::get_or<std::vector<int>>(c.params, "truncations", {8, 16, 32}, "params");
    const double max_growth = detail::get_or<double>(c.params, "max_growth", 0.01, "params");
    if (ns.empty()) throw ConfigError("truncations must be nonempty");
    const std::vector<double> norms = l2_operator_norm(c.model, fn, ns);
    TaskResult r;
    r.table.header = {"N", "Q", "operator_norm", "hs_norm"};
    for (std::size_t k = 0; k < ns.size(); ++k) {
        ModelSpec sp = c.model;
        sp.N = ns[k];
        sp.Q = std::max(c.model.Q, 8 * ns[k]);
        ModelProblem model(sp);
        r.table.add({static_cast<long long>(sp.N), static_cast<long long>(sp.Q), norms[k],
                     hilbert_schmidt_norm(model, sample(model, fn, 0))});
    }
    const double growth = norms.size() > 1 ? norms.back() / norms[norms.size() - 2] - 1.0 : 0.0;
    r.summary = {{"norms", norms}, {"last_growth", growth}};
    r.pass = growth <= max_growth;
    return r;
}

// ---------------------------------------------------------------- evolve

namespace detail {

inline std::function<double(double)> make_coefficient(const json& j) {
    reject_unknown(j, {"type", "value", "a0", "a1", "frequency"}, "coefficient");
    const std::string type = get<std::string>(j, "type", "coefficient");
    if (type == "constant") {
        const double v = get<double>(j, "value", "coefficient");
        return [v](double) { return v; };
    }
    if (type == "cosine") {
        const double a0 = get<double>(j, "a0", "coefficient"), a1 = get<double>(j, "a1", "coefficient");
        const double f = get_or<double>(j, "frequency", 1.0, "coefficient");
        return [a0, a1, f](double t) { return a0 + a1 * std::cos(kTwoPi * f * t); };
    }
    throw ConfigError("unknown coefficient type '" + type + "'");
}

}  // namespace detail

/// K(t) = sum_j c_j(t) a_j, forcing f(t) = amplitude cos(2 pi frequency t) u_mode.
inline EvolutionProblem build_evolution(const ModelProblem& model, const ExperimentConfig& c) {
    const json& p = c.params;
    detail::reject_unknown(p, {"generator", "forcing", "initial", "T", "steps", "scheme", "literal_sign", "trials"},
                           "params");
    const json& gen = detail::require(p, "generator", "params");
    if (!gen.is_array() || gen.empty()) throw ConfigError("generator must be a nonempty array");
    std::vector<Symbol> parts;
    std::vector<std::function<double(double)>> coef;
    for (const auto& term : gen) {
        detail::reject_unknown(term, {"symbol", "coefficient"}, "generator term");
        parts.push_back(sample(model, make_symbol(detail::require(term, "symbol", "generator term"), model.m())));
        coef.push_back(term.contains("coefficient") ? detail::make_coefficient(term.at("coefficient"))
                                                    : [](double) { return 1.0; });
    }
    EvolutionProblem e;
    e.generator = [parts, coef](double t) {
        Symbol K = coef[0](t) * parts[0];
        for (std::size_t k = 1; k < parts.size(); ++k) K = K + coef[k](t) * parts[k];
        return K.with_order(parts[0].order());
    };

    if (p.contains("forcing")) {
        const json& f = p.at("forcing");
        detail::reject_unknown(f, {"mode", "amplitude", "frequency"}, "forcing");
        const int mode = detail::get<int>(f, "mode", "forcing");
        if (mode < model.lo() || mode > model.hi()) throw ConfigError("forcing mode outside the window");
        const double amp = detail::get_or<double>(f, "amplitude", 1.0, "forcing");
        const double fr = detail::get_or<double>(f, "frequency", 0.0, "forcing");
        const CVector u = model.U().col(model.index(mode));
        e.forcing = [u, amp, fr](double t) { return GridFunction{amp * std::cos(kTwoPi * fr * t) * u, 1}; };
    }

    const json init = p.value("initial", json{{"mode", 1}});
    detail::reject_unknown(init, {"mode", "amplitude", "random"}, "initial");
    if (detail::get_or<bool>(init, "random", false, "initial")) {
        std::mt19937_64 g(c.seed);
        e.u0 = inverse(model, {random_coefficients(g, model.size()), Basis::L});
    } else {
        const int mode = detail::get_or<int>(init, "mode", 1, "initial");
        if (mode < model.lo() || mode > model.hi()) throw ConfigError("initial mode outside the window");
        e.u0 = {detail::get_or<double>(init, "amplitude", 1.0, "initial") * model.U().col(model.index(mode)), 1};
    }
    e.T = detail::get_or<double>(p, "T", 1.0, "params");
    e.steps = detail::get_or<int>(p, "steps", 100, "params");
    e.scheme = parse_scheme(detail::get_or<std::string>(p, "scheme", "crank_nicolson", "params"));
    e.literal_sign = detail::get_or<bool>(p, "literal_sign", false, "params");
    return e;
}

// CSV columns: step,t,norm,energy_margin
inline TaskResult task_evolve(const ExperimentConfig& c) {
    ModelProblem model(c.model);
    const EvolutionProblem p = build_evolution(model, c);
    const int trials = detail::get_or<int>(c.params, "trials", 200, "params");
    const Trajectory tr = solve_ivp(model, p);
    const EnergyReport en = energy_check(model, p, tr, trials, c.seed);
    const std::vector<double> res = residual(model, p, tr);
    TaskResult r;
    r.table.header = {"step", "t", "norm", "energy_margin"};
    for (std::size_t k = 0; k < tr.t.size(); ++k)
        r.table.add({static_cast<long long>(k), tr.t[k], tr.norms[k], en.margins[k]});
    r.summary = {{"C2", en.C2},
                 {"C", en.C},
                 {"C_prime", en.C_prime},
                 {"C_prime_bound", en.C_prime_bound},
                 {"violations", en.violations},
                 {"max_residual", res.empty() ? 0.0 : *std::max_element(res.begin(), res.end())},
                 {"picard_iterations", tr.picard_iterations},
                 {"picard_converged", tr.picard_converged}};
    r.pass = en.violations == 0 && tr.picard_converged;
    return r;
}

inline TaskResult run_task(const ExperimentConfig& c) {
    if (c.task == "model-check") return task_model_check(c);
    if (c.task == "transform-check") return task_transform_check(c);
    if (c.task == "symbol-order") return task_symbol_order(c);
    if (c.task == "compose") return task_compose(c);
    if (c.task == "parametrix") return task_parametrix(c);
    if (c.task == "funcalc") return task_funcalc(c);
    if (c.task == "garding") return task_garding(c);
    if (c.task == "l2norm") return task_l2norm(c);
    if (c.task == "evolve") return task_evolve(c);
    throw ConfigError("unknown task '" + c.task + "'");
}

}  // namespace nonharmonic::cli
