// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance               run every criterion
//   acceptance --criterion 7 run one criterion

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nonharmonic/cli/run.hpp"
#include "nonharmonic/nonharmonic.hpp"
#include "../oracles.hpp"

using namespace nonharmonic;

namespace {

// Pinned tolerances.
constexpr double kBiorthTol = 1e-12;
constexpr double kWzTol = 1e-14;
constexpr double kRoundtripTol = 1e-12;
constexpr double kParsevalTol = 1e-10;
constexpr double kModeNormTol = 1e-10;
constexpr double kDeltaTol = 1e-12;
constexpr double kExtractTol = 1e-11;
constexpr double kRouteTol = 1e-8;
constexpr double kComposeFloor = 1e-9;
constexpr double kMultiplierParametrixTol = 1e-12;
constexpr double kParametrixGain = 2.0;
constexpr double kFuncalcTol = 1e-6;
constexpr double kFuncalcFloor = 1e-13;
constexpr double kFractionalTol = 1e-6;
constexpr double kEllipticityBound = 2.0;
constexpr double kDerivativeTol = 1e-6;
constexpr double kGardingMinC1 = 0.2;
constexpr double kGardingMultiplierTol = 1e-10;
constexpr double kPlateauGrowth = 0.01;
constexpr double kHsTol = 1e-10;
constexpr double kOrderTol = 0.2;
constexpr double kHomogeneousTol = 1e-12;

constexpr int kN = 16;
constexpr int kQ = 128;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

ModelSpec spec(ModelKind k, double h = 1.0, int n = kN, int q = kQ) {
    ModelSpec s;
    s.kind = k;
    s.h = h;
    s.N = n;
    s.Q = q;
    return s;
}

std::vector<ModelSpec> builtin_models() {
    return {spec(ModelKind::torus_derivative), spec(ModelKind::h_derivative, 0.5), spec(ModelKind::h_derivative, 2.0),
            spec(ModelKind::torus_laplacian)};
}

std::string label(const ModelProblem& m) {
    std::string s(to_string(m.kind()));
    if (m.kind() == ModelKind::h_derivative) s += "(h=" + std::to_string(m.spec().h).substr(0, 3) + ")";
    return s;
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

GridFunction mode(const ModelProblem& m, int xi) { return {m.U().col(m.index(xi)), 1}; }

const double kPi2 = 2 * oracle::pi;

const SymbolFunction kOne{"one", [](const SymbolArgs&) { return cplx(1.0); }, 0.0};
const SymbolFunction kBracket{"br", [](const SymbolArgs& s) { return cplx(s.bracket); }, 1.0};
const SymbolFunction kBracket2{"br2", [](const SymbolArgs& s) { return cplx(s.bracket * s.bracket); }, 2.0};
const SymbolFunction kLambda{"lambda", [](const SymbolArgs& s) { return s.lambda; }, 1.0};
const SymbolFunction kShift{"e", [](const SymbolArgs& s) { return std::polar(1.0, kPi2 * s.x); }, 0.0};
const SymbolFunction kModBracket{
    "mod*br", [](const SymbolArgs& s) { return (1.0 + 0.5 * std::sin(kPi2 * s.x)) * s.bracket; }, 1.0};
const SymbolFunction kModBracket2{
    "mod*br2", [](const SymbolArgs& s) { return (1.0 + 0.5 * std::sin(kPi2 * s.x)) * s.bracket * s.bracket; }, 2.0};
const SymbolFunction kIndicator1{"1{xi=1}", [](const SymbolArgs& s) { return cplx(s.xi == 1 ? 1.0 : 0.0); }, 0.0};
const SymbolFunction kMixed{
    "cos*lambda", [](const SymbolArgs& s) { return std::cos(kPi2 * s.x) * s.lambda + s.bracket; }, 1.0};

// ---------------------------------------------------------------- AC1

void ac1(Outcome& o) {
    double dev = 0, wz = 0;
    for (const auto& s : builtin_models()) {
        ModelProblem m(s);
        dev = std::max(dev, check_biorthogonality(m));
        const WzReport r = check_wz(m);
        const double h = m.kind() == ModelKind::h_derivative ? s.h : 1.0;
        for (double d : r.inf_u) wz = std::max(wz, std::abs(d - std::min(1.0, h)));
        for (double d : r.inf_v) wz = std::max(wz, std::abs(d - std::min(1.0, 1.0 / h)));
        o.check(r.pass, "WZ on " + label(m));
    }
    o.detail << "max|(u,v)-delta| = " << dev << ", max WZ infimum error = " << wz;
    o.check(dev <= kBiorthTol, "biorthogonality");
    o.check(wz <= kWzTol, "WZ infima");
}

// ---------------------------------------------------------------- AC2

void ac2(Outcome& o) {
    double rt = 0, pv = 0;
    for (const auto& s : builtin_models()) {
        ModelProblem m(s);
        std::mt19937_64 gen(2024);
        for (int k = 0; k < 20; ++k) {
            const CoeffVector c{random_coefficients(gen, m.size()), Basis::L};
            const GridFunction f = inverse(m, c);
            const double scale = std::max(1.0, f.values.cwiseAbs().maxCoeff());
            rt = std::max(rt, (inverse(m, fourier(m, f)).values - f.values).cwiseAbs().maxCoeff() / scale);
            rt = std::max(rt, (fourier(m, f).values - c.values).cwiseAbs().maxCoeff());
            pv = std::max(pv, std::abs(l2L_norm(m, fourier(m, f)) - l2_norm(m, f)));
        }
    }
    ModelProblem h2(spec(ModelKind::h_derivative, 2.0));
    const double norm = l2_norm(h2, mode(h2, 0));
    const double want = std::sqrt(3.0 / (2.0 * std::log(2.0)));
    o.detail << "roundtrip = " << rt << ", Parseval = " << pv << ", ||u_0|| (h=2) = " << std::setprecision(12)
             << norm << " vs " << want;
    o.check(rt <= kRoundtripTol, "roundtrip");
    o.check(pv <= kParsevalTol, "Parseval");
    o.check(std::abs(norm - want) <= kModeNormTol, "h=2 mode norm");
}

// ---------------------------------------------------------------- AC3

void ac3(Outcome& o) {
    double worst = 0;
    for (const auto& s : builtin_models()) {
        ModelProblem m(s);
        for (const auto& fn : {kBracket, kLambda, kModBracket, kMixed}) {
            const Symbol a = sample(m, fn);
            const Symbol d = apply_Delta(m, a, 1);
            double err = 0, scale = 1.0;
            for (int xi = d.lo(); xi <= d.hi(); ++xi)
                for (int i = 0; i < m.Q(); ++i) {
                    err = std::max(err, std::abs(d.at(i, xi) - (a.at(i, xi + 1) - a.at(i, xi))));
                    scale = std::max(scale, std::abs(a.at(i, xi)));
                }
            worst = std::max(worst, err / scale);
        }
    }
    o.detail << "max |Delta a - forward difference| / max(1, |a|) = " << worst;
    o.check(worst <= kDeltaTol, "difference operator");
}

// ---------------------------------------------------------------- AC4

void ac4(Outcome& o) {
    double ex = 0, route = 0;
    for (const auto& s : builtin_models()) {
        ModelProblem m(s);
        std::mt19937_64 gen(44);
        CVector cv = CVector::Zero(m.size());
        for (int xi = -m.N() / 2; xi <= m.N() / 2; ++xi) cv(m.index(xi)) = random_coefficients(gen, 1)(0);
        const CoeffVector c{cv, Basis::L};
        const GridFunction f = inverse(m, c);
        for (const auto& fn : {kBracket, kLambda, kShift, kModBracket, kIndicator1}) {
            const Symbol a = sample(m, fn);
            const CMatrix ref = a.window(m.lo(), m.hi()).table();
            ex = std::max(ex, max_abs(extract_symbol(m, a).table() - ref) / std::max(1.0, max_abs(ref)));
            const CVector direct = op_apply(m, a, f).values;
            const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
            const CVector viaK = kernel_apply(m, kernel(m, a), f).values;
            const CVector viaM = m.U() * (galerkin_matrix(m, a).M * c.values);
            route = std::max(route, (viaK - direct).cwiseAbs().maxCoeff() / scale);
            route = std::max(route, (viaM - direct).cwiseAbs().maxCoeff() / scale);
        }
    }
    o.detail << "extract roundtrip = " << ex << ", route disagreement = " << route;
    o.check(ex <= kExtractTol, "extract roundtrip");
    o.check(route <= kRouteTol, "route agreement");
}

// ---------------------------------------------------------------- AC5

void ac5(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    const Symbol a = sample(m, kBracket), b = sample(m, kShift);
    const Symbol exact = compose_exact(m, a, b);
    std::vector<double> r;
    for (int t = 1; t <= 3; ++t) r.push_back(inner_deviation(m, exact, compose_symbols(m, a, b, t), t - 1.0));
    o.detail << "weighted remainders (terms 1..3) = " << r[0] << ", " << r[1] << ", " << r[2];
    for (std::size_t k = 1; k < r.size(); ++k)
        o.check(r[k] <= r[k - 1] || std::max(r[k], r[k - 1]) <= kComposeFloor, "nonincreasing");
}

// ---------------------------------------------------------------- AC6

double remainder_sup(const ModelProblem& m, const Symbol& a, int n_terms, int from, int to) {
    const Symbol e = compose_exact(m, a, parametrix(m, a, 2, 1, 0, n_terms).B);
    double s = 0;
    for (int k = from; k <= to; ++k)
        for (int xi : {-k, k}) s = std::max(s, (e.column(xi).array() - 1.0).abs().maxCoeff());
    return s;
}

void ac6(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    const double mult = remainder_sup(m, sample(m, kBracket2), 2, 0, m.N() / 2);
    const Symbol a = sample(m, kModBracket2);
    const double r0 = remainder_sup(m, a, 0, 0, m.N() / 2), r2 = remainder_sup(m, a, 2, 0, m.N() / 2);
    const double h0 = remainder_sup(m, a, 0, 3 * m.N() / 8, m.N() / 2);
    const double h2 = remainder_sup(m, a, 2, 3 * m.N() / 8, m.N() / 2);
    o.detail << "multiplier remainder = " << mult << "; variable |xi|<=N/2: " << r0 << " -> " << r2
             << " (info: band 3N/8<=|xi|<=N/2: " << h0 << " -> " << h2 << ")";
    o.check(mult <= kMultiplierParametrixTol, "multiplier exact");
    o.check(r2 * kParametrixGain <= r0, "variable-coefficient gain");
}

// ---------------------------------------------------------------- AC7

double funcalc_error(const ModelProblem& m, const Symbol& a, const ScalarFunction& F, int per_segment,
                     Symbol* sigma = nullptr) {
    const Contour c = default_contour(galerkin_matrix(m, a).M, per_segment);
    const DunfordRieszResult r = dunford_riesz(m, a, F, c);
    double e = 0;
    for (int xi = m.lo(); xi <= m.hi(); ++xi) {
        const cplx want = F.f(cplx(m.bracket(xi) * m.bracket(xi), 0.0));
        e = std::max(e, (r.sigma.column(xi).array() - want).abs().maxCoeff() / std::abs(want));
    }
    if (sigma) *sigma = r.sigma;
    return e;
}

void ac7(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    const Symbol a = sample(m, kBracket2);
    const std::vector<ScalarFunction> fs = {make_scalar_function("inverse"), make_scalar_function("inverse_sqrt"),
                                            make_scalar_function("power", -0.25)};
    for (const auto& F : fs) {
        std::vector<double> e;
        for (int total : {100, 200, 400}) e.push_back(funcalc_error(m, a, F, total / 4));
        o.detail << F.name << (F.name == "power" ? "(-1/4)" : "") << ": " << e[0] << ", " << e[1] << ", " << e[2]
                 << "; ";
        o.check(e[2] <= kFuncalcTol, F.name + " accuracy");
        for (std::size_t k = 1; k < e.size(); ++k)
            o.check(e[k] <= e[k - 1] || std::max(e[k], e[k - 1]) <= kFuncalcFloor, F.name + " monotone");
    }
    Symbol contour_route;
    funcalc_error(m, a, make_scalar_function("inverse_sqrt"), 100, &contour_route);
    const Symbol fp = fractional_power_symbol(m, a, -0.5);
    double d = 0;
    for (int xi = m.lo(); xi <= m.hi(); ++xi)
        d = std::max(d, (fp.column(xi) - contour_route.column(xi)).cwiseAbs().maxCoeff() / std::abs(fp.at(0, xi)));
    o.detail << "fractional power vs contour = " << d;
    o.check(d <= kFractionalTol, "fractional power cross-check");
}

// ---------------------------------------------------------------- AC8

void ac8(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    const auto cert = certify_parameter_ellipticity(m, sample(m, kBracket2), 2,
                                                    LambdaSet::ray(oracle::pi, 1e-3, 1e6, 400), kEllipticityBound);
    o.detail << "sup = " << cert.sup << ", d_lambda R vs R^2 = " << cert.derivative_rel_error;
    o.check(cert.pass, "sup bound");
    o.check(cert.derivative_rel_error <= kDerivativeTol, "derivative");
}

// ---------------------------------------------------------------- AC9

void ac9(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    const GardingReport v = garding_estimate(m, sample(m, kModBracket2), 2, 200, 9);
    const GardingReport c = garding_estimate(m, sample(m, kBracket2), 2, 200, 9);
    o.detail << "variable: C1 = " << v.C1 << ", C2 = " << v.C2 << ", violations = " << v.violations
             << "; multiplier: C1 = " << c.C1 << ", C2 = " << c.C2;
    o.check(v.C1 >= kGardingMinC1 && v.violations == 0, "variable");
    o.check(std::abs(c.C1 - 1.0) <= kGardingMultiplierTol && std::abs(c.C2) <= kGardingMultiplierTol, "multiplier");
}

// ---------------------------------------------------------------- AC10

void ac10(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    struct Case { double s, t, eps, bound; };
    for (const Case& c : {Case{2, 1, 0.1, 1 / (4 * 0.1)}, Case{1, 0, 0.5, 1 - 0.5}}) {
        const InterpolationReport r = validate_interpolation(m, c.s, c.t, c.eps, 100, 10);
        o.detail << "(s,t,eps)=(" << c.s << "," << c.t << "," << c.eps << "): C_eps = " << r.C_eps << " <= " << c.bound
                 << ", violations = " << r.violations << "; ";
        o.check(r.violations == 0, "violations");
        o.check(r.C_eps <= c.bound, "continuum bound");
    }
}

// ---------------------------------------------------------------- AC11

void ac11(Outcome& o) {
    const SymbolFunction a0{"mod", [](const SymbolArgs& s) { return cplx(1.0 + 0.5 * std::cos(kPi2 * s.x)); }, 0.0};
    const std::vector<double> n = l2_operator_norm(spec(ModelKind::torus_derivative), a0, {16, 32});
    const double growth = (n[1] - n[0]) / n[0];

    ModelProblem m(spec(ModelKind::torus_derivative));
    const SymbolFunction hs{
        "mod/br", [](const SymbolArgs& s) { return (1.0 + 0.5 * std::sin(kPi2 * s.x)) / s.bracket; }, -1.0};
    const Symbol a = sample(m, hs);
    double want = 0;
    for (int xi = m.lo(); xi <= m.hi(); ++xi)
        for (int i = 0; i < m.Q(); ++i) want += std::norm(a.at(i, xi)) / m.Q();
    const double got = std::pow(hilbert_schmidt_norm(m, a), 2);
    o.detail << "operator norm N=16 -> 32: " << n[0] << " -> " << n[1] << " (growth " << growth
             << "); HS^2 = " << got << " vs " << want;
    o.check(growth <= kPlateauGrowth, "plateau");
    o.check(std::abs(got - want) <= kHsTol, "HS identity");
}

// ---------------------------------------------------------------- AC12

EvolutionProblem heat(const ModelProblem& m, int steps, Scheme scheme) {
    EvolutionProblem p;
    const Symbol K = (-1.0) * sample(m, kBracket2);
    p.generator = [K](double) { return K; };
    p.u0 = mode(m, 1);
    p.T = 0.1;
    p.steps = steps;
    p.scheme = scheme;
    return p;
}

EvolutionProblem registered(const ModelProblem& m, Scheme scheme) {
    EvolutionProblem p;
    const Symbol br2 = sample(m, kBracket2), e = sample(m, kShift);
    p.generator = [br2, e](double t) {
        return ((-(1.0 + 0.3 * std::cos(kPi2 * t))) * br2 + 0.1 * e).with_order(2.0);
    };
    const GridFunction f = mode(m, 2);
    p.forcing = [f](double) { return f; };
    p.u0 = mode(m, 1);
    p.T = 1.0;
    p.steps = 200;
    p.scheme = scheme;
    return p;
}

double decay_error(const ModelProblem& m, int steps, Scheme s) {
    const Trajectory tr = solve_ivp(m, heat(m, steps, s));
    double e = 0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        CVector want = CVector::Zero(m.size());
        want(m.index(1)) = oracle::decay(1 + 4 * oracle::pi * oracle::pi, tr.t[k]);
        e = std::max(e, (tr.coeffs[k] - want).norm());
    }
    return e;
}

bool csv_deterministic(const std::filesystem::path& dir, const cli::json& cfg, const std::string& task) {
    cli::write_file(dir / "config.json", cfg.dump(2));
    std::ostringstream log;
    const std::string c = (dir / "config.json").string();
    cli::run({c, (dir / "a").string(), {}}, log);
    cli::run({c, (dir / "b").string(), {}}, log);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    const std::string a = slurp(dir / "a" / (task + ".csv"));
    return !a.empty() && a == slurp(dir / "b" / (task + ".csv"));
}

void ac12(Outcome& o) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    const double cn = std::log2(decay_error(m, 50, Scheme::crank_nicolson) / decay_error(m, 100, Scheme::crank_nicolson));
    const double be = std::log2(decay_error(m, 50, Scheme::backward_euler) / decay_error(m, 100, Scheme::backward_euler));

    int violations = 0;
    double hom = 0;
    for (Scheme s : {Scheme::crank_nicolson, Scheme::backward_euler}) {
        for (const EvolutionProblem& p : {heat(m, 100, s), registered(m, s)}) {
            violations += energy_check(m, p, solve_ivp(m, p), 200, 12).violations;
            hom = std::max(hom, uniqueness_probe(m, p, 1e-6, 12, 50).homogeneous_max);
        }
    }

    const auto dir = std::filesystem::temp_directory_path() / "nonharmonic_acceptance_ac12";
    std::filesystem::remove_all(dir);
    const cli::json garding = {
        {"model", {{"kind", "torus_derivative"}, {"N", kN}, {"Q", kQ}}},
        {"task", "garding"},
        {"params", {{"symbol", {{"type", "modulated"}, {"base", {{"type", "bracket_power"}, {"s", 2}}}}}, {"trials", 50}}},
        {"seed", 12}};
    const cli::json evolve = {
        {"model", {{"kind", "torus_derivative"}, {"N", kN}, {"Q", kQ}}},
        {"task", "evolve"},
        {"params",
         {{"generator", {{{"symbol", {{"type", "bracket_power"}, {"s", 2}, {"sign", -1}}}}}},
          {"initial", {{"mode", 1}, {"random", true}}},
          {"T", 0.1},
          {"steps", 50}}},
        {"seed", 12}};
    const bool bitwise = csv_deterministic(dir / "garding", garding, "garding") &&
                         csv_deterministic(dir / "evolve", evolve, "evolve");
    std::filesystem::remove_all(dir);

    o.detail << "CN order = " << cn << ", BE order = " << be << ", energy violations = " << violations
             << ", homogeneous max = " << hom << ", CSV bitwise = " << (bitwise ? "yes" : "no");
    o.check(std::abs(cn - 2.0) <= kOrderTol, "CN order");
    o.check(std::abs(be - 1.0) <= kOrderTol, "BE order");
    o.check(violations == 0, "energy");
    o.check(hom <= kHomogeneousTol, "uniqueness");
    o.check(bitwise, "CSV determinism");
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Outcome&)> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "biorthogonality and WZ", ac1},         {2, "transform roundtrip and Parseval", ac2},
        {3, "difference operator", ac3},            {4, "quantization roundtrip and routes", ac4},
        {5, "composition expansion", ac5},          {6, "parametrix", ac6},
        {7, "functional calculus", ac7},            {8, "parameter ellipticity", ac8},
        {9, "Garding inequality", ac9},             {10, "interpolation", ac10},
        {11, "L2 bounds", ac11},                    {12, "evolution", ac12},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int k = 1; k < argc; ++k) {
        const std::string arg = argv[k];
        if (arg == "--criterion" && k + 1 < argc) {
            only = std::atoi(argv[++k]);
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }
    int failed = 0, ran = 0;
    for (const auto& c : criteria()) {
        if (only && c.id != only) continue;
        ++ran;
        Outcome o;
        o.detail.precision(6);
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        std::cout << "AC" << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << o.detail.str()
                  << std::endl;
        failed += o.pass ? 0 : 1;
    }
    if (ran == 0) {
        std::cerr << "no criterion " << only << "\n";
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
