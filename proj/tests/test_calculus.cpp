#include <gtest/gtest.h>

#include <cmath>

#include "nonharmonic/calculus.hpp"
#include "nonharmonic/quantize.hpp"
#include "oracles.hpp"

using namespace nonharmonic;

namespace {

ModelSpec spec(ModelKind k, double h = 1.0, int n = 16, int q = 128) {
    ModelSpec s;
    s.kind = k;
    s.h = h;
    s.N = n;
    s.Q = q;
    return s;
}

const SymbolFunction kBracket{"br", [](const SymbolArgs& s) { return cplx(s.bracket); }, 1.0};
const SymbolFunction kBracket2{"br2", [](const SymbolArgs& s) { return cplx(s.bracket * s.bracket); }, 2.0};
const SymbolFunction kLambda{"lambda", [](const SymbolArgs& s) { return s.lambda; }, 1.0};
const SymbolFunction kVar2{
    "var2", [](const SymbolArgs& s) { return (1.0 + 0.5 * std::sin(2 * oracle::pi * s.x)) * s.bracket * s.bracket; },
    2.0};

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

double rel_error(const ModelProblem& m, const Symbol& s, const std::function<cplx(int)>& want) {
    double e = 0;
    for (int xi = m.lo(); xi <= m.hi(); ++xi)
        e = std::max(e, (s.column(xi).array() - want(xi)).abs().maxCoeff() / std::abs(want(xi)));
    return e;
}

double band_remainder(const ModelProblem& m, const Symbol& e, int from, int to) {
    double s = 0;
    for (int k = from; k <= to; ++k)
        for (int xi : {-k, k}) s = std::max(s, (e.column(xi).array() - 1.0).abs().maxCoeff());
    return s;
}

}  // namespace

TEST(Parametrix, MultiplierIsExact) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    Symbol a = sample(m, kBracket2);
    const Symbol one = constant_symbol(m, 1.0);
    for (int n = 0; n <= 3; ++n) {
        const ParametrixResult p = parametrix(m, a, 2, 1, 0, n);
        ASSERT_EQ(p.terms.size(), static_cast<std::size_t>(n + 1));
        for (std::size_t k = 1; k < p.terms.size(); ++k) EXPECT_EQ(max_abs(p.terms[k].table()), 0.0);
        EXPECT_LE(inner_deviation(m, compose_exact(m, a, p.B), one, 0.0), 1e-12);
        EXPECT_NEAR(p.ellipticity_sup, 1.0, 1e-12);
    }
}

TEST(Parametrix, LeadingTermIsInverse) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    Symbol a = sample(m, kVar2);
    const ParametrixResult p = parametrix(m, a, 2, 1, 0, 0);
    EXPECT_LE(max_abs(p.B.table().cwiseProduct(a.table()) - CMatrix::Ones(a.points(), a.width())), 1e-14);
    EXPECT_NEAR(p.ellipticity_sup, 2.0, 1e-12);
}

TEST(Parametrix, FirstCorrectionClosedForm) {
    // B_1 = -a^{-1} (Delta a) D^(1)(1/a), D^(1) = (2 pi i)^{-1} d/dx
    ModelProblem m(spec(ModelKind::torus_derivative));
    Symbol a = sample(m, kVar2);
    const ParametrixResult p = parametrix(m, a, 2, 1, 0, 1);
    const Symbol& b1 = p.terms[1];
    for (int xi = m.lo(); xi <= m.hi() - 1; ++xi)
        for (int i = 0; i < m.Q(); i += 5) {
            const double x = m.x(i), s = 1 + 0.5 * std::sin(2 * oracle::pi * x);
            const double br = m.bracket(xi), br1 = m.bracket(xi + 1);
            const double av = s * br * br, da = s * (br1 * br1 - br * br);
            const double ax = oracle::pi * std::cos(2 * oracle::pi * x) * br * br;
            const cplx dinv = (-ax / (av * av)) / cplx(0.0, 2 * oracle::pi);
            const cplx want = -(1.0 / av) * da * dinv;
            EXPECT_NEAR(std::abs(b1.at(i, xi) - want), 0.0, 1e-10 * std::abs(want) + 1e-15) << xi;
        }
}

TEST(Parametrix, RemainderDecaysAtHighFrequencies) {
    for (int n : {16, 32}) {
        ModelProblem m(spec(ModelKind::torus_derivative, 1, n, 8 * n));
        Symbol a = sample(m, kVar2);
        const double r0 = band_remainder(m, compose_exact(m, a, parametrix(m, a, 2, 1, 0, 0).B), 3 * n / 8, n / 2);
        const double r2 = band_remainder(m, compose_exact(m, a, parametrix(m, a, 2, 1, 0, 2).B), 3 * n / 8, n / 2);
        EXPECT_LE(r2, 0.5 * r0) << "N=" << n;
    }
}

TEST(Parametrix, FactorialOptionChangesHigherTerms) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kVar2);
    ParametrixOptions printed;
    printed.factorial = false;
    const ParametrixResult p = parametrix(m, a, 2, 1, 0, 2);
    const ParametrixResult q = parametrix(m, a, 2, 1, 0, 2, AdmissibleFamily(), printed);
    EXPECT_EQ(max_abs(p.terms[1].table() - q.terms[1].table()), 0.0);
    EXPECT_GT(max_abs(p.terms[2].table() - q.terms[2].table()), 0.0);
}

TEST(Parametrix, PlantedZeroRaises) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kBracket2);
    a.table()(3, 5) = 0.0;
    EXPECT_THROW(parametrix(m, a, 2, 1, 0, 1), EllipticityError);
}

TEST(Contour, KeyholeWindsOnceAroundPositiveAxis) {
    Contour c = Contour::keyhole(0.1, 100.0, oracle::pi / 6, 120);
    c.calibrate_orientation(cplx(std::sqrt(10.0), 0.0));
    for (double p : {0.5, 3.0, 50.0}) EXPECT_NEAR(c.winding(p), 1.0, 1e-8) << p;
    EXPECT_NEAR(c.winding(-5.0), 0.0, 1e-8);
    EXPECT_NEAR(c.winding(200.0), 0.0, 1e-8);
    EXPECT_THROW(Contour::keyhole(1.0, 0.5, 0.5, 10), UsageError);
    EXPECT_THROW(c.calibrate_orientation(cplx(-5.0, 0.0)), UsageError);
}

TEST(Contour, CircleAndPolyline) {
    Contour c = Contour::circle(cplx(1.0, 1.0), 2.0, 64);
    EXPECT_NEAR(c.winding(cplx(1.5, 0.5)), 1.0, 1e-12);
    Contour p = Contour::polyline({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, 40);
    EXPECT_NEAR(std::abs(p.winding(0.0)), 1.0, 1e-8);
}

TEST(Resolvent, MultiplierIsDiagonalInverse) {
    ModelProblem m(spec(ModelKind::torus_laplacian, 1, 8, 64));
    Symbol a = sample(m, kBracket2);
    const cplx z(-2.0, 1.0);
    Symbol r = resolvent_symbol(m, a, z);
    EXPECT_LE(rel_error(m, r, [&](int xi) { return 1.0 / (m.bracket(xi) * m.bracket(xi) - z); }), 1e-13);
}

TEST(Resolvent, EigenvalueRaises) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kLambda);
    EXPECT_THROW(resolvent_symbol(m, a, m.eigenvalue(2)), SpectrumError);
}

TEST(Resolvent, AgreesWithParametrixOfShiftedSymbol) {
    const cplx z(-1.0, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {16, 32}) {
        ModelProblem m(spec(ModelKind::torus_derivative, 1, n, 8 * n));
        Symbol a = sample(m, kVar2);
        Symbol r = resolvent_symbol(m, a, z);
        Symbol b = parametrix(m, a - constant_symbol(m, z), 2, 1, 0, 2).B;
        double sup = 0;
        for (int k = n / 4; k <= n / 2; ++k)
            for (int xi : {-k, k})
                sup = std::max(sup, (r.column(xi) - b.column(xi)).cwiseAbs().maxCoeff() * std::pow(m.bracket(xi), 3));
        EXPECT_LT(sup, prev) << "N=" << n;
        prev = sup;
    }
}

TEST(DunfordRiesz, InverseAndSqrtOnMultiplier) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    Symbol a = sample(m, kBracket2);
    const Contour c = default_contour(galerkin_matrix(m, a).M, 100);
    EXPECT_EQ(c.size(), 400u);
    const auto inv = dunford_riesz(m, a, make_scalar_function("inverse"), c);
    EXPECT_LE(rel_error(m, inv.sigma, [&](int xi) { return cplx(std::pow(m.bracket(xi), -2)); }), 1e-6);
    EXPECT_LE(rel_error(m, inv.leading, [&](int xi) { return cplx(std::pow(m.bracket(xi), -2)); }), 1e-6);
    const auto isq = dunford_riesz(m, a, make_scalar_function("inverse_sqrt"), c);
    EXPECT_LE(rel_error(m, isq.sigma, [&](int xi) { return cplx(1.0 / m.bracket(xi)); }), 1e-6);
}

TEST(DunfordRiesz, ZeroFunction) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kBracket2);
    const auto z = dunford_riesz(m, a, make_scalar_function("zero"), default_contour(galerkin_matrix(m, a).M));
    EXPECT_EQ(max_abs(z.sigma.table()), 0.0);
}

TEST(DunfordRiesz, RejectsGrowingFunction) {
    EXPECT_THROW(make_scalar_function("power", 0.5), UsageError);
    EXPECT_THROW(make_scalar_function("exp"), ConfigError);
}

TEST(FractionalPower, Examples) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    Symbol a = sample(m, kBracket2);
    EXPECT_LE(rel_error(m, fractional_power_symbol(m, a, 0.5), [&](int xi) { return cplx(m.bracket(xi)); }), 1e-14);
    EXPECT_EQ(max_abs(fractional_power_symbol(m, a, 0.0).table() - CMatrix::Ones(a.points(), a.width())), 0.0);
    const Symbol fp = fractional_power_symbol(m, a, -0.5);
    const auto dr = dunford_riesz(m, a, make_scalar_function("inverse_sqrt"), default_contour(galerkin_matrix(m, a).M));
    double e = 0;
    for (int xi = m.lo(); xi <= m.hi(); ++xi)
        e = std::max(e, (fp.column(xi) - dr.sigma.column(xi)).cwiseAbs().maxCoeff() / std::abs(fp.at(0, xi)));
    EXPECT_LE(e, 1e-6);
    EXPECT_THROW(fractional_power_symbol(m, (-1.0) * a, 0.5), BranchError);
}

TEST(ParameterEllipticity, NegativeAxis) {
    ModelProblem m(spec(ModelKind::torus_derivative));
    Symbol a = sample(m, kBracket2);
    const auto cert = certify_parameter_ellipticity(m, a, 2, LambdaSet::ray(oracle::pi, 1e-3, 1e6, 200), 2.0);
    EXPECT_TRUE(cert.pass);
    EXPECT_LE(cert.sup, 2.0);
    EXPECT_LE(cert.derivative_rel_error, 1e-6);
}

TEST(ParameterEllipticity, OriginGivesOne) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kBracket2);
    const auto cert = certify_parameter_ellipticity(m, a, 2, LambdaSet{{cplx(0.0, 0.0)}});
    EXPECT_NEAR(cert.sup, 1.0, 1e-14);
}

TEST(ParameterEllipticity, RealSpectrumImaginaryAxis) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kLambda);
    const auto cert = certify_parameter_ellipticity(m, a, 1, LambdaSet::ray(-oracle::pi / 2, 1e-2, 1e4, 100, false));
    EXPECT_TRUE(std::isfinite(cert.sup));
    EXPECT_GT(cert.sup, 0.0);
}

TEST(ParameterEllipticity, CollisionIsJittered) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 8, 64));
    Symbol a = sample(m, kBracket2);
    const auto cert = certify_parameter_ellipticity(m, a, 2, LambdaSet{{cplx(m.bracket(1) * m.bracket(1), 0.0)}});
    EXPECT_EQ(cert.jitters, 1);
    EXPECT_TRUE(std::isfinite(cert.sup));
}

TEST(DunfordRiesz, OrderOfResultIsMTimesDecay) {
    ModelProblem m(spec(ModelKind::torus_derivative, 1, 32, 256));
    Symbol a = sample(m, kBracket2);
    const auto r = dunford_riesz(m, a, make_scalar_function("inverse_sqrt"), default_contour(galerkin_matrix(m, a).M));
    EXPECT_EQ(r.sigma.order(), -1.0);
    EXPECT_NEAR(estimate_order(m, r.sigma, 1, 0).m_hat, -1.0, 0.05);
}
