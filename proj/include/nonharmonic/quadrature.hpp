#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nonharmonic/error.hpp"
#include "nonharmonic/types.hpp"

namespace nonharmonic {

/// Q-point equispaced rule on [0,1) for integrands of the form
/// exp(twist * log_h * x) * p(x) with p a trigonometric polynomial.
///
/// With twist 0 this is the plain periodic trapezoid rule (weights 1/Q). For
/// nonzero twist the exponential factor is integrated in closed form against
/// each Fourier mode of p, so the rule is exact whenever p has degree below Q/2.
/// Products of eigenfunctions of the quasi-periodic model carry such factors
/// h^{±x}, h^{±2x}.
class PeriodicRule {
public:
    static constexpr int kMaxTwist = 2;

    PeriodicRule() = default;

    PeriodicRule(int points, double log_h) : points_(points), log_h_(log_h) {
        if (points < 1) throw ConfigError("quadrature needs at least one point");
        nodes_.resize(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) nodes_[static_cast<std::size_t>(i)] = static_cast<double>(i) / points;
        for (int twist = -kMaxTwist; twist <= kMaxTwist; ++twist)
            weights_[static_cast<std::size_t>(twist + kMaxTwist)] = build(twist);
    }

    int points() const { return points_; }
    double log_h() const { return log_h_; }
    const std::vector<double>& nodes() const { return nodes_; }

    const std::vector<double>& weights(int twist) const {
        if (twist < -kMaxTwist || twist > kMaxTwist)
            throw UsageError("quadrature twist out of range: " + std::to_string(twist));
        return weights_[static_cast<std::size_t>(twist + kMaxTwist)];
    }

    template <class Samples>
    cplx integrate(const Samples& samples, int twist) const {
        const auto& w = weights(twist);
        if (static_cast<std::size_t>(samples.size()) != w.size())
            throw ShapeError("integrand has " + std::to_string(samples.size()) + " samples, rule has " +
                             std::to_string(w.size()));
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * samples[static_cast<Eigen::Index>(i)];
        return acc;
    }

private:
    std::vector<double> build(int twist) const {
        const double c = twist * log_h_;
        const auto q = static_cast<std::size_t>(points_);
        std::vector<double> w(q, 1.0 / points_);
        if (c == 0.0) return w;

        // Closed-form moments I_k = int_0^1 e^{(c + 2 pi i k) x} dx.
        const double ec = std::expm1(c);
        auto moment = [&](int k) { return cplx(ec, 0.0) / cplx(c, kTwoPi * k); };
        const int half = points_ / 2;
        const bool even = points_ % 2 == 0;
        const int kmax = even ? half - 1 : half;
        for (std::size_t i = 0; i < q; ++i) {
            const double x = nodes_[i];
            double s = moment(0).real();
            for (int k = 1; k <= kmax; ++k) {
                const double phase = -kTwoPi * static_cast<double>((static_cast<long>(k) * static_cast<long>(i)) % points_) / points_;
                s += 2.0 * (moment(k) * std::polar(1.0, phase)).real();
            }
            if (even) {
                const double nyquist = 0.5 * (moment(half) + moment(-half)).real();
                s += (i % 2 == 0 ? 1.0 : -1.0) * nyquist;
            }
            w[i] = std::exp(-c * x) * s / points_;
        }
        return w;
    }

    int points_ = 0;
    double log_h_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_[2 * kMaxTwist + 1];
};

struct GaussLegendre {
    std::vector<double> nodes;    // ascending, in (-1, 1)
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw UsageError("Gauss-Legendre rule needs n >= 1");
    GaussLegendre rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            // Re-evaluate the derivative at the converged node.
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        auto lo = static_cast<std::size_t>(i);
        auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

}  // namespace nonharmonic
