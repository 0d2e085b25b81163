#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace trapcalc {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [lo, hi]. Roots of P_n by Newton iteration
/// from the Chebyshev-like initial guess.
inline QuadratureRule gauss_legendre(std::size_t n, double lo, double hi) {
    if (n == 0) throw InvalidArgument("gauss_legendre: need at least one node");
    constexpr double pi = 3.14159265358979323846;
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    const double mid = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p2) /
                     static_cast<double>(k);
            }
            dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

/// Product rule for integrals over the disk |z| <= r_max in the complex plane
/// with measure dx dy / pi. Radial direction uses Gauss-Legendre in t = r^2
/// (dx dy = dt dtheta / 2), angular direction the uniform trapezoid rule.
struct DiskQuadrature {
    std::size_t radial_nodes = 200;
    std::size_t angular_nodes = 200;
    double r_max = 8.0;

    template <typename F>
    auto integrate(F&& f) const {
        using Result = decltype(f(std::complex<double>{}));
        if (radial_nodes == 0 || angular_nodes == 0 || !(r_max > 0.0))
            throw InvalidArgument("DiskQuadrature: nodes and radius must be positive");
        constexpr double pi = 3.14159265358979323846;
        const auto radial = gauss_legendre(radial_nodes, 0.0, r_max * r_max);
        const double dtheta = 2.0 * pi / static_cast<double>(angular_nodes);
        Result sum{};
        for (std::size_t i = 0; i < radial_nodes; ++i) {
            const double r = std::sqrt(radial.nodes[i]);
            Result ring{};
            for (std::size_t j = 0; j < angular_nodes; ++j) {
                const double theta = dtheta * static_cast<double>(j);
                ring += f(std::polar(r, theta));
            }
            // (1/pi) * (1/2) dt * dtheta
            sum += ring * (radial.weights[i] * dtheta / (2.0 * pi));
        }
        return sum;
    }
};

} // namespace trapcalc
