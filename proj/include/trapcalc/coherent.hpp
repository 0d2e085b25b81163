#pragma once

// Glauber coherent states, the Bargmann-Fock representation and Husimi Q.

#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "fock.hpp"
#include "quadrature.hpp"
#include "util.hpp"

namespace trapcalc {

/// Glauber amplitude alpha = u + i v.
struct CoherentLabel {
    Complex alpha{};

    CoherentLabel() = default;
    CoherentLabel(Complex a) : alpha(a) {  // NOLINT(google-explicit-constructor)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw InvalidArgument("coherent label must be finite");
    }
    CoherentLabel(double a) : CoherentLabel(Complex(a)) {}  // NOLINT(google-explicit-constructor)

    double u() const { return alpha.real(); }
    double v() const { return alpha.imag(); }
};

/// Largest |alpha| for which a displaced state is trusted at this basis size.
inline double coherent_trust_radius(std::size_t dim) { return 0.25 * std::sqrt(static_cast<double>(dim)); }

inline std::size_t coherent_required_dim(double abs_alpha) {
    return static_cast<std::size_t>(std::ceil(16.0 * abs_alpha * abs_alpha));
}

inline void check_coherent_trust(Complex alpha, const TruncationPolicy& policy) {
    const double r = std::abs(alpha);
    if (r > coherent_trust_radius(policy.dim) * (1.0 + 1e-12))
        throw TruncationRisk("|alpha| = " + std::to_string(r) + " exceeds trust radius " +
                                 std::to_string(coherent_trust_radius(policy.dim)) + " at dim " +
                                 std::to_string(policy.dim),
                             coherent_required_dim(r));
}

/// D(alpha) = exp(alpha a^dag - conj(alpha) a).
inline OperatorMatrix displacement_operator(const CoherentLabel& label, const TruncationPolicy& policy) {
    policy.validate();
    check_coherent_trust(label.alpha, policy);
    const auto [a, a_dag] = ladder_operators(policy);
    return operator_exponential({label.alpha * a_dag.entries - std::conj(label.alpha) * a.entries, policy});
}

/// Fock coefficients exp(-|alpha|^2/2) alpha^k / sqrt(k!) for k < count,
/// without any trust-region check.
inline CVector coherent_coefficients(Complex alpha, std::size_t count) {
    CVector c(static_cast<Eigen::Index>(count));
    if (count == 0) return c;
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (Eigen::Index k = 1; k < c.size(); ++k) c(k) = c(k - 1) * alpha / std::sqrt(static_cast<double>(k));
    return c;
}

inline FockVector coherent_state(const CoherentLabel& label, const TruncationPolicy& policy) {
    policy.validate();
    check_coherent_trust(label.alpha, policy);
    return {coherent_coefficients(label.alpha, policy.dim), policy};
}

/// <alpha|beta> = exp(conj(alpha) beta - |alpha|^2/2 - |beta|^2/2)
inline Complex overlap(const CoherentLabel& alpha, const CoherentLabel& beta) {
    const Complex a = alpha.alpha;
    const Complex b = beta.alpha;
    return std::exp(std::conj(a) * b - 0.5 * std::norm(a) - 0.5 * std::norm(b));
}

/// Probability that the number state |n> lies inside |alpha| <= r under the
/// coherent-state measure: 1 - exp(-r^2) sum_{k<=n} r^{2k}/k!.
inline double disk_capture(std::size_t n, double r) {
    const double t = r * r;
    double term = std::exp(-t);
    double partial = term;
    for (std::size_t k = 1; k <= n; ++k) {
        term *= t / static_cast<double>(k);
        partial += term;
    }
    return 1.0 - partial;
}

struct IdentityResolution {
    CMatrix block;  // (1/pi) integral |alpha><alpha| restricted to |n>, n <= n_keep
    std::size_t n_keep = 0;
    double residual = 0.0;  // max |block - I|
};

/// Evaluates (1/pi) int_{|alpha| <= r_max} |alpha><alpha| d^2 alpha on the
/// number states the disk captures to 1 - 1e-8, and compares with the
/// identity there. Only the retained block is formed, from the exact
/// coefficient formula, so r_max is not tied to the truncation trust radius.
inline IdentityResolution identity_resolution_check(const TruncationPolicy& policy, std::size_t radial_nodes,
                                                    std::size_t angular_nodes, double r_max,
                                                    double tolerance = 1e-6) {
    policy.validate();
    if (radial_nodes == 0 || angular_nodes == 0 || !(r_max > 0.0))
        throw InvalidArgument("identity_resolution_check: nodes and radius must be positive");
    std::size_t n_keep = 0;
    while (n_keep + 1 < policy.dim && disk_capture(n_keep + 1, r_max) >= 1.0 - 1e-8) ++n_keep;
    if (disk_capture(0, r_max) < 1.0 - 1e-8)
        throw QuadratureFailure("identity_resolution_check: disk too small to capture the vacuum",
                                1.0 - disk_capture(0, r_max));

    const std::size_t m = n_keep + 1;
    const auto radial = gauss_legendre(radial_nodes, 0.0, r_max * r_max);
    const double dtheta = 2.0 * kPi / static_cast<double>(angular_nodes);
    CMatrix block = CMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < radial_nodes; ++i) {
        const double r = std::sqrt(radial.nodes[i]);
        const double w = radial.weights[i] * dtheta / (2.0 * kPi);
        for (std::size_t j = 0; j < angular_nodes; ++j) {
            const CVector c = coherent_coefficients(std::polar(r, dtheta * static_cast<double>(j)), m);
            block.noalias() += w * (c * c.adjoint());
        }
    }
    IdentityResolution out{std::move(block), n_keep, 0.0};
    out.residual = (out.block - CMatrix::Identity(out.block.rows(), out.block.cols())).cwiseAbs().maxCoeff();
    if (!(out.residual <= tolerance))
        throw QuadratureFailure("identity_resolution_check: quadrature did not resolve the identity", out.residual);
    return out;
}

/// Largest |z| at which the Bargmann series of a vector truncated at dim is
/// evaluated.
inline double bargmann_radius(std::size_t dim) { return 0.5 * std::sqrt(static_cast<double>(dim)); }

/// Psi(z) = sum_n c_n z^n / sqrt(n!) at a single point (no range check).
inline Complex bargmann_value(const CVector& c, Complex z) {
    Complex sum = 0.0;
    Complex u = 1.0;  // u_n(z)
    for (Eigen::Index n = 0; n < c.size(); ++n) {
        if (n > 0) u *= z / std::sqrt(static_cast<double>(n));
        sum += c(n) * u;
    }
    return sum;
}

inline std::vector<Complex> bargmann_transform(const FockVector& psi, const std::vector<Complex>& zgrid) {
    const double rmax = bargmann_radius(psi.dim());
    std::vector<Complex> out;
    out.reserve(zgrid.size());
    for (const Complex z : zgrid) {
        if (std::abs(z) > rmax)
            throw TruncationRisk("bargmann_transform: |z| = " + std::to_string(std::abs(z)) +
                                     " beyond series radius " + std::to_string(rmax),
                                 static_cast<std::size_t>(std::ceil(4.0 * std::norm(z))));
        out.push_back(bargmann_value(psi.coeffs, z));
    }
    return out;
}

/// Cauchy-Schwarz bound on the part of Psi(z) carried by the top 10% of the
/// basis: sqrt(tail mass * sum_{n >= tail_start} |z|^{2n}/n!).
inline double bargmann_remainder_bound(const FockVector& psi, Complex z) {
    const double t = std::norm(z);
    double log_term = 0.0;  // log(t^n / n!)
    double sum = 0.0;
    const std::size_t start = psi.policy.tail_start();
    for (std::size_t n = 1; n < start + 400; ++n) {
        log_term += std::log(t) - std::log(static_cast<double>(n));
        if (n >= start) {
            const double term = std::exp(log_term);
            sum += term;
            if (term < 1e-20 * sum) break;
        }
    }
    return std::sqrt(psi.tail_mass() * sum);
}

/// (Psi_1, Psi_2) = int exp(-|z|^2) conj(Psi_1) Psi_2 dx dy / pi over the
/// quadrature disk. The same pass integrates both squared norms; if either
/// misses the Fock norm by more than 1e-7 the quadrature is rejected.
inline Complex bargmann_inner_product(const FockVector& psi1, const FockVector& psi2, const DiskQuadrature& quad) {
    if (psi1.dim() != psi2.dim()) throw ShapeError("bargmann_inner_product: dimension mismatch");
    if (quad.radial_nodes == 0 || quad.angular_nodes == 0 || !(quad.r_max > 0.0))
        throw InvalidArgument("bargmann_inner_product: invalid quadrature");
    const auto radial = gauss_legendre(quad.radial_nodes, 0.0, quad.r_max * quad.r_max);
    const double dtheta = 2.0 * kPi / static_cast<double>(quad.angular_nodes);
    Complex cross = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;
    for (std::size_t i = 0; i < quad.radial_nodes; ++i) {
        const double r = std::sqrt(radial.nodes[i]);
        const double w = radial.weights[i] * dtheta / (2.0 * kPi) * std::exp(-r * r);
        for (std::size_t j = 0; j < quad.angular_nodes; ++j) {
            const Complex z = std::polar(r, dtheta * static_cast<double>(j));
            const Complex f1 = bargmann_value(psi1.coeffs, z);
            const Complex f2 = bargmann_value(psi2.coeffs, z);
            cross += w * std::conj(f1) * f2;
            n1 += w * std::norm(f1);
            n2 += w * std::norm(f2);
        }
    }
    const double residual =
        std::max(std::abs(n1 - psi1.coeffs.squaredNorm()), std::abs(n2 - psi2.coeffs.squaredNorm()));
    if (!(residual <= 1e-7))
        throw QuadratureFailure("bargmann_inner_product: quadrature does not reproduce the norms", residual);
    return cross;
}

/// Uniform rectangular grid in the complex plane, real part varying fastest.
struct ComplexGrid {
    double re_min = -3.0;
    double re_max = 3.0;
    double im_min = -3.0;
    double im_max = 3.0;
    std::size_t n_re = 61;
    std::size_t n_im = 61;

    double re_step() const { return n_re > 1 ? (re_max - re_min) / static_cast<double>(n_re - 1) : 0.0; }
    double im_step() const { return n_im > 1 ? (im_max - im_min) / static_cast<double>(n_im - 1) : 0.0; }
    std::size_t size() const { return n_re * n_im; }

    Complex point(std::size_t k) const {
        const std::size_t i = k % n_re;
        const std::size_t j = k / n_re;
        return {re_min + re_step() * static_cast<double>(i), im_min + im_step() * static_cast<double>(j)};
    }
};

struct GridField {
    ComplexGrid grid;
    std::vector<double> values;

    /// Riemann sum with the grid cell area.
    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.re_step() * grid.im_step();
    }

    void write_csv(std::ostream& os) const {
        os << "re_alpha,im_alpha,value\n";
        for (std::size_t k = 0; k < values.size(); ++k) {
            const Complex p = grid.point(k);
            os << format_real(p.real()) << ',' << format_real(p.imag()) << ',' << format_real(values[k]) << '\n';
        }
    }
};

/// Husimi function Q(alpha) = |<alpha|psi>|^2 / pi. Normalized so that it
/// integrates to one over the plane.
inline GridField husimi_q(const FockVector& psi, const ComplexGrid& grid) {
    if (grid.n_re == 0 || grid.n_im == 0) throw InvalidArgument("husimi_q: empty grid");
    const double rmax = coherent_trust_radius(psi.dim()) * 2.0;
    GridField out{grid, std::vector<double>(grid.size())};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Complex alpha = grid.point(k);
        if (std::abs(alpha) > rmax)
            throw TruncationRisk("husimi_q: grid point outside trusted region",
                                 static_cast<std::size_t>(std::ceil(4.0 * std::norm(alpha))));
        // <alpha|psi> = exp(-|alpha|^2/2) Psi(conj(alpha))
        const Complex amp = std::exp(-0.5 * std::norm(alpha)) * bargmann_value(psi.coeffs, std::conj(alpha));
        out.values[k] = std::norm(amp) / kPi;
    }
    return out;
}

} // namespace trapcalc
