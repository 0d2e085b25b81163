#pragma once

// sp(2,R) generators, squeeze operators and generalized squeezed states
// |n, alpha, z> = D(alpha) U(z) |n>, with the closed-form moments of these
// states and the single-mode two-photon dynamics.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "coherent.hpp"
#include "fock.hpp"
#include "minimize.hpp"

namespace trapcalc {

/// Point z of the unit disk together with the operator exponent zeta,
/// z = tanh|zeta| zeta/|zeta| (z = 0 <-> zeta = 0).
class SqueezeLabel {
public:
    SqueezeLabel() = default;

    explicit SqueezeLabel(Complex z) : z_(z) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw InvalidArgument("squeeze label must be finite");
        if (!(std::abs(z) < 1.0)) throw InvalidArgument("squeeze label requires |z| < 1, got " + std::to_string(std::abs(z)));
    }

    static SqueezeLabel from_zeta(Complex zeta) {
        const double r = std::abs(zeta);
        // tanh(r)/r, with its series near zero
        const double ratio = r < 1e-4 ? 1.0 - r * r / 3.0 + 2.0 * r * r * r * r / 15.0 : std::tanh(r) / r;
        return SqueezeLabel(zeta * ratio);
    }

    Complex z() const { return z_; }

    Complex zeta() const {
        const double r = std::abs(z_);
        // atanh(r)/r
        const double ratio = r < 1e-4 ? 1.0 + r * r / 3.0 + r * r * r * r / 5.0 : std::atanh(r) / r;
        return z_ * ratio;
    }

private:
    Complex z_{};
};

struct GeneralizedSqueezedLabel {
    std::size_t n = 0;
    CoherentLabel alpha;
    SqueezeLabel z;
};

struct XiEta {
    double xi = 1.0;
    double eta = 1.0;
};

inline XiEta xi_eta(const SqueezeLabel& label) {
    const Complex z = label.z();
    const double denom = 1.0 - std::norm(z);
    return {std::norm(1.0 + z) / denom, std::norm(1.0 - z) / denom};
}

/// hbar, m, omega; the library defaults to hbar = m = omega = 1.
struct Units {
    double hbar = 1.0;
    double mass = 1.0;
    double omega = 1.0;

    double G() const { return std::sqrt(hbar / (2.0 * mass * omega)); }
};

struct MomentReport {
    double x_cl = 0.0;
    double p_cl = 0.0;
    double x2_cl = 0.0;
    double p2_cl = 0.0;
    double Ec_cl = 0.0;
    double Ep_cl = 0.0;
    double E_cl = 0.0;
    double dx2 = 0.0;
    double dp2 = 0.0;
    double uncertainty_product = 0.0;
    double mu3 = 0.0;
    double pearson_CP = 0.0;
    double pearson_CA = 0.0;
    double G = 0.0;
};

// --- trust regions -------------------------------------------------------

/// |z| limit keeping the squeezed-vacuum tail below 1e-10 (0.7 at dim 128).
inline double squeeze_trust_radius(std::size_t dim) { return std::pow(0.7, 128.0 / static_cast<double>(dim)); }

inline std::size_t squeeze_required_dim(double abs_z) {
    if (abs_z <= 0.0) return 2;
    return static_cast<std::size_t>(std::ceil(128.0 * std::log(0.7) / std::log(abs_z)));
}

inline void check_squeeze_trust(const SqueezeLabel& z, const TruncationPolicy& policy) {
    const double r = std::abs(z.z());
    if (r > squeeze_trust_radius(policy.dim) * (1.0 + 1e-12))
        throw TruncationRisk("|z| = " + std::to_string(r) + " exceeds squeeze trust radius " +
                                 std::to_string(squeeze_trust_radius(policy.dim)) + " at dim " +
                                 std::to_string(policy.dim),
                             squeeze_required_dim(r));
}

inline void check_label_trust(const GeneralizedSqueezedLabel& label, const TruncationPolicy& policy) {
    policy.validate();
    if (4 * label.n >= policy.dim)
        throw TruncationRisk("Fock index n = " + std::to_string(label.n) + " needs n < dim/4", 4 * label.n + 4);
    check_coherent_trust(label.alpha.alpha, policy);
    check_squeeze_trust(label.z, policy);
}

// --- generators and operators --------------------------------------------

struct Sp2Generators {
    OperatorMatrix K_plus;   // (a^dag)^2 / 2
    OperatorMatrix K_minus;  // a^2 / 2
    OperatorMatrix K_zero;   // a^dag a / 2 + 1/4
};

inline Sp2Generators sp2r_generators(const TruncationPolicy& policy) {
    const auto [a, a_dag] = ladder_operators(policy);
    const auto n = static_cast<Eigen::Index>(policy.dim);
    CMatrix k0 = 0.5 * number_operator(policy).entries + 0.25 * CMatrix::Identity(n, n);
    return {{0.5 * a_dag.entries * a_dag.entries, policy}, {0.5 * a.entries * a.entries, policy}, {std::move(k0), policy}};
}

/// U(z) = exp(zeta K_+ - conj(zeta) K_-).
inline OperatorMatrix squeeze_operator(const SqueezeLabel& z, const TruncationPolicy& policy) {
    policy.validate();
    check_squeeze_trust(z, policy);
    const auto g = sp2r_generators(policy);
    const Complex zeta = z.zeta();
    return operator_exponential({zeta * g.K_plus.entries - std::conj(zeta) * g.K_minus.entries, policy});
}

/// U(z)|0> from its series (1 - |z|^2)^{1/4} sum_m z^m sqrt((2m)!)/(2^m m!) |2m>,
/// evaluated without any matrix exponential.
inline CVector squeezed_vacuum_coefficients(const SqueezeLabel& z, std::size_t dim) {
    CVector c = CVector::Zero(static_cast<Eigen::Index>(dim));
    const Complex zz = z.z();
    Complex amp = std::pow(1.0 - std::norm(zz), 0.25);
    for (std::size_t m = 0; 2 * m < dim; ++m) {
        if (m > 0) amp *= zz * std::sqrt((2.0 * m - 1.0) / (2.0 * m));
        c(static_cast<Eigen::Index>(2 * m)) = amp;
    }
    return c;
}

/// D(alpha) U(z) |n>.
inline FockVector generalized_squeezed_state(const GeneralizedSqueezedLabel& label, const TruncationPolicy& policy) {
    check_label_trust(label, policy);
    FockVector psi = number_state(label.n, policy);
    if (label.z.z() != Complex{0.0}) psi = squeeze_operator(label.z, policy).apply(psi);
    if (label.alpha.alpha != Complex{0.0}) psi = displacement_operator(label.alpha, policy).apply(psi);
    if (!psi.converged())
        throw TruncationRisk("generalized squeezed state tail mass " + std::to_string(psi.tail_mass()) +
                                 " exceeds tail_tol",
                             2 * policy.dim);
    return psi;
}

using OperatorMap = std::map<std::string, OperatorMatrix>;

/// Closed forms of U(-z) D(-alpha) A D(alpha) U(z) for A in
/// {a, a_dag, K_plus, K_minus, K_zero}.
inline OperatorMap transformed_generators(const GeneralizedSqueezedLabel& label, const TruncationPolicy& policy) {
    check_label_trust(label, policy);
    const auto [a, a_dag] = ladder_operators(policy);
    const auto g = sp2r_generators(policy);
    const Complex z = label.z.z();
    const Complex zb = std::conj(z);
    const Complex al = label.alpha.alpha;
    const Complex alb = std::conj(al);
    const double d = 1.0 - std::norm(z);
    const double s = 1.0 / std::sqrt(d);
    const auto n = static_cast<Eigen::Index>(policy.dim);
    const CMatrix id = CMatrix::Identity(n, n);

    const CMatrix lin = s * (a.entries + z * a_dag.entries);       // U(-z) a U(z)
    const CMatrix lin_dag = s * (a_dag.entries + zb * a.entries);  // U(-z) a^dag U(z)
    const auto &kp = g.K_plus.entries, &km = g.K_minus.entries, &k0 = g.K_zero.entries;

    OperatorMap out;
    out.emplace("a", OperatorMatrix{lin + al * id, policy});
    out.emplace("a_dag", OperatorMatrix{lin_dag + alb * id, policy});
    out.emplace("K_plus", OperatorMatrix{(kp + 2.0 * zb * k0 + zb * zb * km) / d + alb * lin_dag + 0.5 * alb * alb * id, policy});
    out.emplace("K_minus", OperatorMatrix{(km + 2.0 * z * k0 + z * z * kp) / d + al * lin + 0.5 * al * al * id, policy});
    out.emplace("K_zero", OperatorMatrix{(zb * km + (1.0 + std::norm(z)) * k0 + z * kp) / d + 0.5 * al * lin_dag +
                                             0.5 * alb * lin + 0.5 * std::norm(al) * id,
                                         policy});
    return out;
}

/// The same five operators by explicit conjugation with the D and U matrices.
inline OperatorMap conjugated_generators(const GeneralizedSqueezedLabel& label, const TruncationPolicy& policy) {
    check_label_trust(label, policy);
    const auto [a, a_dag] = ladder_operators(policy);
    const auto g = sp2r_generators(policy);
    const CMatrix w = displacement_operator(label.alpha, policy).entries * squeeze_operator(label.z, policy).entries;
    const CMatrix w_inv = w.adjoint();
    OperatorMap out;
    out.emplace("a", OperatorMatrix{w_inv * a.entries * w, policy});
    out.emplace("a_dag", OperatorMatrix{w_inv * a_dag.entries * w, policy});
    out.emplace("K_plus", OperatorMatrix{w_inv * g.K_plus.entries * w, policy});
    out.emplace("K_minus", OperatorMatrix{w_inv * g.K_minus.entries * w, policy});
    out.emplace("K_zero", OperatorMatrix{w_inv * g.K_zero.entries * w, policy});
    return out;
}

using ExpectationMap = std::map<std::string, Complex>;

/// Closed-form <n, alpha, z| A |n, alpha, z> for the five generators.
inline ExpectationMap expectation_generators(const GeneralizedSqueezedLabel& label) {
    const Complex z = label.z.z();
    const Complex al = label.alpha.alpha;
    const double d = 1.0 - std::norm(z);
    const double nh = static_cast<double>(label.n) + 0.5;
    return {
        {"a", al},
        {"a_dag", std::conj(al)},
        {"K_zero", 0.5 * nh * (1.0 + std::norm(z)) / d + 0.5 * std::norm(al)},
        {"K_plus", 0.5 * nh * 2.0 * std::conj(z) / d + 0.5 * std::conj(al * al)},
        {"K_minus", 0.5 * nh * 2.0 * z / d + 0.5 * al * al},
    };
}

/// Matrix expectations of the five generators on the constructed state.
inline ExpectationMap oracle_expectation_generators(const GeneralizedSqueezedLabel& label,
                                                    const TruncationPolicy& policy) {
    const FockVector psi = generalized_squeezed_state(label, policy);
    const auto [a, a_dag] = ladder_operators(policy);
    const auto g = sp2r_generators(policy);
    return {
        {"a", expectation(psi, a)},
        {"a_dag", expectation(psi, a_dag)},
        {"K_zero", expectation(psi, g.K_zero)},
        {"K_plus", expectation(psi, g.K_plus)},
        {"K_minus", expectation(psi, g.K_minus)},
    };
}

// --- moments -------------------------------------------------------------

/// Closed-form moments. The kinetic energy carries eta and the potential
/// energy carries xi, as follows from E_c = p^2/2m and E_p = m omega^2 x^2/2.
/// mu_k is defined as (x^k)_cl - (x_cl)^k; mu3 = 6 u G^3 (2n+1) xi and
/// C_P = 36 u^2 / ((2n+1) xi). The flatness C_A has no closed form and is NaN
/// here; see oracle_moments.
inline MomentReport classical_moments(const GeneralizedSqueezedLabel& label, const Units& units = {}) {
    const auto [xi, eta] = xi_eta(label.z);
    const double u = label.alpha.u();
    const double v = label.alpha.v();
    const double nh = static_cast<double>(label.n) + 0.5;
    const double zz = std::norm(label.z.z());
    const double hbar = units.hbar;
    const double hw = units.hbar * units.omega;
    const double G = units.G();

    MomentReport r;
    r.G = G;
    r.x_cl = 2.0 * G * u;
    r.p_cl = std::sqrt(2.0 * units.mass * hw) * v;
    r.x2_cl = hbar / (units.mass * units.omega) * (nh * xi + 2.0 * u * u);
    r.p2_cl = units.mass * hw * (nh * eta + 2.0 * v * v);
    r.Ec_cl = 0.5 * hw * (nh * eta + 2.0 * v * v);
    r.Ep_cl = 0.5 * hw * (nh * xi + 2.0 * u * u);
    r.E_cl = hw * (nh * (1.0 + zz) / (1.0 - zz) + u * u + v * v);
    r.dx2 = hbar / (units.mass * units.omega) * nh * xi;
    r.dp2 = units.mass * hw * nh * eta;
    r.uncertainty_product = hbar * nh * std::sqrt(xi * eta);
    r.mu3 = 6.0 * u * G * G * G * (2.0 * nh) * xi;
    r.pearson_CP = 36.0 * u * u / ((2.0 * nh) * xi);
    r.pearson_CA = std::nan("");
    return r;
}

/// Moment formulas exactly as they are usually printed: E_c with xi, E_p
/// with eta, mu3 = 6 u G^2 (2n+1) xi, C_P = 36 u^2 / (G^2 (2n+1) xi). Kept for
/// side-by-side comparison; they disagree with the operator algebra whenever
/// Re z != 0 (energies) or G != 1 (mu3, C_P).
struct PrintedMoments {
    double Ec_cl = 0.0;
    double Ep_cl = 0.0;
    double mu3 = 0.0;
    double pearson_CP = 0.0;
};

inline PrintedMoments printed_moments(const GeneralizedSqueezedLabel& label, const Units& units = {}) {
    const auto [xi, eta] = xi_eta(label.z);
    const double u = label.alpha.u();
    const double v = label.alpha.v();
    const double nh = static_cast<double>(label.n) + 0.5;
    const double hw = units.hbar * units.omega;
    const double G = units.G();
    return {0.5 * hw * (nh * xi + 2.0 * v * v), 0.5 * hw * (nh * eta + 2.0 * u * u),
            6.0 * u * G * G * (2.0 * nh) * xi, 36.0 * u * u / (G * G * (2.0 * nh) * xi)};
}

struct QuadratureOperators {
    CMatrix x;
    CMatrix p;
};

/// x = G (a + a^dag), p = sqrt(m hbar omega / 2) i (a^dag - a).
inline QuadratureOperators quadrature_operators(const TruncationPolicy& policy, const Units& units = {}) {
    const auto [a, a_dag] = ladder_operators(policy);
    const double pscale = std::sqrt(units.mass * units.hbar * units.omega / 2.0);
    return {units.G() * (a.entries + a_dag.entries), pscale * kI * (a_dag.entries - a.entries)};
}

/// Every MomentReport field from matrix expectations on D(alpha) U(z)|n>.
inline MomentReport oracle_moments(const GeneralizedSqueezedLabel& label, const Units& units,
                                   const TruncationPolicy& policy) {
    const FockVector psi = generalized_squeezed_state(label, policy);
    const auto q = quadrature_operators(policy, units);
    const CVector& c = psi.coeffs;
    const CVector xc = q.x * c;
    const CVector x2c = q.x * xc;
    const CVector x3c = q.x * x2c;
    const CVector x4c = q.x * x3c;
    const CVector pc = q.p * c;
    const CVector p2c = q.p * pc;

    MomentReport r;
    r.G = units.G();
    r.x_cl = c.dot(xc).real();
    r.p_cl = c.dot(pc).real();
    r.x2_cl = c.dot(x2c).real();
    r.p2_cl = c.dot(p2c).real();
    r.Ec_cl = r.p2_cl / (2.0 * units.mass);
    r.Ep_cl = 0.5 * units.mass * units.omega * units.omega * r.x2_cl;
    r.E_cl = r.Ec_cl + r.Ep_cl;
    r.dx2 = r.x2_cl - r.x_cl * r.x_cl;
    r.dp2 = r.p2_cl - r.p_cl * r.p_cl;
    r.uncertainty_product = std::sqrt(r.dx2 * r.dp2);
    const double x3 = c.dot(x3c).real();
    const double x4 = c.dot(x4c).real();
    r.mu3 = x3 - r.x_cl * r.x_cl * r.x_cl;
    const double mu4 = x4 - r.x_cl * r.x_cl * r.x_cl * r.x_cl;
    r.pearson_CP = r.mu3 * r.mu3 / (r.dx2 * r.dx2 * r.dx2);
    r.pearson_CA = mu4 / (r.dx2 * r.dx2);
    return r;
}

// --- two-photon dynamics -------------------------------------------------

/// H = hbar omega (a^dag a + 1/2) + f2 (a^dag)^2 + conj(f2) a^2 + f1 a^dag + conj(f1) a.
inline OperatorMatrix two_photon_hamiltonian(double omega, Complex f2, Complex f1, const TruncationPolicy& policy,
                                             double hbar = 1.0) {
    const auto [a, a_dag] = ladder_operators(policy);
    const auto n = static_cast<Eigen::Index>(policy.dim);
    CMatrix h = hbar * omega * (number_operator(policy).entries + 0.5 * CMatrix::Identity(n, n));
    h += f2 * a_dag.entries * a_dag.entries + std::conj(f2) * a.entries * a.entries;
    h += f1 * a_dag.entries + std::conj(f1) * a.entries;
    return {std::move(h), policy};
}

enum class StateFamily { coherent, pure_squeezed, general_squeezed };

inline const char* to_string(StateFamily f) {
    switch (f) {
        case StateFamily::coherent: return "coherent";
        case StateFamily::pure_squeezed: return "pure-squeezed";
        case StateFamily::general_squeezed: return "general-squeezed";
    }
    return "?";
}

/// Family member D(alpha) U(z)|0> with the components the family does not
/// use ignored: coherent -> |alpha>, pure-squeezed -> U(z)|0>.
inline FockVector family_state(StateFamily family, Complex alpha, const SqueezeLabel& z,
                               const TruncationPolicy& policy) {
    switch (family) {
        case StateFamily::coherent: return {coherent_coefficients(alpha, policy.dim), policy};
        case StateFamily::pure_squeezed: return {squeezed_vacuum_coefficients(z, policy.dim), policy};
        case StateFamily::general_squeezed: {
            const auto [a, a_dag] = ladder_operators(policy);
            const CMatrix d = (alpha * a_dag.entries - std::conj(alpha) * a.entries).exp();
            return {d * squeezed_vacuum_coefficients(z, policy.dim), policy};
        }
    }
    throw InvalidArgument("unknown state family");
}

struct ClosureResult {
    FockVector final_state;
    StateFamily family = StateFamily::coherent;
    Complex alpha{};  // fitted displacement (coherent and general families)
    SqueezeLabel z;   // fitted squeeze (pure and general families)
    double infidelity = 1.0;
};

/// Label estimate from first and second moments: alpha = <a> and
/// z/(1 - |z|^2) = <a^2> - <a>^2.
inline std::pair<Complex, SqueezeLabel> moment_seed(const FockVector& psi) {
    const auto [a, a_dag] = ladder_operators(psi.policy);
    const Complex mean = expectation(psi, a);
    const Complex second = psi.coeffs.dot(a.entries * (a.entries * psi.coeffs));
    const Complex w = second - mean * mean;
    const double aw = std::abs(w);
    Complex z = 0.0;
    if (aw > 0.0) z = w / aw * ((std::sqrt(1.0 + 4.0 * aw * aw) - 1.0) / (2.0 * aw));
    return {mean, SqueezeLabel(z)};
}

/// Best fit of psi within a family by Nelder-Mead on the infidelity, seeded
/// from moment_seed. The squeeze is parameterized through zeta so every trial
/// point stays inside the unit disk.
inline ClosureResult fit_family(const FockVector& psi, StateFamily family) {
    const auto [alpha0, z0] = moment_seed(psi);
    const Complex zeta0 = z0.zeta();
    auto unpack = [&](const std::vector<double>& x) -> std::pair<Complex, SqueezeLabel> {
        switch (family) {
            case StateFamily::coherent: return {{x[0], x[1]}, SqueezeLabel{}};
            case StateFamily::pure_squeezed: return {0.0, SqueezeLabel::from_zeta({x[0], x[1]})};
            case StateFamily::general_squeezed: return {{x[0], x[1]}, SqueezeLabel::from_zeta({x[2], x[3]})};
        }
        return {};
    };
    std::vector<double> x0;
    switch (family) {
        case StateFamily::coherent: x0 = {alpha0.real(), alpha0.imag()}; break;
        case StateFamily::pure_squeezed: x0 = {zeta0.real(), zeta0.imag()}; break;
        case StateFamily::general_squeezed: x0 = {alpha0.real(), alpha0.imag(), zeta0.real(), zeta0.imag()}; break;
    }
    auto objective = [&](const std::vector<double>& x) {
        const auto [al, z] = unpack(x);
        return 1.0 - fidelity(family_state(family, al, z, psi.policy), psi);
    };
    NelderMeadOptions opt;
    opt.initial_step = 1e-3;
    opt.f_tol = 1e-15;
    opt.max_evals = family == StateFamily::general_squeezed ? 600 : 300;
    const auto best = nelder_mead(objective, x0, opt);
    const auto [al, z] = unpack(best.x);
    return {psi, family, al, z, std::max(0.0, best.f)};
}

/// Evolves |psi0> (a member of the family with the given labels) under the
/// time-independent H for t_final with fixed steps exp(-i H dt / hbar),
/// ||H|| dt <= 0.1 (or finer if steps asks for it), then fits the result
/// back to the family.
inline ClosureResult closure_evolve(const OperatorMatrix& h, StateFamily family, Complex alpha0,
                                    const SqueezeLabel& z0, double t_final, long steps = 1, double hbar = 1.0) {
    const TruncationPolicy& policy = h.policy;
    check_coherent_trust(alpha0, policy);
    check_squeeze_trust(z0, policy);
    const FockVector psi0 = family_state(family, alpha0, z0, policy);
    const double hnorm = h.entries.cwiseAbs().colwise().sum().maxCoeff() / hbar;
    const long needed = static_cast<long>(std::ceil(std::abs(t_final) * hnorm / 0.1));
    const long n = std::max({1L, steps, needed});
    const double dt = t_final / static_cast<double>(n);
    const CMatrix step = CMatrix(-kI * (dt / hbar) * h.entries).exp();
    CVector c = psi0.coeffs;
    for (long k = 0; k < n; ++k) c = step * c;
    FockVector psi{std::move(c), policy};
    if (!psi.converged())
        throw TruncationRisk("closure_evolve: evolved state leaked into the top of the basis", 2 * policy.dim);
    return fit_family(psi, family);
}

} // namespace trapcalc
