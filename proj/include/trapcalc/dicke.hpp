#pragma once

// N two-level ions coupled to one field mode in the rotating-wave form, and
// the classically driven field oscillator.
//
// Level convention per ion: basis index 0 is the upper level, index 1 the
// lower one, sigma_plus = [[0,1],[0,0]], sigma_z = diag(1/2, -1/2). The field
// is the slowest tensor index, then ion 0, ion 1, ...

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "coherent.hpp"
#include "fock.hpp"
#include "util.hpp"

namespace trapcalc {

inline constexpr std::size_t kMaxDickeDim = 4096;

struct DickeConfig {
    std::size_t N = 1;
    double omega = 1.0;
    double epsilon = 1.0;
    Complex lambda{0.0, 0.0};
    std::size_t field_dim = 16;
    double hbar = 1.0;

    std::size_t spin_dim() const { return std::size_t{1} << N; }
    std::size_t total_dim() const { return field_dim * spin_dim(); }

    void validate() const {
        if (N < 1 || N > 10) throw InvalidArgument("dicke: N must be between 1 and 10");
        if (field_dim < 2) throw InvalidPolicy("dicke: field_dim must be >= 2");
        if (total_dim() > kMaxDickeDim)
            throw InvalidPolicy("dicke: total dimension " + std::to_string(total_dim()) + " exceeds " +
                                std::to_string(kMaxDickeDim));
        if (!std::isfinite(omega) || !std::isfinite(epsilon) || !std::isfinite(lambda.real()) ||
            !std::isfinite(lambda.imag()) || !(hbar > 0.0))
            throw InvalidArgument("dicke: parameters must be finite, hbar positive");
    }
};

namespace detail {

inline CMatrix kron(const CMatrix& x, const CMatrix& y) {
    CMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
}

/// field (x) ion_0 (x) ... with `single` acting on ion k and identities elsewhere.
inline CMatrix embed_ion(const CMatrix& single, std::size_t k, const DickeConfig& c) {
    CMatrix out = CMatrix::Identity(static_cast<Eigen::Index>(c.field_dim), static_cast<Eigen::Index>(c.field_dim));
    const CMatrix id2 = CMatrix::Identity(2, 2);
    for (std::size_t i = 0; i < c.N; ++i) out = kron(out, i == k ? single : id2);
    return out;
}

inline CMatrix embed_field(const CMatrix& single, const DickeConfig& c) {
    const auto s = static_cast<Eigen::Index>(c.spin_dim());
    return kron(single, CMatrix::Identity(s, s));
}

} // namespace detail

struct SpinOperatorSet {
    std::vector<CMatrix> sigma_plus;
    std::vector<CMatrix> sigma_minus;
    std::vector<CMatrix> sigma_z;
    CMatrix E12;  // sum of sigma_minus
    CMatrix E21;  // sum of sigma_plus
    CMatrix E22_minus_E11;
    CMatrix a;
    CMatrix a_dag;
};

inline SpinOperatorSet spin_operators(const DickeConfig& c) {
    c.validate();
    CMatrix sp = CMatrix::Zero(2, 2);
    sp(0, 1) = 1.0;
    CMatrix sz = CMatrix::Zero(2, 2);
    sz(0, 0) = 0.5;
    sz(1, 1) = -0.5;
    const auto dim = static_cast<Eigen::Index>(c.total_dim());
    SpinOperatorSet s;
    s.E12 = CMatrix::Zero(dim, dim);
    s.E21 = CMatrix::Zero(dim, dim);
    s.E22_minus_E11 = CMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < c.N; ++k) {
        s.sigma_plus.push_back(detail::embed_ion(sp, k, c));
        s.sigma_minus.push_back(s.sigma_plus.back().adjoint());
        s.sigma_z.push_back(detail::embed_ion(sz, k, c));
        s.E21 += s.sigma_plus.back();
        s.E12 += s.sigma_minus.back();
        s.E22_minus_E11 += 2.0 * s.sigma_z.back();
    }
    const auto lad = ladder_operators({c.field_dim, 1e-10, 1e-10});
    s.a = detail::embed_field(lad.a.entries, c);
    s.a_dag = s.a.adjoint();
    return s;
}

/// H = hbar omega a^dag a + (epsilon/2)(E22 - E11) + (lambda a^dag E12 + conj(lambda) a E21) / sqrt(N).
inline OperatorMatrix dicke_hamiltonian(const DickeConfig& c) {
    const auto s = spin_operators(c);
    const double inv = 1.0 / std::sqrt(static_cast<double>(c.N));
    CMatrix h = (c.hbar * c.omega) * (s.a_dag * s.a) + (0.5 * c.epsilon) * s.E22_minus_E11 +
                (inv * c.lambda) * (s.a_dag * s.E12) + (inv * std::conj(c.lambda)) * (s.a * s.E21);
    return {std::move(h), {c.total_dim(), 1e-10, 1e-10}};
}

/// a^dag a + sum sigma_z + N/2: photons plus excited ions.
inline OperatorMatrix excitation_operator(const DickeConfig& c) {
    const auto s = spin_operators(c);
    const auto dim = static_cast<Eigen::Index>(c.total_dim());
    CMatrix x = s.a_dag * s.a + 0.5 * static_cast<double>(c.N) * CMatrix::Identity(dim, dim);
    for (const auto& z : s.sigma_z) x += z;
    return {std::move(x), {c.total_dim(), 1e-10, 1e-10}};
}

/// Product state |alpha> (x) ions; the first `excited` ions are in the upper level.
inline CVector dicke_product_state(const DickeConfig& c, Complex alpha, std::size_t excited = 0) {
    c.validate();
    if (excited > c.N) throw InvalidArgument("dicke: more excited ions than ions");
    const TruncationPolicy fp{c.field_dim, 1e-10, 1e-10};
    check_coherent_trust(alpha, fp);
    const CVector field = coherent_coefficients(alpha, c.field_dim).normalized();
    std::size_t spin = 0;  // bit set -> lower level; ion 0 is the most significant bit
    for (std::size_t k = excited; k < c.N; ++k) spin |= std::size_t{1} << (c.N - 1 - k);
    CVector psi = CVector::Zero(static_cast<Eigen::Index>(c.total_dim()));
    for (std::size_t n = 0; n < c.field_dim; ++n)
        psi(static_cast<Eigen::Index>(n * c.spin_dim() + spin)) = field(static_cast<Eigen::Index>(n));
    return psi;
}

// --- semiclassical field ---------------------------------------------------

using Drive = std::function<Complex(double)>;

/// H(t) = hbar omega a^dag a + lambda(t) a^dag + conj(lambda(t)) a, additive
/// constant dropped.
inline std::function<OperatorMatrix(double)> semiclassical_field_hamiltonian(double omega_k, Drive lambda_t,
                                                                             const TruncationPolicy& policy,
                                                                             double hbar = 1.0) {
    policy.validate();
    const auto lad = ladder_operators(policy);
    const CMatrix n = lad.a_dag.entries * lad.a.entries;
    return [=](double t) {
        const Complex l = lambda_t(t);
        CMatrix h = (hbar * omega_k) * n + l * lad.a_dag.entries + std::conj(l) * lad.a.entries;
        return OperatorMatrix{std::move(h), policy};
    };
}

struct TrajectoryPoint {
    double t = 0.0;
    Complex alpha;
    double infidelity = 0.0;
};

struct DrivenCoherence {
    std::vector<TrajectoryPoint> trajectory;  // one point per step, t = 0 included
    double max_infidelity = 0.0;
    FockVector final_state;
};

/// Classical label flow i alpha' = omega alpha + lambda(t)/hbar, RK4 with
/// `substeps` steps per interval.
inline Complex propagate_label(double omega, const Drive& lambda_t, Complex alpha, double t0, double t1, double hbar,
                               int substeps = 8) {
    const double h = (t1 - t0) / substeps;
    auto rhs = [&](double t, Complex a) { return -kI * (omega * a + lambda_t(t) / hbar); };
    for (int k = 0; k < substeps; ++k) {
        const double t = t0 + h * k;
        const Complex k1 = rhs(t, alpha);
        const Complex k2 = rhs(t + 0.5 * h, alpha + 0.5 * h * k1);
        const Complex k3 = rhs(t + 0.5 * h, alpha + 0.5 * h * k2);
        const Complex k4 = rhs(t + h, alpha + h * k3);
        alpha += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return alpha;
}

/// Evolves |alpha0> under the driven field Hamiltonian (fourth-order Magnus,
/// `steps` steps) next to the classical label, recording the infidelity with
/// the coherent state at the classical label after every step.
inline DrivenCoherence driven_coherence_check(double omega, const Drive& lambda_t, Complex alpha0, double t_final,
                                              long steps, const TruncationPolicy& policy = {}, double hbar = 1.0) {
    policy.validate();
    if (steps < 1) throw InvalidArgument("driven_coherence_check: steps must be >= 1");
    check_coherent_trust(alpha0, policy);
    const auto hfac = semiclassical_field_hamiltonian(omega, lambda_t, policy, hbar);
    const std::function<CMatrix(double)> h_of_t = [&](double t) { return CMatrix(hfac(t).entries / hbar); };

    DrivenCoherence out;
    FockVector psi = coherent_state(alpha0, policy);
    Complex alpha = alpha0;
    out.trajectory.push_back({0.0, alpha, 0.0});
    const double dt = t_final / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) {
        const double t = dt * static_cast<double>(k);
        psi = evolve_time_dependent(h_of_t, psi, t, t + dt, 1);
        alpha = propagate_label(omega, lambda_t, alpha, t, t + dt, hbar);
        if (std::abs(alpha) > coherent_trust_radius(policy.dim) || !psi.converged())
            throw TruncationRisk("driven evolution leaves the truncation trust region at t = " + format_real(t + dt),
                                 std::max(coherent_required_dim(std::abs(alpha)), 2 * policy.dim));
        const double inf = std::max(0.0, 1.0 - fidelity(psi, coherent_state(alpha, policy)));
        out.trajectory.push_back({t + dt, alpha, inf});
        out.max_infidelity = std::max(out.max_infidelity, inf);
    }
    out.final_state = std::move(psi);
    return out;
}

inline std::string trajectory_csv(const std::vector<TrajectoryPoint>& points) {
    std::string out = "t,re_alpha,im_alpha,infidelity\n";
    for (const auto& p : points)
        out += format_real(p.t) + "," + format_real(p.alpha.real()) + "," + format_real(p.alpha.imag()) + "," +
               format_real(p.infidelity) + "\n";
    return out;
}

/// Drive profiles by name:
///   zero | const:re[,im] | sin:amp[,freq] | cos:amp[,freq]
///   | gauss:amp,t0,width[,freq] | chirp:amp,rate[,freq]
/// freq defaults to omega; gauss is amp exp(-(t-t0)^2/(2 width^2)) cos(freq t),
/// chirp is amp sin(freq t + rate t^2 / 2).
inline Drive parse_drive(const std::string& spec, double omega) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    std::vector<double> v;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(item, &used);
            } catch (const std::exception&) {
                throw InvalidArgument("drive: cannot parse number '" + item + "'");
            }
            if (used != item.size() || !std::isfinite(x)) throw InvalidArgument("drive: cannot parse number '" + item + "'");
            v.push_back(x);
        }
    }
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (v.size() < lo || v.size() > hi) throw InvalidArgument("drive: wrong number of parameters in '" + spec + "'");
    };
    auto arg = [&](std::size_t i, double dflt) { return i < v.size() ? v[i] : dflt; };
    if (kind == "zero") {
        need(0, 0);
        return [](double) { return Complex{}; };
    }
    if (kind == "const") {
        need(1, 2);
        const Complex c{v[0], arg(1, 0.0)};
        return [c](double) { return c; };
    }
    if (kind == "sin" || kind == "cos") {
        need(1, 2);
        const double amp = v[0], f = arg(1, omega);
        if (kind == "sin") return [=](double t) { return Complex{amp * std::sin(f * t), 0.0}; };
        return [=](double t) { return Complex{amp * std::cos(f * t), 0.0}; };
    }
    if (kind == "gauss") {
        need(3, 4);
        const double amp = v[0], t0 = v[1], w = v[2], f = arg(3, omega);
        if (!(w > 0.0)) throw InvalidArgument("drive: gauss width must be positive");
        return [=](double t) {
            const double x = (t - t0) / w;
            return Complex{amp * std::exp(-0.5 * x * x) * std::cos(f * t), 0.0};
        };
    }
    if (kind == "chirp") {
        need(2, 3);
        const double amp = v[0], rate = v[1], f = arg(2, omega);
        return [=](double t) { return Complex{amp * std::sin(f * t + 0.5 * rate * t * t), 0.0}; };
    }
    throw InvalidArgument("drive: unknown profile '" + kind + "'");
}

// --- quantum evolution -----------------------------------------------------

struct DickeSample {
    double t = 0.0;
    Complex mean_a;          // <a>
    double field_infidelity = 0.0;  // 1 - <alpha|rho_field|alpha> at alpha = <a>
    double energy = 0.0;     // <H>
    double excitation = 0.0;
};

/// Evolution under the time-independent Dicke Hamiltonian, sampled at
/// t_final * k / samples. Each interval is split so that ||H|| dt <= 0.1.
inline std::vector<DickeSample> dicke_evolve(const DickeConfig& c, const CVector& psi0, double t_final,
                                             std::size_t samples) {
    c.validate();
    if (samples < 1) throw InvalidArgument("dicke_evolve: need at least one sample");
    if (psi0.size() != static_cast<Eigen::Index>(c.total_dim())) throw ShapeError("dicke_evolve: state dimension");
    const auto s = spin_operators(c);
    const OperatorMatrix h = dicke_hamiltonian(c);
    const OperatorMatrix x = excitation_operator(c);
    const double interval = t_final / static_cast<double>(samples);
    const double hnorm = h.entries.cwiseAbs().colwise().sum().maxCoeff() / c.hbar;
    const auto sub = std::max<long>(1, static_cast<long>(std::ceil(std::abs(interval) * hnorm / 0.1)));
    const CMatrix step = CMatrix(-kI * (interval / static_cast<double>(sub) / c.hbar) * h.entries).exp();
    const auto sd = static_cast<Eigen::Index>(c.spin_dim());
    const auto fd = static_cast<Eigen::Index>(c.field_dim);

    auto sample = [&](double t, const CVector& psi) {
        DickeSample out;
        out.t = t;
        out.mean_a = psi.dot(s.a * psi);
        out.energy = psi.dot(h.entries * psi).real();
        out.excitation = psi.dot(x.entries * psi).real();
        const CVector ca = coherent_coefficients(out.mean_a, c.field_dim);
        double overlap = 0.0;
        for (Eigen::Index sp = 0; sp < sd; ++sp) {
            Complex acc{};
            for (Eigen::Index n = 0; n < fd; ++n) acc += std::conj(ca(n)) * psi(n * sd + sp);
            overlap += std::norm(acc);
        }
        out.field_infidelity = std::max(0.0, 1.0 - overlap);
        return out;
    };

    std::vector<DickeSample> out;
    CVector psi = psi0;
    out.push_back(sample(0.0, psi));
    for (std::size_t k = 1; k <= samples; ++k) {
        for (long j = 0; j < sub; ++j) psi = step * psi;
        if (!psi.allFinite()) throw NumericError("dicke_evolve: non-finite state");
        out.push_back(sample(interval * static_cast<double>(k), psi));
    }
    return out;
}

inline std::string dicke_csv(const std::vector<DickeSample>& samples) {
    std::string out = "t,re_alpha,im_alpha,infidelity,energy,excitation\n";
    for (const auto& p : samples)
        out += format_real(p.t) + "," + format_real(p.mean_a.real()) + "," + format_real(p.mean_a.imag()) + "," +
               format_real(p.field_infidelity) + "," + format_real(p.energy) + "," + format_real(p.excitation) + "\n";
    return out;
}

} // namespace trapcalc
