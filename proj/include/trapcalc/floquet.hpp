#pragma once

// Hill-equation stability for Paul, Penning and combined traps:
//   zeta'' + (lambda - 2 c' - 4 c^2) zeta = 0,  W = lambda - 2c' - 4c^2.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "util.hpp"

namespace trapcalc {

using RealFn = std::function<double(double)>;

struct HillCoefficients {
    RealFn W;  // lambda - 2 c' - 4 c^2
    RealFn lambda_fn;
    RealFn c_fn;
    RealFn c_dot_fn;
    double period = 0.0;
};

inline HillCoefficients make_hill(RealFn lambda, RealFn c, RealFn c_dot, double period) {
    if (!(period > 0.0)) throw InvalidArgument("Hill period must be positive");
    RealFn w = [lambda, c, c_dot](double t) {
        const double ct = c(t);
        return lambda(t) - 2.0 * c_dot(t) - 4.0 * ct * ct;
    };
    return {std::move(w), std::move(lambda), std::move(c), std::move(c_dot), period};
}

inline RealFn zero_fn() {
    return [](double) { return 0.0; };
}

/// W constant, c = 0.
inline HillCoefficients constant_hill(double w, double period) {
    return make_hill([w](double) { return w; }, zero_fn(), zero_fn(), period);
}

/// Mathieu form W(t) = a - 2 q cos 2t, period pi.
inline HillCoefficients mathieu_hill(double a, double q) {
    constexpr double pi = 3.14159265358979323846;
    return make_hill([a, q](double t) { return a - 2.0 * q * std::cos(2.0 * t); }, zero_fn(), zero_fn(), pi);
}

// --- traps ---------------------------------------------------------------

enum class TrapKind { paul, penning, combined };
enum class Axis { axial, radial };

inline const char* to_string(Axis a) { return a == Axis::axial ? "axial" : "radial"; }

/// SI parameters of a quadrupole trap with an optional axial magnetic field.
struct TrapConfig {
    TrapKind kind = TrapKind::paul;
    double U0 = 0.0;      // V, d.c. voltage
    double V0 = 0.0;      // V, RF amplitude
    double Omega = 0.0;   // rad/s, RF drive
    double r0 = 0.0;      // m
    double z0 = 0.0;      // m
    double B0 = 0.0;      // T
    double Q = 0.0;       // C
    double mass = 0.0;    // kg

    bool has_rf() const { return kind != TrapKind::penning; }
    bool has_field() const { return kind != TrapKind::paul; }

    double geometry() const { return r0 * r0 + 2.0 * z0 * z0; }
    double cyclotron() const { return Q * B0 / mass; }

    void validate() const {
        if (!(mass > 0.0)) throw InvalidArgument("trap: mass must be positive");
        if (Q == 0.0 || !std::isfinite(Q)) throw InvalidArgument("trap: charge must be nonzero");
        if (!(r0 > 0.0) || !(z0 > 0.0)) throw InvalidArgument("trap: r0 and z0 must be positive");
        if (has_rf() && !(Omega > 0.0)) throw InvalidArgument("trap: Omega must be positive for an RF trap");
        if (B0 < 0.0) throw InvalidArgument("trap: B0 must be nonnegative");
        if (kind == TrapKind::paul && B0 != 0.0) throw InvalidArgument("trap: a Paul trap has B0 = 0");
    }

    double period() const {
        constexpr double pi = 3.14159265358979323846;
        if (has_rf()) return 2.0 * pi / Omega;
        const double wc = std::abs(cyclotron());
        return wc > 0.0 ? 2.0 * pi / wc : 1.0;
    }
};

/// Hill coefficients of one axis. The quadrupole potential
/// Q A(t) (x1^2 + x2^2 - 2 x3^2), A = (U0 + V0 cos Omega t)/(r0^2 + 2 z0^2),
/// gives lambda = 2 Q A / m radially and -4 Q A / m axially. With B0 != 0
/// the radial motion is only a scalar Hill equation in the frame rotating at
/// omega_c / 2, where lambda gains omega_c^2 / 4; that frame must be asked for
/// explicitly (see radial_coupled_monodromy for the lab-frame system).
inline HillCoefficients hill_from_trap(const TrapConfig& cfg, Axis axis, bool rotating_frame = false) {
    cfg.validate();
    const double k = 2.0 * cfg.Q / (cfg.mass * cfg.geometry()) * (axis == Axis::axial ? -2.0 : 1.0);
    const double u0 = cfg.U0;
    const double v0 = cfg.has_rf() ? cfg.V0 : 0.0;
    const double omega = cfg.Omega;
    double shift = 0.0;
    if (axis == Axis::radial && cfg.B0 != 0.0) {
        if (!rotating_frame)
            throw Unsupported("radial Hill equation with B0 != 0 requires the rotating-frame reduction");
        const double wc = cfg.cyclotron();
        shift = 0.25 * wc * wc;
    }
    RealFn lambda = [=](double t) { return k * (u0 + v0 * std::cos(omega * t)) + shift; };
    return make_hill(std::move(lambda), zero_fn(), zero_fn(), cfg.period());
}

struct MathieuParameters {
    double a = 0.0;
    double q = 0.0;
};

/// (a, q) of the axis in the time variable Omega t / 2, so that the Hill
/// equation reads x'' + (a - 2 q cos 2 tau) x = 0.
inline MathieuParameters mathieu_parameters(const TrapConfig& cfg, Axis axis, bool rotating_frame = false) {
    cfg.validate();
    if (!cfg.has_rf()) throw Unsupported("Mathieu parameters need an RF drive");
    const double k = 2.0 * cfg.Q / (cfg.mass * cfg.geometry()) * (axis == Axis::axial ? -2.0 : 1.0);
    const double w2 = cfg.Omega * cfg.Omega;
    MathieuParameters p{4.0 * k * cfg.U0 / w2, -2.0 * k * cfg.V0 / w2};
    if (axis == Axis::radial && cfg.B0 != 0.0) {
        if (!rotating_frame)
            throw Unsupported("radial Hill equation with B0 != 0 requires the rotating-frame reduction");
        const double wc = cfg.cyclotron();
        p.a += wc * wc / w2;
    }
    return p;
}

/// Reads a flat `key = value` file, one key per line, `#` starts a comment.
/// Keys (SI): kind (paul | penning | combined), U0 [V], V0 [V], Omega [rad/s],
/// r0 [m], z0 [m], B0 [T], Q [C], mass [kg].
inline TrapConfig parse_trap_config(const std::string& text) {
    TrapConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("trap config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "kind") {
            if (val == "paul") cfg.kind = TrapKind::paul;
            else if (val == "penning") cfg.kind = TrapKind::penning;
            else if (val == "combined") cfg.kind = TrapKind::combined;
            else throw InvalidArgument("trap config line " + std::to_string(lineno) + ": unknown kind '" + val + "'");
            continue;
        }
        double x = 0.0;
        std::size_t used = 0;
        try {
            x = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != val.size() || !std::isfinite(x))
            throw InvalidArgument("trap config line " + std::to_string(lineno) + ": bad number '" + val + "'");
        if (key == "U0") cfg.U0 = x;
        else if (key == "V0") cfg.V0 = x;
        else if (key == "Omega") cfg.Omega = x;
        else if (key == "r0") cfg.r0 = x;
        else if (key == "z0") cfg.z0 = x;
        else if (key == "B0") cfg.B0 = x;
        else if (key == "Q") cfg.Q = x;
        else if (key == "mass") cfg.mass = x;
        else throw InvalidArgument("trap config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

// --- monodromy -----------------------------------------------------------

enum class Stability { stable, unstable, marginal };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::marginal: return "marginal";
    }
    return "?";
}

inline constexpr double kMarginalBand = 1e-9;

struct FloquetResult {
    Eigen::Matrix2d monodromy = Eigen::Matrix2d::Identity();
    double trace = 2.0;
    double determinant = 1.0;
    Stability stability = Stability::marginal;
    std::optional<double> mu;  // radians per period in [0, pi], stable only
    double growth_rate = 0.0;  // log of the largest multiplier, unstable only

    bool stable() const { return stability == Stability::stable; }
};

inline FloquetResult classify_monodromy(const Eigen::Matrix2d& m) {
    FloquetResult r;
    r.monodromy = m;
    r.trace = m.trace();
    r.determinant = m.determinant();
    const double at = std::abs(r.trace);
    if (std::abs(2.0 - at) <= kMarginalBand) {
        r.stability = Stability::marginal;
    } else if (at < 2.0) {
        r.stability = Stability::stable;
        r.mu = std::acos(r.trace / 2.0);
    } else {
        r.stability = Stability::unstable;
        r.growth_rate = std::acosh(at / 2.0);
    }
    return r;
}

/// One-period state-transition matrix of zeta'' + W zeta = 0 from the
/// columns (zeta, zeta') = (1, 0) and (0, 1), classical RK4 with fixed steps.
inline FloquetResult monodromy(const HillCoefficients& hill, int integrator_steps = 4096) {
    if (integrator_steps < 256) throw InvalidArgument("monodromy: need at least 256 integrator steps");
    const double h = hill.period / integrator_steps;
    Eigen::Matrix2d y = Eigen::Matrix2d::Identity();
    auto rhs = [](double w, const Eigen::Matrix2d& s) {
        Eigen::Matrix2d d;
        d.row(0) = s.row(1);
        d.row(1) = -w * s.row(0);
        return d;
    };
    for (int k = 0; k < integrator_steps; ++k) {
        const double t = h * k;
        const double w0 = hill.W(t);
        const double wm = hill.W(t + 0.5 * h);
        const double w1 = hill.W(t + h);
        const Eigen::Matrix2d k1 = rhs(w0, y);
        const Eigen::Matrix2d k2 = rhs(wm, y + 0.5 * h * k1);
        const Eigen::Matrix2d k3 = rhs(wm, y + 0.5 * h * k2);
        const Eigen::Matrix2d k4 = rhs(w1, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!y.allFinite()) throw NumericError("monodromy: integration overflowed");
    FloquetResult r = classify_monodromy(y);
    if (std::abs(r.determinant - 1.0) > 1e-6 * std::max(1.0, y.cwiseAbs().maxCoeff()))
        throw NumericError("monodromy: determinant drift " + std::to_string(r.determinant - 1.0) +
                           "; increase integrator_steps");
    return r;
}

struct CoupledFloquetResult {
    Eigen::Matrix4d monodromy = Eigen::Matrix4d::Identity();
    double determinant = 1.0;
    std::array<std::complex<double>, 4> multipliers{};
    double max_modulus = 1.0;
    bool stable = false;  // every multiplier on the unit circle
};

/// Lab-frame radial motion with the angular-momentum coupling of an axial
/// field, in the variables (x1, x2, p1/m, p2/m):
///   x1' = v1 + k x2, x2' = v2 - k x1, v1' = -w2 x1 + k v2, v2' = -w2 x2 - k v1,
/// k = omega_c / 2 and w2 = 2 Q A(t) / m + omega_c^2 / 4.
inline CoupledFloquetResult radial_coupled_monodromy(const TrapConfig& cfg, int integrator_steps = 4096) {
    cfg.validate();
    if (integrator_steps < 256) throw InvalidArgument("monodromy: need at least 256 integrator steps");
    const double kr = 2.0 * cfg.Q / (cfg.mass * cfg.geometry());
    const double wc = cfg.cyclotron();
    const double kappa = 0.5 * wc;
    const double v0 = cfg.has_rf() ? cfg.V0 : 0.0;
    auto w2 = [&](double t) { return kr * (cfg.U0 + v0 * std::cos(cfg.Omega * t)) + 0.25 * wc * wc; };
    auto rhs = [&](double t, const Eigen::Matrix4d& s) {
        const double w = w2(t);
        Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
        a(0, 2) = 1.0;
        a(0, 1) = kappa;
        a(1, 3) = 1.0;
        a(1, 0) = -kappa;
        a(2, 0) = -w;
        a(2, 3) = kappa;
        a(3, 1) = -w;
        a(3, 2) = -kappa;
        return Eigen::Matrix4d(a * s);
    };
    const double period = cfg.period();
    const double h = period / integrator_steps;
    Eigen::Matrix4d y = Eigen::Matrix4d::Identity();
    for (int k = 0; k < integrator_steps; ++k) {
        const double t = h * k;
        const Eigen::Matrix4d k1 = rhs(t, y);
        const Eigen::Matrix4d k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
        const Eigen::Matrix4d k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
        const Eigen::Matrix4d k4 = rhs(t + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CoupledFloquetResult r;
    r.monodromy = y;
    r.determinant = y.determinant();
    // velocities carry a factor ~ 1/period; rescale them before the eigensolve,
    // which is similarity-invariant but badly conditioned in SI units
    Eigen::Vector4d scale(1.0, 1.0, period, period);
    const Eigen::Matrix4d balanced = scale.asDiagonal() * y * scale.cwiseInverse().asDiagonal();
    Eigen::EigenSolver<Eigen::Matrix4d> es(balanced);
    r.max_modulus = 0.0;
    for (int i = 0; i < 4; ++i) {
        r.multipliers[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
        r.max_modulus = std::max(r.max_modulus, std::abs(es.eigenvalues()(i)));
    }
    r.stable = r.max_modulus <= 1.0 + 1e-6;
    return r;
}

// --- scans ---------------------------------------------------------------

struct ScanGrid {
    double a_min = 0.0;
    double a_max = 5.0;
    double q_min = 0.0;
    double q_max = 2.0;
    std::size_t na = 101;
    std::size_t nq = 101;

    static double node(double lo, double hi, std::size_t n, std::size_t i) {
        return n > 1 ? lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1) : lo;
    }
    double a(std::size_t i) const { return node(a_min, a_max, na, i); }
    double q(std::size_t j) const { return node(q_min, q_max, nq, j); }
};

struct ScanPoint {
    double a = 0.0;
    double q = 0.0;
    FloquetResult result;
};

/// Mathieu stability map, a varying slowest. Points are computed in parallel
/// and stored by index.
inline std::vector<ScanPoint> stability_scan(const ScanGrid& grid, int integrator_steps = 4096) {
    if (grid.na == 0 || grid.nq == 0) throw InvalidArgument("stability_scan: empty grid");
    std::vector<ScanPoint> out(grid.na * grid.nq);
    parallel_for(out.size(), [&](std::size_t k) {
        const std::size_t i = k / grid.nq;
        const std::size_t j = k % grid.nq;
        const double a = grid.a(i);
        const double q = grid.q(j);
        try {
            out[k] = {a, q, monodromy(mathieu_hill(a, q), integrator_steps)};
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at a = " + format_real(a) + ", q = " + format_real(q));
        }
    });
    return out;
}

struct TrapScanPoint {
    double U0 = 0.0;
    double V0 = 0.0;
    MathieuParameters mathieu;  // of the reported axis
    FloquetResult axial;
    FloquetResult radial;
    bool trap_stable = false;  // both axes stable
};

/// Stability of a trap over a (U0, V0) grid. Radial motion with B0 != 0 uses
/// the rotating-frame reduction.
inline std::vector<TrapScanPoint> trap_stability_scan(TrapConfig cfg, double u_min, double u_max, std::size_t nu,
                                                      double v_min, double v_max, std::size_t nv,
                                                      Axis report_axis = Axis::radial, int integrator_steps = 4096) {
    cfg.validate();
    if (nu == 0 || nv == 0) throw InvalidArgument("trap_stability_scan: empty grid");
    std::vector<TrapScanPoint> out(nu * nv);
    parallel_for(out.size(), [&](std::size_t k) {
        TrapConfig c = cfg;
        c.U0 = ScanGrid::node(u_min, u_max, nu, k / nv);
        c.V0 = ScanGrid::node(v_min, v_max, nv, k % nv);
        TrapScanPoint p;
        p.U0 = c.U0;
        p.V0 = c.V0;
        try {
            p.axial = monodromy(hill_from_trap(c, Axis::axial), integrator_steps);
            p.radial = monodromy(hill_from_trap(c, Axis::radial, true), integrator_steps);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at U0 = " + format_real(c.U0) + ", V0 = " + format_real(c.V0));
        }
        p.trap_stable = p.axial.stable() && p.radial.stable();
        if (c.has_rf()) p.mathieu = mathieu_parameters(c, report_axis, true);
        out[k] = p;
    });
    return out;
}

// --- quasienergies -------------------------------------------------------

struct QuasienergyLadder {
    double mu = 0.0;
    double E0 = 1.0;
    std::vector<double> levels;  // mu (2 j + E0), j = 0..j_max
};

/// A discrete ladder exists only for stable motion.
inline QuasienergyLadder quasienergy(const FloquetResult& result, double E0 = 1.0, std::size_t j_max = 10) {
    if (!result.stable() || !result.mu)
        throw NoSpectrum(std::string("no discrete quasienergy spectrum: motion is ") + to_string(result.stability));
    QuasienergyLadder ladder{*result.mu, E0, {}};
    ladder.levels.reserve(j_max + 1);
    for (std::size_t j = 0; j <= j_max; ++j) ladder.levels.push_back(ladder.mu * (2.0 * static_cast<double>(j) + E0));
    return ladder;
}

// --- evolution frame -----------------------------------------------------

struct EvolutionFrame {
    std::vector<double> t_grid;
    std::vector<double> alpha_t;  // ln |zeta|
    std::vector<double> beta_t;   // (alpha' - 4 c) / 2
    std::vector<double> tau_t;    // continuous arg zeta, tau(t0) = arg zeta(t0)
    std::vector<std::complex<double>> zeta_t;
    std::vector<std::complex<double>> zeta_dot_t;
};

/// Integrates the complex Hill solution from (zeta, zeta') at t_grid[0] and
/// reads off the frame functions at each grid time. The phase is unwrapped on
/// the integrator substeps, and alpha' = Re(zeta'/zeta) is taken from the
/// integrated derivative.
inline EvolutionFrame evolution_frame(const HillCoefficients& hill, const std::vector<double>& t_grid,
                                      std::complex<double> zeta0, std::complex<double> zeta_dot0,
                                      int steps_per_period = 4096) {
    using C = std::complex<double>;
    if (t_grid.empty()) throw InvalidArgument("evolution_frame: empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] >= t_grid[i - 1])) throw InvalidArgument("evolution_frame: time grid must be ascending");
    if (std::abs(zeta0) < 1e-12) throw FrameSingularity("evolution_frame: zeta vanishes", t_grid.front());

    EvolutionFrame f;
    const double hmax = hill.period / steps_per_period;
    C z = zeta0;
    C zd = zeta_dot0;
    double tau = std::arg(zeta0);
    double t = t_grid.front();

    auto record = [&](double tt) {
        if (std::abs(z) < 1e-12) throw FrameSingularity("evolution_frame: zeta vanishes", tt);
        const double alpha = std::log(std::abs(z));
        const double alpha_dot = (zd / z).real();
        f.t_grid.push_back(tt);
        f.alpha_t.push_back(alpha);
        f.beta_t.push_back(0.5 * (alpha_dot - 4.0 * hill.c_fn(tt)));
        f.tau_t.push_back(tau);
        f.zeta_t.push_back(z);
        f.zeta_dot_t.push_back(zd);
    };

    record(t);
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t;
        const int n = std::max(1, static_cast<int>(std::ceil(span / hmax)));
        const double h = span / n;
        for (int k = 0; k < n && h > 0.0; ++k) {
            const double w0 = hill.W(t);
            const double wm = hill.W(t + 0.5 * h);
            const double w1 = hill.W(t + h);
            const C k1z = zd, k1d = -w0 * z;
            const C k2z = zd + 0.5 * h * k1d, k2d = -wm * (z + 0.5 * h * k1z);
            const C k3z = zd + 0.5 * h * k2d, k3d = -wm * (z + 0.5 * h * k2z);
            const C k4z = zd + h * k3d, k4d = -w1 * (z + h * k3z);
            const C z_new = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            zd += (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            if (std::abs(z_new) < 1e-12) throw FrameSingularity("evolution_frame: zeta vanishes", t + h);
            tau += std::arg(z_new / z);
            z = z_new;
            t += h;
        }
        t = t_grid[i];
        record(t);
    }
    return f;
}

} // namespace trapcalc
