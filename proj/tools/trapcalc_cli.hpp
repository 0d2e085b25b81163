#pragma once

// Command-line front end. run() never calls exit(); it returns the process
// exit code so tests can drive it in-process.
//
// Exit codes: 0 ok, 2 usage, 3 numeric failure, 4 nonconvergence,
// 5 truncation risk.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trapcalc/trapcalc.hpp"

namespace trapcalc::cli {

using nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kNonconvergence = 4, kTruncation = 5 };

namespace detail {

inline Complex parse_complex(const std::string& text) {
    const auto comma = text.find(',');
    auto num = [&](const std::string& s) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(x))
            throw InvalidArgument("expected a complex number as re,im but got '" + text + "'");
        return x;
    };
    if (comma == std::string::npos) return {num(text), 0.0};
    return {num(text.substr(0, comma)), num(text.substr(comma + 1))};
}

inline ordered_json number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

inline ordered_json complex_json(Complex z) { return ordered_json::array({number(z.real()), number(z.imag())}); }

inline ordered_json report_json(const MomentReport& r) {
    ordered_json j;
    j["x_cl"] = number(r.x_cl);
    j["p_cl"] = number(r.p_cl);
    j["x2_cl"] = number(r.x2_cl);
    j["p2_cl"] = number(r.p2_cl);
    j["Ec_cl"] = number(r.Ec_cl);
    j["Ep_cl"] = number(r.Ep_cl);
    j["E_cl"] = number(r.E_cl);
    j["dx2"] = number(r.dx2);
    j["dp2"] = number(r.dp2);
    j["uncertainty_product"] = number(r.uncertainty_product);
    j["mu3"] = number(r.mu3);
    j["pearson_CP"] = number(r.pearson_CP);
    j["pearson_CA"] = number(r.pearson_CA);
    j["G"] = number(r.G);
    return j;
}

inline MomentReport report_difference(const MomentReport& x, const MomentReport& y) {
    MomentReport d;
    d.x_cl = std::abs(x.x_cl - y.x_cl);
    d.p_cl = std::abs(x.p_cl - y.p_cl);
    d.x2_cl = std::abs(x.x2_cl - y.x2_cl);
    d.p2_cl = std::abs(x.p2_cl - y.p2_cl);
    d.Ec_cl = std::abs(x.Ec_cl - y.Ec_cl);
    d.Ep_cl = std::abs(x.Ep_cl - y.Ep_cl);
    d.E_cl = std::abs(x.E_cl - y.E_cl);
    d.dx2 = std::abs(x.dx2 - y.dx2);
    d.dp2 = std::abs(x.dp2 - y.dp2);
    d.uncertainty_product = std::abs(x.uncertainty_product - y.uncertainty_product);
    d.mu3 = std::abs(x.mu3 - y.mu3);
    d.pearson_CP = std::abs(x.pearson_CP - y.pearson_CP);
    d.pearson_CA = std::abs(x.pearson_CA - y.pearson_CA);
    d.G = std::abs(x.G - y.G);
    return d;
}

/// Writes to `path`, or to `fallback` when the path is empty.
inline void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty()) {
        fallback << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
    f << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string mu_text(const FloquetResult& r) { return r.mu ? format_real(*r.mu) : std::string("nan"); }

/// Limiting axis of a trap point: an unstable axis if there is one, else the
/// axis with the larger |trace|.
inline Axis limiting_axis(const TrapScanPoint& p) {
    if (!p.axial.stable() && p.radial.stable()) return Axis::axial;
    if (p.axial.stable() && !p.radial.stable()) return Axis::radial;
    return std::abs(p.axial.trace) >= std::abs(p.radial.trace) ? Axis::axial : Axis::radial;
}

inline ordered_json floquet_json(const FloquetResult& r) {
    ordered_json j;
    j["trace"] = number(r.trace);
    j["determinant"] = number(r.determinant);
    j["stability"] = to_string(r.stability);
    j["mu"] = r.mu ? number(*r.mu) : ordered_json(nullptr);
    return j;
}

} // namespace detail

struct ScanFlags {
    ScanGrid grid;
    int steps = 4096;
    std::string out, json, trap, axis = "both";
    double u_min = NAN, u_max = NAN, v_min = NAN, v_max = NAN;
    std::size_t nu = 1, nv = 1;
};

inline int cmd_stability_scan(const ScanFlags& f, std::ostream& out) {
    if (f.steps < 256) throw InvalidArgument("--steps must be >= 256");
    std::string csv;
    ordered_json doc;
    doc["steps"] = f.steps;
    if (f.trap.empty()) {
        if (f.grid.na == 0 || f.grid.nq == 0) throw InvalidArgument("--na and --nq must be positive");
        const auto points = stability_scan(f.grid, f.steps);
        csv = "a,q,trace,mu,stable\n";
        doc["mode"] = "mathieu";
        doc["points"] = ordered_json::array();
        for (const auto& p : points) {
            csv += format_real(p.a) + "," + format_real(p.q) + "," + format_real(p.result.trace) + "," +
                   detail::mu_text(p.result) + "," + (p.result.stable() ? "1" : "0") + "\n";
            ordered_json j;
            j["a"] = p.a;
            j["q"] = p.q;
            const ordered_json fj = detail::floquet_json(p.result);
            for (const auto& [k, v] : fj.items()) j[k] = v;
            doc["points"].push_back(std::move(j));
        }
    } else {
        if (f.axis != "axial" && f.axis != "radial" && f.axis != "both")
            throw InvalidArgument("--axis must be axial, radial or both");
        const TrapConfig cfg = parse_trap_config(detail::read_file(f.trap));
        const double u0 = std::isnan(f.u_min) ? cfg.U0 : f.u_min;
        const double u1 = std::isnan(f.u_max) ? u0 : f.u_max;
        const double v0 = std::isnan(f.v_min) ? cfg.V0 : f.v_min;
        const double v1 = std::isnan(f.v_max) ? v0 : f.v_max;
        if (f.nu == 0 || f.nv == 0) throw InvalidArgument("--nu and --nv must be positive");
        const Axis report = f.axis == "axial" ? Axis::axial : Axis::radial;
        const auto points = trap_stability_scan(cfg, u0, u1, f.nu, v0, v1, f.nv, report, f.steps);
        csv = "U0,V0,axis,a,q,trace,mu,stable\n";
        doc["mode"] = "trap";
        doc["axis"] = f.axis;
        doc["points"] = ordered_json::array();
        for (const auto& p : points) {
            const Axis ax = f.axis == "both" ? detail::limiting_axis(p) : report;
            const FloquetResult& r = ax == Axis::axial ? p.axial : p.radial;
            const bool stable = f.axis == "both" ? p.trap_stable : r.stable();
            MathieuParameters mp;
            if (cfg.has_rf()) {
                TrapConfig at = cfg;
                at.U0 = p.U0;
                at.V0 = p.V0;
                mp = mathieu_parameters(at, ax, true);
            }
            csv += format_real(p.U0) + "," + format_real(p.V0) + "," + to_string(ax) + "," +
                   (cfg.has_rf() ? format_real(mp.a) : std::string("nan")) + "," +
                   (cfg.has_rf() ? format_real(mp.q) : std::string("nan")) + "," + format_real(r.trace) + "," +
                   detail::mu_text(r) + "," + (stable ? "1" : "0") + "\n";
            ordered_json j;
            j["U0"] = p.U0;
            j["V0"] = p.V0;
            j["trap_stable"] = p.trap_stable;
            j["limiting_axis"] = to_string(detail::limiting_axis(p));
            j["axial"] = detail::floquet_json(p.axial);
            j["radial"] = detail::floquet_json(p.radial);
            doc["points"].push_back(std::move(j));
        }
    }
    detail::emit(f.out, csv, out);
    if (!f.json.empty()) detail::emit(f.json, doc.dump(2) + "\n", out);
    return kOk;
}

struct CrystalFlags {
    std::string preset = "coulomb";
    std::size_t n = 0;
    std::size_t d = 1;
    std::optional<double> b;
    double a = 1.0;
    double c = 1.0;
    std::uint64_t seed = 12345;
    std::size_t seeds = 8;
    double tol = 1e-10;
    std::string out, json, init;
};

inline int cmd_crystal(const CrystalFlags& f, std::ostream& out) {
    if (f.n < 2) throw InvalidArgument("--n must be at least 2");
    if (!(f.tol > 0.0)) throw InvalidArgument("--tol must be positive");
    CrystalPotentialSpec spec;
    if (f.preset == "coulomb") {
        spec = coulomb_preset(f.n, f.d, f.b.value_or(1.0), f.a, f.c);
    } else if (f.preset == "calogero") {
        if (f.d != 1) throw InvalidArgument("the calogero preset is one-dimensional");
        spec = calogero_preset(f.n, f.b.value_or(2.0), f.a, f.c);
    } else {
        throw InvalidArgument("--preset must be coulomb or calogero");
    }
    spec.validate();
    EquilibriumOptions opt;
    opt.tol = f.tol;
    opt.seed = f.seed;
    opt.seeds = f.seeds;
    const EquilibriumResult r =
        f.init.empty() ? find_equilibrium(spec, opt) : find_equilibrium(spec, parse_positions_csv(detail::read_file(f.init)), opt);

    ordered_json j;
    j["preset"] = f.preset;
    j["N"] = f.n;
    j["d"] = f.d;
    j["b"] = spec.b;
    j["a"] = spec.a;
    j["C"] = f.c;
    j["seed"] = f.seed;
    j["energy"] = detail::number(r.energy);
    j["residual"] = detail::number(r.residual);
    j["hessian_min_eig"] = detail::number(r.hessian_min_eig);
    j["converged"] = r.converged;
    j["degenerate"] = r.degenerate;
    j["iterations"] = r.iterations;
    if (f.preset == "calogero") {
        const double scale = std::pow(spec.b / (2.0 * spec.a * f.c), 0.25);
        std::vector<double> xs;
        for (Eigen::Index i = 0; i < r.configuration.positions.rows(); ++i) xs.push_back(scale * r.configuration.positions(i, 0));
        std::sort(xs.begin(), xs.end());
        const auto h = hermite_zeros(f.n);
        double dev = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) dev = std::max(dev, std::abs(xs[i] - h[i]));
        j["hermite_max_deviation"] = dev;
    }
    ordered_json pos = ordered_json::array();
    for (Eigen::Index i = 0; i < r.configuration.positions.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < r.configuration.positions.cols(); ++k) row.push_back(r.configuration.positions(i, k));
        pos.push_back(std::move(row));
    }
    j["positions"] = std::move(pos);

    if (!f.out.empty()) detail::emit(f.out, positions_csv(r.configuration), out);
    detail::emit(f.json, j.dump(2) + "\n", out);
    return r.converged ? kOk : kNonconvergence;
}

struct StateFlags {
    std::size_t n = 0;
    std::string alpha = "0,0";
    std::string z = "0,0";
    std::size_t dim = 128;
    double hbar = 1.0, mass = 1.0, omega = 1.0;
    std::string husimi_grid, husimi_out, out;
};

/// Tolerance at which closed forms count as disagreeing with the oracle.
inline constexpr double kDiscrepancyTol = 1e-8;

inline ordered_json state_report(const GeneralizedSqueezedLabel& label, const Units& units,
                                 const TruncationPolicy& policy) {
    check_label_trust(label, policy);
    const MomentReport closed = classical_moments(label, units);
    const MomentReport oracle = oracle_moments(label, units, policy);
    const PrintedMoments printed = printed_moments(label, units);

    ordered_json j;
    j["label"] = {{"n", label.n}, {"alpha", detail::complex_json(label.alpha.alpha)}, {"z", detail::complex_json(label.z.z())}};
    j["units"] = {{"hbar", units.hbar}, {"mass", units.mass}, {"omega", units.omega}};
    j["dim"] = policy.dim;
    j["report"] = detail::report_json(oracle);
    j["closed_form"] = detail::report_json(closed);
    j["oracle"] = detail::report_json(oracle);
    j["discrepancy"] = detail::report_json(detail::report_difference(closed, oracle));

    const double d_ec = std::abs(printed.Ec_cl - oracle.Ec_cl);
    const double d_ep = std::abs(printed.Ep_cl - oracle.Ep_cl);
    const double d_mu3 = std::abs(printed.mu3 - oracle.mu3);
    const double d_cp = std::abs(printed.pearson_CP - oracle.pearson_CP);
    j["printed_form"] = {{"Ec_cl", detail::number(printed.Ec_cl)},
                         {"Ep_cl", detail::number(printed.Ep_cl)},
                         {"mu3", detail::number(printed.mu3)},
                         {"pearson_CP", detail::number(printed.pearson_CP)}};
    j["printed_discrepancy"] = {{"Ec_cl", detail::number(d_ec)},
                                {"Ep_cl", detail::number(d_ep)},
                                {"mu3", detail::number(d_mu3)},
                                {"pearson_CP", detail::number(d_cp)}};
    j["flags"] = {{"ec_ep_placement", d_ec > kDiscrepancyTol || d_ep > kDiscrepancyTol},
                  {"mu3_printed", d_mu3 > kDiscrepancyTol},
                  {"pearson_cp_printed", !(d_cp <= kDiscrepancyTol)}};

    const auto gc = expectation_generators(label);
    const auto go = oracle_expectation_generators(label, policy);
    ordered_json gen;
    for (const auto& [name, value] : gc) {
        const Complex o = go.at(name);
        gen[name] = {{"closed_form", detail::complex_json(value)},
                     {"oracle", detail::complex_json(o)},
                     {"discrepancy", detail::number(std::abs(value - o))}};
    }
    j["generators"] = std::move(gen);
    return j;
}

/// "re_min,re_max,n_re,im_min,im_max,n_im"
inline ComplexGrid parse_husimi_grid(const std::string& spec) {
    std::vector<double> v;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw InvalidArgument("--husimi-grid: bad number '" + item + "'");
        v.push_back(x);
    }
    if (v.size() != 6) throw InvalidArgument("--husimi-grid expects re_min,re_max,n_re,im_min,im_max,n_im");
    if (v[2] < 1 || v[5] < 1 || v[2] != std::floor(v[2]) || v[5] != std::floor(v[5]))
        throw InvalidArgument("--husimi-grid point counts must be positive integers");
    ComplexGrid g;
    g.re_min = v[0];
    g.re_max = v[1];
    g.n_re = static_cast<std::size_t>(v[2]);
    g.im_min = v[3];
    g.im_max = v[4];
    g.n_im = static_cast<std::size_t>(v[5]);
    return g;
}

inline int cmd_state_report(const StateFlags& f, std::ostream& out) {
    const GeneralizedSqueezedLabel label{f.n, detail::parse_complex(f.alpha), SqueezeLabel(detail::parse_complex(f.z))};
    if (!(f.hbar > 0.0) || !(f.mass > 0.0) || !(f.omega > 0.0)) throw InvalidArgument("units must be positive");
    const TruncationPolicy policy{f.dim, 1e-10, 1e-10};
    policy.validate();
    const ordered_json j = state_report(label, {f.hbar, f.mass, f.omega}, policy);
    if (!f.husimi_grid.empty()) {
        if (f.husimi_out.empty()) throw InvalidArgument("--husimi-grid needs --husimi-out");
        const auto q = husimi_q(generalized_squeezed_state(label, policy), parse_husimi_grid(f.husimi_grid));
        std::ofstream hf(f.husimi_out, std::ios::binary);
        if (!hf) throw InvalidArgument("cannot open '" + f.husimi_out + "' for writing");
        q.write_csv(hf);
    }
    detail::emit(f.out, j.dump(2) + "\n", out);
    return kOk;
}

struct DickeFlags {
    std::size_t n_ions = 1;
    double omega = 1.0;
    double epsilon = 1.0;
    std::string lambda = "0,0";
    std::size_t field_dim = 16;
    std::string alpha = "0,0";
    std::size_t excited = 0;
    double tmax = 10.0;
    long steps = 100;
    bool semiclassical = false;
    std::string drive = "zero";
    std::size_t dim = 64;
    std::string out;
};

inline int cmd_dicke_evolve(const DickeFlags& f, std::ostream& out) {
    if (f.steps < 1) throw InvalidArgument("--steps must be positive");
    if (!(f.tmax >= 0.0)) throw InvalidArgument("--tmax must be nonnegative");
    const Complex alpha0 = detail::parse_complex(f.alpha);
    std::string csv;
    if (f.semiclassical) {
        const Drive drive = parse_drive(f.drive, f.omega);
        const auto r = driven_coherence_check(f.omega, drive, alpha0, f.tmax, f.steps, {f.dim, 1e-10, 1e-10});
        csv = trajectory_csv(r.trajectory);
    } else {
        DickeConfig c;
        c.N = f.n_ions;
        c.omega = f.omega;
        c.epsilon = f.epsilon;
        c.lambda = detail::parse_complex(f.lambda);
        c.field_dim = f.field_dim;
        c.validate();
        const auto samples = dicke_evolve(c, dicke_product_state(c, alpha0, f.excited), f.tmax,
                                          static_cast<std::size_t>(f.steps));
        csv = dicke_csv(samples);
    }
    detail::emit(f.out, csv, out);
    return kOk;
}

/// Parses argv and dispatches; every error is mapped onto an exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"trapcalc: trapped-ion state, stability and crystal calculations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "trapcalc 1.0.0");

    ScanFlags scan;
    auto* s = app.add_subcommand("stability-scan", "Floquet stability over a Mathieu (a, q) grid or a trap voltage grid");
    s->add_option("--a-min", scan.grid.a_min);
    s->add_option("--a-max", scan.grid.a_max);
    s->add_option("--q-min", scan.grid.q_min);
    s->add_option("--q-max", scan.grid.q_max);
    s->add_option("--na", scan.grid.na);
    s->add_option("--nq", scan.grid.nq);
    s->add_option("--steps", scan.steps, "RK4 steps per period");
    s->add_option("--trap", scan.trap, "trap config file (key = value, SI units)");
    s->add_option("--axis", scan.axis, "axial | radial | both");
    s->add_option("--u0-min", scan.u_min);
    s->add_option("--u0-max", scan.u_max);
    s->add_option("--nu", scan.nu);
    s->add_option("--v0-min", scan.v_min);
    s->add_option("--v0-max", scan.v_max);
    s->add_option("--nv", scan.nv);
    s->add_option("--out", scan.out, "CSV path (stdout if omitted)");
    s->add_option("--json", scan.json, "JSON path");

    CrystalFlags crys;
    double crys_b = NAN;
    auto* c = app.add_subcommand("crystal", "Equilibrium ion configuration");
    c->add_option("--preset", crys.preset, "coulomb | calogero");
    c->add_option("--n", crys.n, "number of ions")->required();
    c->add_option("--d", crys.d, "spatial dimension");
    c->add_option("--b", crys_b, "confinement (default 1, or 2 for calogero)");
    c->add_option("--a", crys.a, "pair prefactor");
    c->add_option("--c", crys.c, "pair strength C (coulomb) or g (calogero)");
    c->add_option("--seed", crys.seed);
    c->add_option("--seeds", crys.seeds, "multi-start count");
    c->add_option("--tol", crys.tol, "max gradient component");
    c->add_option("--init", crys.init, "warm-start positions CSV");
    c->add_option("--out", crys.out, "positions CSV path");
    c->add_option("--json", crys.json, "report path (stdout if omitted)");

    StateFlags st;
    auto* r = app.add_subcommand("state-report", "Moments of D(alpha) U(z)|n>, closed forms beside the matrix oracle");
    r->add_option("--n", st.n);
    r->add_option("--alpha", st.alpha, "re,im");
    r->add_option("--z", st.z, "re,im");
    r->add_option("--dim", st.dim);
    r->add_option("--hbar", st.hbar);
    r->add_option("--mass", st.mass);
    r->add_option("--omega", st.omega);
    r->add_option("--husimi-grid", st.husimi_grid, "re_min,re_max,n_re,im_min,im_max,n_im");
    r->add_option("--husimi-out", st.husimi_out);
    r->add_option("--out", st.out, "JSON path (stdout if omitted)");

    DickeFlags dk;
    auto* d = app.add_subcommand("dicke-evolve", "Dicke-model or driven-field time evolution");
    d->add_option("--n-ions", dk.n_ions);
    d->add_option("--omega", dk.omega);
    d->add_option("--epsilon", dk.epsilon);
    d->add_option("--lambda", dk.lambda, "re,im");
    d->add_option("--field-dim", dk.field_dim);
    d->add_option("--alpha", dk.alpha, "initial field label re,im");
    d->add_option("--excited", dk.excited, "ions starting in the upper level");
    d->add_option("--tmax", dk.tmax);
    d->add_option("--steps", dk.steps);
    d->add_flag("--semiclassical", dk.semiclassical, "classically driven field instead of the Dicke model");
    d->add_option("--drive", dk.drive, "zero | const:re[,im] | sin:amp[,freq] | cos:amp[,freq] | gauss:amp,t0,width[,freq] | chirp:amp,rate[,freq]");
    d->add_option("--dim", dk.dim, "field truncation for --semiclassical");
    d->add_option("--out", dk.out, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*s) return cmd_stability_scan(scan, out);
        if (*c) {
            if (!std::isnan(crys_b)) crys.b = crys_b;
            return cmd_crystal(crys, out);
        }
        if (*r) return cmd_state_report(st, out);
        if (*d) return cmd_dicke_evolve(dk, out);
    } catch (const TruncationRisk& e) {
        err << "truncation risk: " << e.what() << "\n";
        return kTruncation;
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidPolicy& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const OutOfRange& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ShapeError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Unsupported& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    }
    return kUsage;
}

} // namespace trapcalc::cli
