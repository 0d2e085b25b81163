#pragma once

// Equilibrium configurations of N ions in d dimensions for potentials of the form
//   W = (b/2) s + 2a sum_terms C s^(-mu) sum_{alpha != beta} (r_ab^2)^(nu - 1),
// with s = sum |x_alpha - X|^2 and X the centre of mass.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "util.hpp"

namespace trapcalc {

struct PairTerm {
    double mu = 0.0;
    double nu = 0.5;
    double C = 1.0;
};

struct CrystalPotentialSpec {
    std::size_t N = 2;
    std::size_t d = 1;
    double b = 1.0;
    double a = 1.0;
    std::vector<PairTerm> terms;

    void validate() const {
        if (N < 1) throw InvalidArgument("crystal: need at least one ion");
        if (d < 1 || d > 3) throw InvalidArgument("crystal: d must be 1, 2 or 3");
        if (!(b > 0.0)) throw InvalidArgument("crystal: b must be positive");
        if (!std::isfinite(a)) throw InvalidArgument("crystal: a must be finite");
        for (const auto& t : terms)
            if (!std::isfinite(t.mu) || !std::isfinite(t.nu) || !std::isfinite(t.C))
                throw InvalidArgument("crystal: pair term parameters must be finite");
    }

    /// Length at which confinement balances the pair forces; used for seeds.
    double length_scale() const {
        double best = 1.0;
        for (const auto& t : terms) {
            const double strength = std::abs(a * t.C);
            if (strength > 0.0 && t.nu < 2.0) best = std::pow(strength / b, 1.0 / (4.0 - 2.0 * t.nu));
        }
        return best;
    }
};

/// Coulomb repulsion, single term (mu, nu) = (0, 1/2).
inline CrystalPotentialSpec coulomb_preset(std::size_t N, std::size_t d, double b = 1.0, double a = 1.0, double C = 1.0) {
    return {N, d, b, a, {{0.0, 0.5, C}}};
}

/// Inverse-square pair energy a g sum_{alpha != beta} r^-2 in one dimension.
/// With `verbatim` the kernel is r^+2 instead, which has no crystal: the
/// minimum collapses onto a point.
inline CrystalPotentialSpec calogero_preset(std::size_t N, double b, double a, double g, bool verbatim = false) {
    return {N, 1, b, a, {{0.0, verbatim ? 2.0 : 0.0, 0.5 * g}}};
}

struct IonConfiguration {
    Eigen::MatrixXd positions;  // N x d

    std::size_t N() const { return static_cast<std::size_t>(positions.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(positions.cols()); }
};

struct CollectiveVariables {
    Eigen::MatrixXd y;  // positions relative to the centre of mass
    double s = 0.0;
};

inline CollectiveVariables collective_variables(const IonConfiguration& c) {
    const Eigen::RowVectorXd cm = c.positions.colwise().mean();
    CollectiveVariables v;
    v.y = c.positions.rowwise() - cm;
    v.s = v.y.squaredNorm();
    return v;
}

namespace detail {

inline void check_shape(const CrystalPotentialSpec& spec, const IonConfiguration& c) {
    if (c.N() != spec.N || c.d() != spec.d) throw ShapeError("crystal: configuration shape does not match N x d");
    if (!c.positions.allFinite()) throw InvalidArgument("crystal: non-finite positions");
}

inline bool term_active(const CrystalPotentialSpec& spec, const PairTerm& t) { return spec.a != 0.0 && t.C != 0.0; }

inline double pair_power(double r2, double p) {
    if (r2 == 0.0 && p < 0.0) throw Singularity("crystal: coincident ions");
    return std::pow(r2, p);
}

inline double s_power(double s, double mu) {
    if (mu == 0.0) return 1.0;
    if (s == 0.0 && mu > 0.0) throw Singularity("crystal: s = 0 with mu > 0");
    return std::pow(s, -mu);
}

} // namespace detail

inline double potential_energy(const CrystalPotentialSpec& spec, const IonConfiguration& c) {
    detail::check_shape(spec, c);
    const auto cv = collective_variables(c);
    double w = 0.5 * spec.b * cv.s;
    for (const auto& t : spec.terms) {
        if (!detail::term_active(spec, t)) continue;
        double pairs = 0.0;
        for (std::size_t i = 0; i < spec.N; ++i)
            for (std::size_t j = i + 1; j < spec.N; ++j) {
                const double r2 = (c.positions.row(static_cast<Eigen::Index>(i)) -
                                   c.positions.row(static_cast<Eigen::Index>(j)))
                                      .squaredNorm();
                pairs += 2.0 * detail::pair_power(r2, t.nu - 1.0);
            }
        w += 2.0 * spec.a * t.C * detail::s_power(cv.s, t.mu) * pairs;
    }
    return w;
}

/// Analytic gradient, N x d. It is orthogonal to rigid translations.
inline Eigen::MatrixXd potential_gradient(const CrystalPotentialSpec& spec, const IonConfiguration& c) {
    detail::check_shape(spec, c);
    const auto cv = collective_variables(c);
    Eigen::MatrixXd g = spec.b * cv.y;
    const auto N = static_cast<Eigen::Index>(spec.N);
    for (const auto& t : spec.terms) {
        if (!detail::term_active(spec, t)) continue;
        double pairs = 0.0;
        Eigen::MatrixXd dpairs = Eigen::MatrixXd::Zero(N, c.positions.cols());
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = i + 1; j < N; ++j) {
                const Eigen::RowVectorXd diff = c.positions.row(i) - c.positions.row(j);
                const double r2 = diff.squaredNorm();
                pairs += 2.0 * detail::pair_power(r2, t.nu - 1.0);
                if (t.nu != 1.0) {
                    const Eigen::RowVectorXd f = 4.0 * (t.nu - 1.0) * detail::pair_power(r2, t.nu - 2.0) * diff;
                    dpairs.row(i) += f;
                    dpairs.row(j) -= f;
                }
            }
        const double sp = detail::s_power(cv.s, t.mu);
        const double pref = 2.0 * spec.a * t.C;
        g += pref * sp * dpairs;
        if (t.mu != 0.0) g += pref * (-2.0 * t.mu * sp / cv.s) * pairs * cv.y;
    }
    return g;
}

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) v(i * m.cols() + k) = m(i, k);
    return v;
}

inline Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = v(i * cols + k);
    return m;
}

/// Symmetrized central differences of the analytic gradient, (N d) x (N d)
/// with ion-major ordering.
inline Eigen::MatrixXd potential_hessian(const CrystalPotentialSpec& spec, const IonConfiguration& c) {
    const auto n = static_cast<Eigen::Index>(spec.N * spec.d);
    const double scale = std::max(1.0, c.positions.cwiseAbs().maxCoeff());
    const double h = 1e-5 * scale;
    Eigen::MatrixXd hess(n, n);
    const Eigen::VectorXd x0 = flatten(c.positions);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd xp = x0, xm = x0;
        xp(k) += h;
        xm(k) -= h;
        const Eigen::VectorXd gp = flatten(potential_gradient(spec, {unflatten(xp, c.positions.rows(), c.positions.cols())}));
        const Eigen::VectorXd gm = flatten(potential_gradient(spec, {unflatten(xm, c.positions.rows(), c.positions.cols())}));
        hess.col(k) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose());
}

/// Orthonormal basis of the subspace orthogonal to rigid translations.
inline Eigen::MatrixXd translation_free_basis(std::size_t N, std::size_t d) {
    const auto n = static_cast<Eigen::Index>(N * d);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t k = 0; k < d; ++k)
                p(static_cast<Eigen::Index>(i * d + k), static_cast<Eigen::Index>(j * d + k)) -= 1.0 / static_cast<double>(N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
    const Eigen::Index keep = n - static_cast<Eigen::Index>(d);
    return es.eigenvectors().rightCols(keep);
}

/// Smallest Hessian eigenvalue on the translation-free subspace.
inline double hessian_min_eigenvalue(const CrystalPotentialSpec& spec, const IonConfiguration& c) {
    if (spec.N < 2) return 0.0;
    const Eigen::MatrixXd q = translation_free_basis(spec.N, spec.d);
    const Eigen::MatrixXd h = q.transpose() * potential_hessian(spec, c) * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

struct EquilibriumOptions {
    double tol = 1e-10;         // max |grad W|
    std::size_t max_iter = 5000;
    std::size_t seeds = 8;
    std::uint64_t seed = 12345;
};

struct EquilibriumResult {
    IonConfiguration configuration;
    double energy = 0.0;
    double residual = 0.0;
    double hessian_min_eig = 0.0;
    bool converged = false;
    bool degenerate = false;  // collapse to s = 0
    std::size_t iterations = 0;
};

namespace detail {

inline double safe_energy(const CrystalPotentialSpec& spec, const Eigen::VectorXd& x) {
    try {
        const double w = potential_energy(spec, {unflatten(x, static_cast<Eigen::Index>(spec.N), static_cast<Eigen::Index>(spec.d))});
        return std::isfinite(w) ? w : std::numeric_limits<double>::infinity();
    } catch (const Singularity&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline Eigen::VectorXd grad_flat(const CrystalPotentialSpec& spec, const Eigen::VectorXd& x) {
    return flatten(potential_gradient(spec, {unflatten(x, static_cast<Eigen::Index>(spec.N), static_cast<Eigen::Index>(spec.d))}));
}

} // namespace detail

/// Local relaxation from `initial`: BFGS with backtracking, then Newton steps
/// on the finite-difference Hessian (pseudo-inverse of |eigenvalues|) to reach
/// the requested residual. The centre of mass is moved to the origin.
inline EquilibriumResult find_equilibrium(const CrystalPotentialSpec& spec, const IonConfiguration& initial,
                                          const EquilibriumOptions& opt = {}) {
    spec.validate();
    detail::check_shape(spec, initial);
    const auto N = static_cast<Eigen::Index>(spec.N);
    const auto D = static_cast<Eigen::Index>(spec.d);
    const auto n = N * D;

    IonConfiguration start{collective_variables(initial).y};
    Eigen::VectorXd x = flatten(start.positions);
    double f = detail::safe_energy(spec, x);
    if (!std::isfinite(f)) throw Singularity("find_equilibrium: initial configuration is singular");
    Eigen::VectorXd g = detail::grad_flat(spec, x);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n) / spec.b;

    EquilibriumResult res;
    std::size_t it = 0;
    const double loose = std::max(opt.tol, 1e-7);
    for (; it < opt.max_iter && g.cwiseAbs().maxCoeff() > loose; ++it) {
        Eigen::VectorXd p = -hinv * g;
        if (p.dot(g) >= 0.0) {
            hinv = Eigen::MatrixXd::Identity(n, n) / spec.b;
            p = -g / spec.b;
        }
        double step = 1.0;
        double fn = detail::safe_energy(spec, x + p);
        while (!(fn <= f + 1e-4 * step * p.dot(g)) && step > 1e-14) {
            step *= 0.5;
            fn = detail::safe_energy(spec, x + step * p);
        }
        if (step <= 1e-14) break;
        const Eigen::VectorXd xn = x + step * p;
        const Eigen::VectorXd gn = detail::grad_flat(spec, xn);
        const Eigen::VectorXd sv = xn - x;
        const Eigen::VectorXd yv = gn - g;
        const double sy = sv.dot(yv);
        if (sy > 1e-300) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            hinv = (I - rho * sv * yv.transpose()) * hinv * (I - rho * yv * sv.transpose()) + rho * sv * sv.transpose();
        }
        x = xn;
        f = fn;
        g = gn;
    }

    // Newton polish.
    for (std::size_t k = 0; k < 50 && g.cwiseAbs().maxCoeff() > opt.tol; ++k, ++it) {
        const Eigen::MatrixXd h = potential_hessian(spec, {unflatten(x, N, D)});
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const Eigen::VectorXd ev = es.eigenvalues();
        const double cutoff = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
        Eigen::VectorXd coeff = es.eigenvectors().transpose() * g;
        for (Eigen::Index i = 0; i < n; ++i) coeff(i) = std::abs(ev(i)) > cutoff ? coeff(i) / std::abs(ev(i)) : 0.0;
        const Eigen::VectorXd p = -(es.eigenvectors() * coeff);
        const double g0 = g.cwiseAbs().maxCoeff();
        double step = 1.0;
        bool accepted = false;
        for (int back = 0; back < 30; ++back, step *= 0.5) {
            const Eigen::VectorXd xn = x + step * p;
            const double fn = detail::safe_energy(spec, xn);
            if (!std::isfinite(fn)) continue;
            const Eigen::VectorXd gn = detail::grad_flat(spec, xn);
            if (gn.cwiseAbs().maxCoeff() < g0 || fn < f) {
                x = xn;
                f = fn;
                g = gn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    res.configuration.positions = unflatten(x, N, D);
    res.energy = f;
    res.residual = g.cwiseAbs().maxCoeff();
    res.iterations = it;
    res.converged = res.residual <= opt.tol;
    const double s = collective_variables(res.configuration).s;
    res.degenerate = s <= 1e-12 * std::max(1.0, spec.length_scale() * spec.length_scale());
    res.hessian_min_eig = res.degenerate ? spec.b : hessian_min_eigenvalue(spec, res.configuration);
    return res;
}

/// Seed configurations: a line along the first axis with spacing equal to the
/// length scale, plus Gaussian noise in every coordinate. Seed 0 has no noise.
inline std::vector<IonConfiguration> lattice_seeds(const CrystalPotentialSpec& spec, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double ell = spec.length_scale();
    std::vector<IonConfiguration> out;
    for (std::size_t k = 0; k < count; ++k) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.N), static_cast<Eigen::Index>(spec.d));
        for (std::size_t i = 0; i < spec.N; ++i) {
            x(static_cast<Eigen::Index>(i), 0) = ell * (static_cast<double>(i) - 0.5 * static_cast<double>(spec.N - 1));
            if (k > 0)
                for (std::size_t j = 0; j < spec.d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 0.3 * ell * noise(rng);
        }
        out.push_back({x});
    }
    return out;
}

/// Multi-start search; the lowest-energy converged local minimum wins, ties go
/// to the earliest seed.
inline EquilibriumResult find_equilibrium(const CrystalPotentialSpec& spec, const EquilibriumOptions& opt = {}) {
    spec.validate();
    const auto seeds = lattice_seeds(spec, std::max<std::size_t>(1, opt.seeds), opt.seed);
    std::vector<EquilibriumResult> runs(seeds.size());
    std::vector<char> ok(seeds.size(), 0);
    parallel_for(seeds.size(), [&](std::size_t k) {
        try {
            runs[k] = find_equilibrium(spec, seeds[k], opt);
            ok[k] = 1;
        } catch (const Singularity&) {
        }
    });
    const EquilibriumResult* best = nullptr;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        if (!ok[k]) continue;
        const auto& r = runs[k];
        const bool local_min = r.hessian_min_eig > -1e-8;
        if (!best) {
            best = &r;
            continue;
        }
        const bool best_good = best->converged && best->hessian_min_eig > -1e-8;
        const bool good = r.converged && local_min;
        if ((good && !best_good) || (good == best_good && r.energy < best->energy - 1e-12 * std::abs(best->energy)))
            best = &r;
    }
    if (!best) throw Singularity("find_equilibrium: every seed hit a singular configuration");
    return *best;
}

// --- inverse-square check ------------------------------------------------

/// Zeros of the physicists' Hermite polynomial H_N, ascending, as eigenvalues
/// of the symmetric Jacobi matrix with off-diagonal sqrt(k / 2).
inline std::vector<double> hermite_zeros(std::size_t N) {
    if (N == 0) return {};
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t k = 1; k < N; ++k) {
        const double off = std::sqrt(static_cast<double>(k) / 2.0);
        j(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = off;
        j(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j, Eigen::EigenvaluesOnly);
    std::vector<double> z(N);
    for (std::size_t k = 0; k < N; ++k) z[k] = es.eigenvalues()(static_cast<Eigen::Index>(k));
    return z;
}

struct CalogeroResult {
    std::vector<double> rescaled;  // equilibrium positions times (b / (2 a g))^(1/4), ascending
    std::vector<double> hermite;
    double max_deviation = 0.0;
    EquilibriumResult equilibrium;
};

/// One-dimensional inverse-square crystal with a = 1, b = b_over_ag * g, pair
/// energy g sum_{alpha != beta} r^-2 and confinement (b/2) s. After the rescale
/// xi = (b / (2 g))^(1/4) x the equilibrium should sit on the zeros of H_N.
inline CalogeroResult calogero_check(double g, double b_over_ag, std::size_t N, const EquilibriumOptions& opt = {}) {
    if (N < 2 || N > 12) throw InvalidArgument("calogero_check: need 2 <= N <= 12");
    if (!(g > 0.0) || !(b_over_ag > 0.0)) throw InvalidArgument("calogero_check: g and b/(a g) must be positive");
    const double a = 1.0;
    const double b = b_over_ag * g;
    const auto spec = calogero_preset(N, b, a, g);
    EquilibriumOptions o = opt;
    o.seeds = 1;
    CalogeroResult r;
    r.equilibrium = find_equilibrium(spec, o);
    const double scale = std::pow(b / (2.0 * a * g), 0.25);
    for (std::size_t i = 0; i < N; ++i) r.rescaled.push_back(scale * r.equilibrium.configuration.positions(static_cast<Eigen::Index>(i), 0));
    std::sort(r.rescaled.begin(), r.rescaled.end());
    r.hermite = hermite_zeros(N);
    for (std::size_t i = 0; i < N; ++i) r.max_deviation = std::max(r.max_deviation, std::abs(r.rescaled[i] - r.hermite[i]));
    return r;
}

/// CSV with one row per ion: ion,x1[,x2[,x3]].
inline std::string positions_csv(const IonConfiguration& c) {
    std::string out = "ion";
    for (std::size_t k = 0; k < c.d(); ++k) out += ",x" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t i = 0; i < c.N(); ++i) {
        out += std::to_string(i);
        for (std::size_t k = 0; k < c.d(); ++k)
            out += "," + format_real(c.positions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
        out += "\n";
    }
    return out;
}

/// Reads the CSV written by positions_csv (header row, then ion index and
/// coordinates); used for warm starts.
inline IonConfiguration parse_positions_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("positions CSV: empty input");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size()) throw InvalidArgument("positions CSV: bad number '" + cell + "'");
            row.push_back(x);
        }
        if (row.empty() || (!rows.empty() && row.size() != rows.front().size()))
            throw ShapeError("positions CSV: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidArgument("positions CSV: no ions");
    IonConfiguration c{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()))};
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) c.positions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    return c;
}

} // namespace trapcalc
