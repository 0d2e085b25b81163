#pragma once

// Several field modes on a tensor product of truncated Fock spaces. Mode 0 is
// the slowest tensor index. Operators are kept sparse internally; the public
// OperatorMatrix results are dense and meant for small total dimensions.

#include <Eigen/Sparse>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "coherent.hpp"
#include "fock.hpp"
#include "squeeze.hpp"
#include "util.hpp"

namespace trapcalc {

using SparseC = Eigen::SparseMatrix<Complex>;

inline constexpr std::size_t kMaxMultimodeDim = 4096;

struct ModeSet {
    std::vector<double> omegas;
    double lambda = 1.0;  // field scale in E(t)
    std::size_t per_mode_dim = 16;

    std::size_t n_modes() const { return omegas.size(); }

    std::size_t total_dim() const {
        std::size_t d = 1;
        for (std::size_t i = 0; i < n_modes(); ++i) d *= per_mode_dim;
        return d;
    }

    TruncationPolicy mode_policy() const { return {per_mode_dim, 1e-10, 1e-10}; }

    void validate() const {
        if (omegas.empty()) throw InvalidArgument("ModeSet: need at least one mode");
        for (double w : omegas)
            if (!(w > 0.0)) throw InvalidArgument("ModeSet: frequencies must be positive");
        if (per_mode_dim < 2) throw InvalidPolicy("ModeSet: per-mode dim must be >= 2");
        std::size_t d = 1;
        for (std::size_t i = 0; i < n_modes(); ++i) {
            d *= per_mode_dim;
            if (d > kMaxMultimodeDim)
                throw InvalidPolicy("ModeSet: total dimension exceeds " + std::to_string(kMaxMultimodeDim));
        }
    }
};

struct MultimodeLabels {
    std::vector<Complex> alphas;
    CMatrix betas;  // symmetric n x n

    void validate(const ModeSet& modes) const {
        const auto n = static_cast<Eigen::Index>(modes.n_modes());
        if (alphas.size() != modes.n_modes()) throw ShapeError("MultimodeLabels: one alpha per mode");
        if (betas.rows() != n || betas.cols() != n) throw ShapeError("MultimodeLabels: beta must be n x n");
        if ((betas - betas.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw InvalidArgument("MultimodeLabels: beta must be symmetric");
    }
};

/// Annihilation operator of every mode on the full space.
inline std::vector<SparseC> mode_annihilators(const ModeSet& modes) {
    modes.validate();
    const std::size_t m = modes.per_mode_dim;
    const std::size_t total = modes.total_dim();
    std::vector<SparseC> out;
    std::size_t stride = total;
    for (std::size_t i = 0; i < modes.n_modes(); ++i) {
        stride /= m;  // stride of mode i in the flat index
        std::vector<Eigen::Triplet<Complex>> trip;
        for (std::size_t k = 0; k < total; ++k) {
            const std::size_t n = (k / stride) % m;
            if (n == 0) continue;
            trip.emplace_back(static_cast<int>(k - stride), static_cast<int>(k), std::sqrt(static_cast<double>(n)));
        }
        SparseC a(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
        a.setFromTriplets(trip.begin(), trip.end());
        out.push_back(std::move(a));
    }
    return out;
}

/// exp(X) v for a sparse generator, Taylor series with unit-norm substeps.
inline CVector exponential_action(const SparseC& x, CVector v) {
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(x.cols());
    for (int k = 0; k < x.outerSize(); ++k)
        for (SparseC::InnerIterator it(x, k); it; ++it) colsum(it.col()) += std::abs(it.value());
    const double norm1 = x.cols() > 0 ? colsum.maxCoeff() : 0.0;
    if (!std::isfinite(norm1)) throw NumericError("exponential_action: non-finite generator");
    const int substeps = std::max(1, static_cast<int>(std::ceil(norm1)));
    const double scale = 1.0 / substeps;
    for (int s = 0; s < substeps; ++s) {
        CVector term = v;
        CVector sum = v;
        for (int k = 1; k < 60; ++k) {
            term = (x * term) * (scale / k);
            sum += term;
            if (term.norm() <= 1e-17 * sum.norm()) break;
        }
        v = std::move(sum);
    }
    return v;
}

namespace detail {

inline SparseC displacement_generator(const MultimodeLabels& labels, const std::vector<SparseC>& a) {
    SparseC g(a[0].rows(), a[0].cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const SparseC ad = a[i].adjoint();
        g += labels.alphas[i] * ad - std::conj(labels.alphas[i]) * a[i];
    }
    return g;
}

inline SparseC squeeze_generator(const MultimodeLabels& labels, const std::vector<SparseC>& a) {
    SparseC g(a[0].rows(), a[0].cols());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) {
            const Complex b = labels.betas(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (b == Complex{}) continue;
            const SparseC adad = SparseC(a[i].adjoint()) * SparseC(a[j].adjoint());
            const SparseC aa = a[i] * a[j];
            g += (0.5 * b) * adad - (0.5 * std::conj(b)) * aa;
        }
    return g;
}

inline double spectral_norm(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

} // namespace detail

/// Displacements within the single-mode trust region and beta below the
/// squeeze trust radius (as tanh of its spectral norm) of the per-mode basis.
inline void check_multimode_trust(const MultimodeLabels& labels, const ModeSet& modes) {
    labels.validate(modes);
    const auto policy = modes.mode_policy();
    for (const auto& alpha : labels.alphas) check_coherent_trust(alpha, policy);
    const double r = detail::spectral_norm(labels.betas);
    const double z = std::tanh(r);
    if (z > squeeze_trust_radius(modes.per_mode_dim))
        throw TruncationRisk("multimode: squeeze ||beta|| = " + std::to_string(r) + " outside trust region",
                             squeeze_required_dim(z));
}

/// D(alpha) = exp(sum_i alpha_i a_i^dag - conj(alpha_i) a_i).
inline OperatorMatrix multimode_displacement(const MultimodeLabels& labels, const ModeSet& modes) {
    labels.validate(modes);
    const auto a = mode_annihilators(modes);
    const TruncationPolicy p{modes.total_dim(), 1e-10, 1e-10};
    return operator_exponential({CMatrix(detail::displacement_generator(labels, a)), p});
}

/// S(beta) = exp(1/2 sum_ij (beta_ij a_i^dag a_j^dag - conj(beta_ij) a_i a_j)).
inline OperatorMatrix multimode_squeeze(const MultimodeLabels& labels, const ModeSet& modes) {
    labels.validate(modes);
    const auto a = mode_annihilators(modes);
    const TruncationPolicy p{modes.total_dim(), 1e-10, 1e-10};
    return operator_exponential({CMatrix(detail::squeeze_generator(labels, a)), p});
}

/// D(alpha) S(beta) |0>, built by exponential actions on vectors.
inline CVector multimode_state(const MultimodeLabels& labels, const ModeSet& modes) {
    check_multimode_trust(labels, modes);
    const auto a = mode_annihilators(modes);
    CVector psi = CVector::Zero(static_cast<Eigen::Index>(modes.total_dim()));
    psi(0) = 1.0;
    psi = exponential_action(detail::squeeze_generator(labels, a), std::move(psi));
    psi = exponential_action(detail::displacement_generator(labels, a), std::move(psi));
    return psi;
}

/// sum_i omega_i (a_i^dag a_i + 1/2) + sum_ij (f_ij a_i^dag a_j^dag + h.c.)
/// + sum_ij g_ij (a_i^dag a_j + delta_ij / 2) + sum_i (h_i a_i^dag + h.c.).
/// Empty f, g or h means zero. f must be symmetric and g Hermitian.
inline OperatorMatrix multimode_hamiltonian(const ModeSet& modes, const CMatrix& f = {}, const CMatrix& g = {},
                                            const std::vector<Complex>& h = {}, double hbar = 1.0) {
    modes.validate();
    const auto a = mode_annihilators(modes);
    const auto total = static_cast<Eigen::Index>(modes.total_dim());
    const auto n = static_cast<Eigen::Index>(modes.n_modes());
    if (f.size() != 0 && (f.rows() != n || f.cols() != n)) throw ShapeError("multimode_hamiltonian: f must be n x n");
    if (g.size() != 0 && (g.rows() != n || g.cols() != n)) throw ShapeError("multimode_hamiltonian: g must be n x n");
    if (!h.empty() && h.size() != modes.n_modes()) throw ShapeError("multimode_hamiltonian: h needs one entry per mode");
    if (f.size() != 0 && (f - f.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidArgument("multimode_hamiltonian: f must be symmetric");
    if (g.size() != 0 && (g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidArgument("multimode_hamiltonian: g must be Hermitian");
    SparseC op(total, total);
    SparseC id(total, total);
    id.setIdentity();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const SparseC ad = a[i].adjoint();
        op += (hbar * modes.omegas[i]) * (ad * a[i] + 0.5 * id);
        if (!h.empty()) {
            const SparseC lin = h[i] * ad;
            op += lin + SparseC(lin.adjoint());
        }
        for (std::size_t j = 0; j < a.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            if (f.size() != 0 && f(ii, jj) != Complex{}) {
                const SparseC pair = f(ii, jj) * (ad * SparseC(a[j].adjoint()));
                op += pair + SparseC(pair.adjoint());
            }
            if (g.size() != 0 && g(ii, jj) != Complex{}) {
                op += g(ii, jj) * (ad * a[j]);
                if (i == j) op += (0.5 * g(ii, jj)) * id;
            }
        }
    }
    return {CMatrix(op), {modes.total_dim(), 1e-10, 1e-10}};
}

/// E(t) = 2 lambda sum_i sqrt(omega_i) (a_i e^{-i omega_i t} + a_i^dag e^{i omega_i t}).
inline SparseC electric_field_operator(const ModeSet& modes, double t, const std::vector<SparseC>& a) {
    SparseC e(a[0].rows(), a[0].cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Complex ph = std::polar(1.0, -modes.omegas[i] * t);
        const SparseC term = (2.0 * modes.lambda * std::sqrt(modes.omegas[i]) * ph) * a[i];
        e += term + SparseC(term.adjoint());
    }
    return e;
}

inline OperatorMatrix electric_field_operator(const ModeSet& modes, double t) {
    const auto a = mode_annihilators(modes);
    return {CMatrix(electric_field_operator(modes, t, a)), {modes.total_dim(), 1e-10, 1e-10}};
}

/// Mean field of D(alpha) S(beta)|0>: 2 lambda sum_i sqrt(omega_i) 2 Re(alpha_i e^{-i omega_i t}).
/// Squeezing does not move it.
inline double electric_field_expectation(const MultimodeLabels& labels, const ModeSet& modes, double t) {
    labels.validate(modes);
    double e = 0.0;
    for (std::size_t i = 0; i < modes.n_modes(); ++i) {
        const double w = modes.omegas[i];
        const Complex al = labels.alphas[i];
        e += 2.0 * modes.lambda * std::sqrt(w) * 2.0 * (al.real() * std::cos(w * t) + al.imag() * std::sin(w * t));
    }
    return e;
}

struct FieldSample {
    double t = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// <E(t)> and Var E(t) from the truncated state vector.
inline std::vector<FieldSample> field_statistics(const MultimodeLabels& labels, const ModeSet& modes,
                                                 const std::vector<double>& times) {
    const CVector psi = multimode_state(labels, modes);
    const auto a = mode_annihilators(modes);
    std::vector<FieldSample> out;
    out.reserve(times.size());
    for (double t : times) {
        const CVector ep = electric_field_operator(modes, t, a) * psi;
        const double mean = psi.dot(ep).real();
        out.push_back({t, mean, ep.squaredNorm() - mean * mean});
    }
    return out;
}

inline std::string field_statistics_csv(const std::vector<FieldSample>& samples) {
    std::string out = "t,mean_E,var_E\n";
    for (const auto& s : samples)
        out += format_real(s.t) + "," + format_real(s.mean) + "," + format_real(s.variance) + "\n";
    return out;
}

} // namespace trapcalc
