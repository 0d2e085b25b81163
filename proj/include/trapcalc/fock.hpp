#pragma once

// Truncated Fock-space numerics. Everything else in the library is checked
// against the dense matrices built here.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>

#include "errors.hpp"

namespace trapcalc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Size and acceptance tolerances of the truncated number basis |0>..|dim-1>.
struct TruncationPolicy {
    std::size_t dim = 128;
    double tail_tol = 1e-10;     // max probability in the top 10% of the basis
    double unitary_tol = 1e-10;  // max |M^dag M - I| on the retained subspace

    void validate() const {
        if (dim < 2) throw InvalidPolicy("truncation dim must be >= 2, got " + std::to_string(dim));
        if (!(tail_tol > 0.0)) throw InvalidPolicy("tail_tol must be positive");
        if (!(unitary_tol > 0.0)) throw InvalidPolicy("unitary_tol must be positive");
    }

    /// First index of the top 10% band used for tail-mass checks.
    std::size_t tail_start() const { return dim - (dim + 9) / 10; }

    friend bool operator==(const TruncationPolicy&, const TruncationPolicy&) = default;
};

struct FockVector {
    CVector coeffs;
    TruncationPolicy policy;

    std::size_t dim() const { return static_cast<std::size_t>(coeffs.size()); }
    double norm() const { return coeffs.norm(); }

    /// Probability mass in the top 10% of the basis.
    double tail_mass() const {
        const auto start = static_cast<Eigen::Index>(policy.tail_start());
        return coeffs.tail(coeffs.size() - start).squaredNorm();
    }

    bool converged() const { return tail_mass() <= policy.tail_tol; }
    bool normalized(double tol = 1e-12) const { return std::abs(coeffs.squaredNorm() - 1.0) <= tol; }
};

struct OperatorMatrix {
    CMatrix entries;
    TruncationPolicy policy;

    std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }

    OperatorMatrix adjoint() const { return {entries.adjoint(), policy}; }

    FockVector apply(const FockVector& psi) const {
        if (psi.dim() != dim()) throw ShapeError("operator/vector dimension mismatch");
        return {entries * psi.coeffs, policy};
    }

    friend OperatorMatrix operator*(const OperatorMatrix& x, const OperatorMatrix& y) {
        return {x.entries * y.entries, x.policy};
    }
    friend OperatorMatrix operator+(const OperatorMatrix& x, const OperatorMatrix& y) {
        return {x.entries + y.entries, x.policy};
    }
    friend OperatorMatrix operator-(const OperatorMatrix& x, const OperatorMatrix& y) {
        return {x.entries - y.entries, x.policy};
    }
    friend OperatorMatrix operator*(Complex c, const OperatorMatrix& x) { return {c * x.entries, x.policy}; }
};

/// max |M - M^dag|
inline double hermiticity_defect(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

/// max |M^dag M - I|
inline double unitarity_defect(const CMatrix& m) {
    return (m.adjoint() * m - CMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

inline CMatrix commutator(const CMatrix& x, const CMatrix& y) { return x * y - y * x; }

inline OperatorMatrix identity_operator(const TruncationPolicy& policy) {
    policy.validate();
    const auto n = static_cast<Eigen::Index>(policy.dim);
    return {CMatrix::Identity(n, n), policy};
}

struct LadderPair {
    OperatorMatrix a;
    OperatorMatrix a_dag;
};

/// a|n> = sqrt(n)|n-1>, a^dag = a^H. The commutator [a, a^dag] equals the
/// identity except in the last diagonal entry, where truncation cuts it.
inline LadderPair ladder_operators(const TruncationPolicy& policy) {
    policy.validate();
    const auto n = static_cast<Eigen::Index>(policy.dim);
    CMatrix a = CMatrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    CMatrix a_dag = a.adjoint();
    return {{std::move(a), policy}, {std::move(a_dag), policy}};
}

/// a^dag a, exactly diagonal.
inline OperatorMatrix number_operator(const TruncationPolicy& policy) {
    policy.validate();
    const auto n = static_cast<Eigen::Index>(policy.dim);
    CMatrix m = CMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
    return {std::move(m), policy};
}

inline FockVector number_state(std::size_t n, const TruncationPolicy& policy) {
    policy.validate();
    if (n >= policy.dim)
        throw OutOfRange("number state |" + std::to_string(n) + "> outside basis of size " + std::to_string(policy.dim));
    CVector c = CVector::Zero(static_cast<Eigen::Index>(policy.dim));
    c(static_cast<Eigen::Index>(n)) = 1.0;
    return {std::move(c), policy};
}

/// exp(M) by scaling and squaring with a Pade approximant.
inline OperatorMatrix operator_exponential(const OperatorMatrix& m) {
    if (!m.entries.allFinite()) throw NumericError("operator_exponential: non-finite entries");
    CMatrix e = m.entries.exp();
    if (!e.allFinite()) throw NumericError("operator_exponential: overflow");
    return {std::move(e), m.policy};
}

inline Complex inner_product(const FockVector& psi, const FockVector& phi) {
    if (psi.dim() != phi.dim()) throw ShapeError("inner product dimension mismatch");
    return psi.coeffs.dot(phi.coeffs);  // conjugates the first argument
}

/// <psi|M|psi>
inline Complex expectation(const FockVector& psi, const OperatorMatrix& m) {
    if (psi.dim() != m.dim()) throw ShapeError("expectation: dimension mismatch");
    return psi.coeffs.dot(m.entries * psi.coeffs);
}

inline Complex expectation(const CVector& psi, const CMatrix& m) { return psi.dot(m * psi); }

/// |<psi|phi>|^2, clamped to [0, 1].
inline double fidelity(const FockVector& psi, const FockVector& phi) {
    const double f = std::norm(inner_product(psi, phi));
    return f > 1.0 ? 1.0 : f;
}

/// exp(X) v by a truncated Taylor series with substepping so every substep has
/// 1-norm at most one. Used for time stepping without forming exp(X).
inline CVector exponential_action(const CMatrix& x, CVector v) {
    const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
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

/// Evolves psi under a time-independent H for time t with a fixed step
/// exp(-i H dt) chosen so that ||H|| dt <= 0.1.
inline FockVector evolve_constant(const OperatorMatrix& h, const FockVector& psi, double t) {
    if (psi.dim() != h.dim()) throw ShapeError("evolve_constant: dimension mismatch");
    if (t == 0.0) return psi;
    const double hnorm = h.entries.cwiseAbs().colwise().sum().maxCoeff();
    const auto steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) * hnorm / 0.1)));
    const double dt = t / static_cast<double>(steps);
    const CMatrix step = (CMatrix(-kI * dt * h.entries)).exp();
    CVector c = psi.coeffs;
    for (long k = 0; k < steps; ++k) c = step * c;
    return {std::move(c), psi.policy};
}

/// Evolves psi under H(t) from t0 to t1 with the fourth-order commutator-free
/// Magnus scheme (two exponentials per step, Gauss-Legendre time nodes).
inline FockVector evolve_time_dependent(const std::function<CMatrix(double)>& h_of_t, const FockVector& psi,
                                        double t0, double t1, long steps) {
    if (steps < 1) throw InvalidArgument("evolve_time_dependent: steps must be >= 1");
    const double dt = (t1 - t0) / static_cast<double>(steps);
    const double s3 = std::sqrt(3.0);
    const double c1 = 0.5 - s3 / 6.0;
    const double c2 = 0.5 + s3 / 6.0;
    const double w1 = (3.0 - 2.0 * s3) / 12.0;
    const double w2 = (3.0 + 2.0 * s3) / 12.0;
    CVector c = psi.coeffs;
    for (long k = 0; k < steps; ++k) {
        const double t = t0 + dt * static_cast<double>(k);
        const CMatrix h1 = h_of_t(t + c1 * dt);
        const CMatrix h2 = h_of_t(t + c2 * dt);
        if (h1.rows() != c.size()) throw ShapeError("evolve_time_dependent: dimension mismatch");
        c = exponential_action(-kI * dt * (w2 * h1 + w1 * h2), std::move(c));
        c = exponential_action(-kI * dt * (w1 * h1 + w2 * h2), std::move(c));
    }
    return {std::move(c), psi.policy};
}

} // namespace trapcalc
