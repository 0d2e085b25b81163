#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include "oracles.hpp"
#include "trapcalc/trapcalc.hpp"

using namespace trapcalc;

namespace {

constexpr double pi = 3.14159265358979323846;

MultimodeLabels labels(std::vector<Complex> alphas, CMatrix betas) { return {std::move(alphas), std::move(betas)}; }

CMatrix diag2(Complex b0, Complex b1) {
    CMatrix b = CMatrix::Zero(2, 2);
    b(0, 0) = b0;
    b(1, 1) = b1;
    return b;
}

double maxabs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// single-mode exp(alpha a^dag - conj(alpha) a) on m levels
CMatrix single_displacement(Complex alpha, std::size_t m) {
    const auto [a, ad] = ladder_operators({m, 1e-10, 1e-10});
    return CMatrix(alpha * ad.entries - std::conj(alpha) * a.entries).exp();
}

} // namespace

TEST(ModeSet, Validation) {
    EXPECT_THROW((ModeSet{{}, 1.0, 8}).validate(), InvalidArgument);
    EXPECT_THROW((ModeSet{{1.0, -1.0}, 1.0, 8}).validate(), InvalidArgument);
    EXPECT_THROW((ModeSet{{1.0, 2.0, 3.0}, 1.0, 32}).validate(), InvalidPolicy);
    EXPECT_NO_THROW((ModeSet{{1.0, 2.0, 3.0}, 1.0, 16}).validate());
    EXPECT_EQ((ModeSet{{1.0, 2.0}, 1.0, 16}).total_dim(), 256u);
}

TEST(Labels, Validation) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 8};
    CMatrix b = CMatrix::Zero(2, 2);
    b(0, 1) = 0.1;
    EXPECT_THROW(labels({0.0, 0.0}, b).validate(modes), InvalidArgument);
    EXPECT_THROW(labels({0.0}, CMatrix::Zero(2, 2)).validate(modes), ShapeError);
    EXPECT_THROW(labels({0.0, 0.0}, CMatrix::Zero(3, 3)).validate(modes), ShapeError);
}

TEST(Labels, TrustRegion) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 16};
    EXPECT_THROW(multimode_state(labels({Complex(1.2, 0.0), 0.0}, CMatrix::Zero(2, 2)), modes), TruncationRisk);
    EXPECT_THROW(multimode_state(labels({0.0, 0.0}, diag2(0.2, 0.0)), modes), TruncationRisk);
    EXPECT_NO_THROW(multimode_state(labels({0.0, 0.0}, diag2(0.2, 0.0)), ModeSet{{1.0, 2.0}, 1.0, 32}));
}

TEST(Operators, Annihilators) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 6};
    const auto a = mode_annihilators(modes);
    ASSERT_EQ(a.size(), 2u);
    const auto [a1, ad1] = ladder_operators({6, 1e-10, 1e-10});
    const CMatrix id = CMatrix::Identity(6, 6);
    EXPECT_LE(maxabs(CMatrix(a[0]) - CMatrix(Eigen::kroneckerProduct(a1.entries, id))), 0.0);
    EXPECT_LE(maxabs(CMatrix(a[1]) - CMatrix(Eigen::kroneckerProduct(id, a1.entries))), 0.0);
    EXPECT_LE(maxabs(CMatrix(a[0] * a[1] - a[1] * a[0])), 1e-15);
}

TEST(Operators, ZeroLabelsAreIdentity) {
    const ModeSet modes{{1.0, 1.5}, 1.0, 8};
    const auto l = labels({0.0, 0.0}, CMatrix::Zero(2, 2));
    EXPECT_LE(maxabs(multimode_displacement(l, modes).entries - CMatrix::Identity(64, 64)), 1e-15);
    EXPECT_LE(maxabs(multimode_squeeze(l, modes).entries - CMatrix::Identity(64, 64)), 1e-15);
    const CVector psi = multimode_state(l, modes);
    EXPECT_NEAR(std::abs(psi(0)), 1.0, 1e-15);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
}

TEST(Operators, SingleModeDisplacementFactorizes) {
    const ModeSet modes{{1.0, 1.5}, 1.0, 8};
    const Complex al(0.5, -0.2);
    const CMatrix d = multimode_displacement(labels({al, 0.0}, CMatrix::Zero(2, 2)), modes).entries;
    const CMatrix expected = Eigen::kroneckerProduct(single_displacement(al, 8), CMatrix::Identity(8, 8));
    EXPECT_LE(maxabs(d - expected), 1e-12);
    EXPECT_LE(unitarity_defect(d), 1e-10);
    const CMatrix d2 = multimode_displacement(labels({0.0, al}, CMatrix::Zero(2, 2)), modes).entries;
    EXPECT_LE(maxabs(d2 - CMatrix(Eigen::kroneckerProduct(CMatrix::Identity(8, 8), single_displacement(al, 8)))), 1e-12);
}

TEST(Operators, Unitarity) {
    const ModeSet modes{{1.0, 1.5}, 1.0, 8};
    CMatrix b(2, 2);
    b << 0.1, Complex(0.05, 0.02), Complex(0.05, 0.02), Complex(0.0, 0.08);
    const auto l = labels({Complex(0.3, 0.1), Complex(-0.2, 0.4)}, b);
    EXPECT_LE(unitarity_defect(multimode_displacement(l, modes).entries), 1e-10);
    EXPECT_LE(unitarity_defect(multimode_squeeze(l, modes).entries), 1e-10);
}

TEST(State, DiagonalSqueezeMatchesSingleModeSeries) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 32};
    const Complex b0(0.2, 0.05), b1(-0.1, 0.1);
    const CVector psi = multimode_state(labels({0.0, 0.0}, diag2(b0, b1)), modes);
    CVector c0(32), c1(32);
    for (int m = 0; m < 32; ++m) {
        c0(m) = oracle::squeezed_vacuum_coeff(SqueezeLabel::from_zeta(b0).z(), m);
        c1(m) = oracle::squeezed_vacuum_coeff(SqueezeLabel::from_zeta(b1).z(), m);
    }
    const CVector expected = Eigen::kroneckerProduct(c0, c1);
    EXPECT_LE((psi - expected).norm(), 1e-9);
}

TEST(State, DisplacedSqueezedMatchesSingleMode) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 32};
    const Complex al(0.6, -0.4), b0(0.15, 0.0);
    const CVector psi = multimode_state(labels({al, 0.0}, diag2(b0, 0.0)), modes);
    const auto single = generalized_squeezed_state({0, al, SqueezeLabel::from_zeta(b0)}, {32, 1e-10, 1e-10});
    CVector vac = CVector::Zero(32);
    vac(0) = 1.0;
    EXPECT_LE((psi - CVector(Eigen::kroneckerProduct(single.coeffs, vac))).norm(), 1e-9);
}

TEST(State, TwoModeSqueezingCorrelatesNumbers) {
    const ModeSet modes{{1.0, 1.3}, 1.0, 32};
    const double r = 0.2;
    CMatrix b = CMatrix::Zero(2, 2);
    b(0, 1) = b(1, 0) = r;
    const CVector psi = multimode_state(labels({0.0, 0.0}, b), modes);
    // sech r sum_n tanh^n r |n, n>
    for (Eigen::Index n1 = 0; n1 < 32; ++n1)
        for (Eigen::Index n2 = 0; n2 < 32; ++n2) {
            const Complex c = psi(n1 * 32 + n2);
            const double expected = n1 == n2 ? std::pow(std::tanh(r), static_cast<double>(n1)) / std::cosh(r) : 0.0;
            EXPECT_LE(std::abs(c - expected), 1e-10) << n1 << "," << n2;
        }
    const auto a = mode_annihilators(modes);
    const SparseC n1 = SparseC(a[0].adjoint()) * a[0];
    const SparseC n2 = SparseC(a[1].adjoint()) * a[1];
    const CVector diff = (n1 - n2) * psi;
    EXPECT_LE(diff.norm(), 1e-12);
}

TEST(State, ModePermutation) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 32};
    CMatrix b(2, 2);
    b << 0.05, Complex(0.03, 0.02), Complex(0.03, 0.02), 0.0;
    const CVector psi = multimode_state(labels({Complex(0.4, 0.1), Complex(-0.2, 0.3)}, b), modes);
    CMatrix bs(2, 2);
    bs << b(1, 1), b(1, 0), b(0, 1), b(0, 0);
    const CVector swapped = multimode_state(labels({Complex(-0.2, 0.3), Complex(0.4, 0.1)}, bs), ModeSet{{2.0, 1.0}, 1.0, 32});
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 32; ++i)
        for (Eigen::Index j = 0; j < 32; ++j) worst = std::max(worst, std::abs(psi(i * 32 + j) - swapped(j * 32 + i)));
    EXPECT_LE(worst, 1e-12);
}

TEST(Field, ClosedFormMean) {
    const ModeSet modes{{1.7}, 0.3, 16};
    const auto l = labels({Complex(1.0, 0.0)}, CMatrix::Zero(1, 1));
    EXPECT_NEAR(electric_field_expectation(l, modes, 0.0), 4.0 * 0.3 * std::sqrt(1.7), 1e-15);
    // a quarter period later only the imaginary part contributes
    EXPECT_NEAR(electric_field_expectation(l, modes, pi / (2.0 * 1.7)), 0.0, 1e-14);
}

TEST(Field, MeanIgnoresSqueezing) {
    const ModeSet modes{{1.0, 2.0}, 0.7, 32};
    CMatrix b(2, 2);
    b << 0.1, Complex(0.05, -0.05), Complex(0.05, -0.05), Complex(0.0, 0.12);
    const std::vector<Complex> alphas{Complex(0.5, 0.3), Complex(-0.4, 0.2)};
    std::vector<double> ts;
    for (int k = 0; k < 7; ++k) ts.push_back(0.37 * k);
    const auto squeezed = field_statistics(labels(alphas, b), modes, ts);
    const auto plain = field_statistics(labels(alphas, CMatrix::Zero(2, 2)), modes, ts);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double closed = electric_field_expectation(labels(alphas, b), modes, ts[k]);
        EXPECT_NEAR(squeezed[k].mean, closed, 1e-9);
        EXPECT_NEAR(plain[k].mean, closed, 1e-9);
    }
}

TEST(Field, CoherentVarianceIsVacuumVariance) {
    const ModeSet modes{{1.0, 2.5}, 0.5, 16};
    const auto s = field_statistics(labels({Complex(0.5, 0.5), Complex(0.0, -0.7)}, CMatrix::Zero(2, 2)), modes,
                                    {0.0, 0.4, 1.1});
    for (const auto& x : s) EXPECT_NEAR(x.variance, 4.0 * 0.25 * 3.5, 1e-9);
}

TEST(Field, SqueezedVarianceOscillates) {
    const ModeSet modes{{1.0, 2.0}, 1.0, 32};
    const double r = 0.24, phi = 0.6;
    const auto l = labels({0.0, 0.0}, diag2(std::polar(r, phi), 0.0));
    std::vector<double> ts;
    for (int k = 0; k <= 64; ++k) ts.push_back(pi * k / 64.0);
    const auto s = field_statistics(l, modes, ts);
    double vmin = 1e300, vmax = 0.0;
    for (const auto& x : s) {
        // mode 0 quadrature cosh 2r + sinh 2r cos(phi - 2 t) plus the vacuum of mode 1
        const double expected = 4.0 * (std::cosh(2 * r) + std::sinh(2 * r) * std::cos(phi - 2.0 * x.t)) + 4.0 * 2.0;
        EXPECT_NEAR(x.variance, expected, 1e-8) << x.t;
        vmin = std::min(vmin, x.variance);
        vmax = std::max(vmax, x.variance);
    }
    EXPECT_GT(vmax - vmin, 0.5 * 4.0 * 2.0 * std::sinh(2 * r));
}

TEST(Field, CsvHeader) {
    const std::string csv = field_statistics_csv({{0.0, 1.0, 2.0}, {0.5, -1.0, 2.5}});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,mean_E,var_E");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Hamiltonian, HermitianAndShapeChecks) {
    const ModeSet modes{{1.0, 1.5}, 1.0, 6};
    CMatrix f(2, 2), g(2, 2);
    f << 0.1, Complex(0.2, 0.1), Complex(0.2, 0.1), 0.0;
    g << 0.3, Complex(0.0, 0.4), Complex(0.0, -0.4), -0.1;
    const auto h = multimode_hamiltonian(modes, f, g, {Complex(0.1, 0.2), 0.5});
    EXPECT_LE(hermiticity_defect(h.entries), 1e-14);
    CMatrix bad = f;
    bad(0, 1) += 0.1;
    EXPECT_THROW(multimode_hamiltonian(modes, bad), InvalidArgument);
    EXPECT_THROW(multimode_hamiltonian(modes, {}, bad), InvalidArgument);
    EXPECT_THROW(multimode_hamiltonian(modes, CMatrix::Zero(3, 3)), ShapeError);
    EXPECT_THROW(multimode_hamiltonian(modes, {}, {}, {0.1}), ShapeError);
}

TEST(Hamiltonian, SingleModeRecovery) {
    const ModeSet modes{{1.3}, 1.0, 20};
    CMatrix f(1, 1);
    f << Complex(0.2, -0.1);
    const auto h = multimode_hamiltonian(modes, f, {}, {Complex(0.05, 0.3)});
    const auto ref = two_photon_hamiltonian(1.3, Complex(0.2, -0.1), Complex(0.05, 0.3), {20, 1e-10, 1e-10});
    EXPECT_LE(maxabs(h.entries - ref.entries), 1e-14);
}

TEST(Hamiltonian, BeamSplitterCoupling) {
    const ModeSet modes{{1.0, 1.0}, 1.0, 4};
    CMatrix g = CMatrix::Zero(2, 2);
    g(0, 1) = g(1, 0) = 0.25;
    const auto h = multimode_hamiltonian(modes, {}, g);
    // exchange coupling preserves total number: eigenvalues 1 + n +- 0.25 k
    const auto a = mode_annihilators(modes);
    const CMatrix n = CMatrix(SparseC(a[0].adjoint()) * a[0] + SparseC(a[1].adjoint()) * a[1]);
    EXPECT_LE(maxabs(commutator(h.entries, n)), 1e-14);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h.entries);
    EXPECT_NEAR(es.eigenvalues()(0), 1.0, 1e-14);
}
