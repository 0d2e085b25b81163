#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "trapcalc/trapcalc.hpp"

using namespace trapcalc;

namespace {

const TruncationPolicy kDefault{};

CMatrix D(Complex a, const TruncationPolicy& p = kDefault) { return displacement_operator(a, p).entries; }

double maxabs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST(CoherentLabel, Components) {
    const CoherentLabel l(Complex(0.3, -0.7));
    EXPECT_EQ(l.u(), 0.3);
    EXPECT_EQ(l.v(), -0.7);
    EXPECT_THROW(CoherentLabel(Complex(std::nan(""), 0.0)), InvalidArgument);
}

TEST(Displacement, ZeroIsIdentity) { EXPECT_LE(maxabs(D(0.0) - CMatrix::Identity(128, 128)), 1e-15); }

TEST(Displacement, InverseIsNegative) {
    const Complex a(1.0, 0.5);
    EXPECT_LE(maxabs(D(a) * D(-a) - CMatrix::Identity(128, 128)), 1e-10);
    EXPECT_LE(maxabs(D(a).adjoint() - D(-a)), 1e-10);
}

TEST(Displacement, CompositionExample) {
    // D(1) D(i) = exp((1 * conj(i) - conj(1) * i) / 2) D(1 + i) = e^{-i} D(1 + i)
    const CMatrix lhs = D(1.0) * D(kI);
    const CMatrix rhs = std::exp(-kI) * D(Complex(1.0, 1.0));
    // truncation only disturbs the top of the basis
    EXPECT_LE(maxabs((lhs - rhs).topLeftCorner(60, 60)), 1e-9);
}

TEST(Displacement, CompositionProperty) {
    auto g = oracle::rng(21);
    for (int t = 0; t < 10; ++t) {
        const Complex a = oracle::disk(g, 1.4), b = oracle::disk(g, 1.4);
        const Complex phase = std::exp(0.5 * (a * std::conj(b) - std::conj(a) * b));
        EXPECT_LE(maxabs(CMatrix(D(a) * D(b) - phase * D(a + b)).topLeftCorner(60, 60)), 1e-9) << a << " " << b;
    }
}

TEST(Displacement, NormalOrderedSplit) {
    const auto p = kDefault;
    const auto [a, ad] = ladder_operators(p);
    auto g = oracle::rng(3);
    for (int t = 0; t < 5; ++t) {
        const Complex al = oracle::disk(g, 1.5);
        const CMatrix e1 = CMatrix(al * ad.entries).exp();
        const CMatrix e2 = CMatrix(-std::conj(al) * a.entries).exp();
        // only the low-lying block is free of truncation artifacts
        const CMatrix split = std::exp(-0.5 * std::norm(al)) * e1 * e2;
        const CMatrix d = D(al);
        EXPECT_LE(maxabs((split - d).topLeftCorner(40, 40)), 1e-9) << al;
    }
}

TEST(Displacement, TrustRegion) {
    EXPECT_NO_THROW(D(Complex(2.8, 0.0)));
    try {
        D(Complex(3.0, 0.0));
        FAIL() << "expected TruncationRisk";
    } catch (const TruncationRisk& e) {
        EXPECT_EQ(e.suggested_dim(), coherent_required_dim(3.0));
        EXPECT_GE(e.suggested_dim(), 144u);
    }
}

TEST(Displacement, Unitary) {
    EXPECT_LE(unitarity_defect(D(Complex(2.0, -1.0))), 1e-10);
}

TEST(CoherentState, Coefficients) {
    const auto psi = coherent_state(Complex(1.0), kDefault);
    const double e = std::exp(-0.5);
    EXPECT_NEAR(psi.coeffs(0).real(), e, 1e-15);
    EXPECT_NEAR(psi.coeffs(1).real(), e, 1e-15);
    EXPECT_NEAR(psi.coeffs(2).real(), e / std::sqrt(2.0), 1e-15);
    EXPECT_LE((coherent_state(Complex(0.0), kDefault).coeffs - number_state(0, kDefault).coeffs).norm(), 0.0);
}

TEST(CoherentState, MatchesDisplacedVacuum) {
    auto g = oracle::rng(8);
    for (int t = 0; t < 10; ++t) {
        const Complex al = oracle::disk(g, 2.5);
        const CVector viaD = D(al).col(0);
        EXPECT_LE((coherent_state(al, kDefault).coeffs - viaD).norm(), 1e-10) << al;
    }
}

TEST(CoherentState, Eigenvector) {
    const Complex al(0.0, 1.2);
    const auto psi = coherent_state(al, kDefault);
    const auto [a, ad] = ladder_operators(kDefault);
    EXPECT_LE((a.entries * psi.coeffs - al * psi.coeffs).norm(), 1e-9);
}

TEST(Overlap, Examples) {
    EXPECT_NEAR(std::abs(overlap(Complex(0.4, 0.2), Complex(0.4, 0.2)) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::norm(overlap(Complex(0.0), Complex(2.0))), std::exp(-4.0), 1e-15);
    // <1|i> = exp(conj(1) i - 1/2 - 1/2) = e^{-1 + i}
    EXPECT_LE(std::abs(overlap(Complex(1.0), kI) - std::exp(Complex(-1.0, 1.0))), 1e-15);
}

TEST(Overlap, MatchesVectors) {
    auto g = oracle::rng(99);
    for (int t = 0; t < 50; ++t) {
        const Complex a = oracle::disk(g, 2.0), b = oracle::disk(g, 2.0);
        const Complex vec = inner_product(coherent_state(a, kDefault), coherent_state(b, kDefault));
        EXPECT_LE(std::abs(overlap(a, b) - vec), 1e-10);
    }
}

TEST(IdentityResolution, Dim32Disk8) {
    const auto r = identity_resolution_check({32, 1e-10, 1e-10}, 200, 200, 8.0);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_GE(r.n_keep, 8u);
    EXPECT_NEAR(r.block(0, 0).real(), 1.0, 1e-8);
    EXPECT_LE(std::abs(r.block(0, 1)), 1e-8);
}

TEST(IdentityResolution, TooFewNodesFails) {
    try {
        identity_resolution_check({32, 1e-10, 1e-10}, 6, 200, 8.0);
        FAIL() << "expected QuadratureFailure";
    } catch (const QuadratureFailure& e) {
        EXPECT_GT(e.residual(), 1e-6);
    }
}

TEST(IdentityResolution, DiskCapture) {
    // the vacuum's radial density is e^{-r^2}, so the capture is 1 - e^{-R^2}
    EXPECT_NEAR(disk_capture(0, 2.0), 1.0 - std::exp(-4.0), 1e-14);
    EXPECT_NEAR(disk_capture(1, 2.0), 1.0 - 5.0 * std::exp(-4.0), 1e-14);
}

TEST(Bargmann, Transforms) {
    const auto p = TruncationPolicy{64, 1e-10, 1e-10};
    const std::vector<Complex> zs{0.0, Complex(0.5, 0.1), Complex(-1.0, 2.0), Complex(3.0, 0.0)};
    for (auto v : bargmann_transform(number_state(0, p), zs)) EXPECT_LE(std::abs(v - 1.0), 1e-15);
    for (std::size_t n : {1u, 3u, 6u}) {
        const auto vals = bargmann_transform(number_state(n, p), zs);
        for (std::size_t k = 0; k < zs.size(); ++k)
            EXPECT_LE(std::abs(vals[k] - std::pow(zs[k], static_cast<int>(n)) / std::sqrt(std::tgamma(n + 1.0))),
                      1e-12 * std::max(1.0, std::abs(vals[k])));
    }
    const Complex al(0.6, -0.3);
    const auto vals = bargmann_transform(coherent_state(al, p), zs);
    for (std::size_t k = 0; k < zs.size(); ++k) {
        const Complex expected = std::exp(-0.5 * std::norm(al) + al * zs[k]);
        EXPECT_LE(std::abs(vals[k] - expected), 1e-12 + bargmann_remainder_bound(coherent_state(al, p), zs[k]));
    }
}

TEST(Bargmann, RadiusCheck) {
    const auto p = TruncationPolicy{16, 1e-10, 1e-10};
    EXPECT_THROW(bargmann_transform(number_state(0, p), {Complex(2.5, 0.0)}), TruncationRisk);
}

TEST(Bargmann, InnerProducts) {
    const auto p = TruncationPolicy{32, 1e-10, 1e-10};
    const DiskQuadrature q{120, 64, 7.0};
    for (std::size_t m = 0; m <= 6; ++m)
        for (std::size_t n = 0; n <= 6; ++n) {
            const Complex v = bargmann_inner_product(number_state(m, p), number_state(n, p), q);
            EXPECT_LE(std::abs(v - Complex(m == n ? 1.0 : 0.0)), 1e-8) << m << "," << n;
        }
    const Complex al = 0.7;
    EXPECT_LE(std::abs(bargmann_inner_product(number_state(0, p), coherent_state(al, p), q) - std::exp(-0.5 * 0.49)),
              1e-8);
}

TEST(Bargmann, Isometry) {
    auto g = oracle::rng(17);
    const auto p = TruncationPolicy{32, 1e-10, 1e-10};
    const DiskQuadrature q{120, 64, 7.0};
    for (int t = 0; t < 5; ++t) {
        CVector c1 = CVector::Zero(32), c2 = CVector::Zero(32);
        for (int k = 0; k < 6; ++k) {
            c1(k) = {oracle::uniform(g, -1, 1), oracle::uniform(g, -1, 1)};
            c2(k) = {oracle::uniform(g, -1, 1), oracle::uniform(g, -1, 1)};
        }
        const FockVector a{c1.normalized(), p}, b{c2.normalized(), p};
        EXPECT_LE(std::abs(bargmann_inner_product(a, b, q) - inner_product(a, b)), 1e-7);
        EXPECT_NEAR(bargmann_inner_product(a, a, q).real(), 1.0, 1e-7);
    }
}

TEST(Bargmann, SmallDiskIsRejected) {
    const auto p = TruncationPolicy{32, 1e-10, 1e-10};
    EXPECT_THROW(bargmann_inner_product(number_state(4, p), number_state(4, p), DiskQuadrature{60, 32, 2.0}),
                 QuadratureFailure);
}

TEST(Husimi, Vacuum) {
    ComplexGrid grid{-2, 2, -2, 2, 9, 9};
    const auto q = husimi_q(number_state(0, kDefault), grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
        EXPECT_NEAR(q.values[k], std::exp(-std::norm(grid.point(k))) / kPi, 1e-15);
}

TEST(Husimi, PeakAtLabel) {
    const Complex al(1.0, -0.5);
    ComplexGrid grid{-1, 3, -2.5, 1.5, 41, 41};
    const auto q = husimi_q(coherent_state(al, kDefault), grid);
    const auto it = std::max_element(q.values.begin(), q.values.end());
    EXPECT_LE(std::abs(grid.point(static_cast<std::size_t>(it - q.values.begin())) - al), 1e-12);
}

TEST(Husimi, Normalization) {
    const Complex al(0.5, 0.5);
    ComplexGrid grid{al.real() - 5, al.real() + 5, al.imag() - 5, al.imag() + 5, 121, 121};
    const TruncationPolicy p{256, 1e-10, 1e-10};
    const auto q = husimi_q(coherent_state(al, p), grid);
    EXPECT_NEAR(q.integral(), 1.0, 1e-4);
    const auto qs = husimi_q(generalized_squeezed_state({1, al, SqueezeLabel(Complex(0.3, 0.1))}, p), grid);
    EXPECT_NEAR(qs.integral(), 1.0, 1e-4);
}

TEST(Husimi, CsvHeader) {
    std::ostringstream os;
    husimi_q(number_state(0, kDefault), {0, 1, 0, 1, 2, 2}).write_csv(os);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "re_alpha,im_alpha,value");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
