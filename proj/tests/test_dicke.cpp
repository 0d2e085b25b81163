#include <gtest/gtest.h>

#include <sstream>

#include "trapcalc/trapcalc.hpp"

using namespace trapcalc;

namespace {

double maxabs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

DickeConfig config(std::size_t N, Complex lambda, std::size_t field_dim = 8, double omega = 1.0, double eps = 1.0) {
    DickeConfig c;
    c.N = N;
    c.lambda = lambda;
    c.field_dim = field_dim;
    c.omega = omega;
    c.epsilon = eps;
    return c;
}

std::vector<double> eigenvalues(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

double distance_to_spectrum(const std::vector<double>& spec, double e) {
    double d = 1e300;
    for (double x : spec) d = std::min(d, std::abs(x - e));
    return d;
}

} // namespace

TEST(DickeConfig, Validation) {
    EXPECT_THROW(config(0, 0.0).validate(), InvalidArgument);
    EXPECT_THROW(config(11, 0.0).validate(), InvalidArgument);
    EXPECT_THROW(config(9, 0.0, 16).validate(), InvalidPolicy);
    EXPECT_NO_THROW(config(8, 0.0, 16).validate());
    EXPECT_THROW(config(2, Complex(std::nan(""), 0.0)).validate(), InvalidArgument);
}

TEST(SpinOperators, SingleIonAlgebra) {
    const auto s = spin_operators(config(3, 0.0, 4));
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_LE(maxabs(commutator(s.sigma_plus[k], s.sigma_minus[k]) - 2.0 * s.sigma_z[k]), 1e-15);
        EXPECT_LE(maxabs(commutator(s.sigma_z[k], s.sigma_plus[k]) - s.sigma_plus[k]), 1e-15);
        EXPECT_LE(maxabs(commutator(s.sigma_z[k], s.sigma_minus[k]) + s.sigma_minus[k]), 1e-15);
        EXPECT_LE(maxabs(commutator(s.sigma_z[k], s.a)), 0.0);
        const auto ev = eigenvalues(s.sigma_z[k]);
        EXPECT_NEAR(ev.front(), -0.5, 1e-15);
        EXPECT_NEAR(ev.back(), 0.5, 1e-15);
        for (std::size_t j = 0; j < 3; ++j)
            if (j != k) EXPECT_LE(maxabs(commutator(s.sigma_plus[k], s.sigma_minus[j])), 0.0);
    }
}

TEST(SpinOperators, CollectiveAlgebra) {
    const auto s = spin_operators(config(3, 0.0, 4));
    EXPECT_LE(maxabs(commutator(s.E21, s.E12) - s.E22_minus_E11), 1e-15);
    EXPECT_LE(maxabs(s.E21.adjoint() - s.E12), 0.0);
    EXPECT_LE(maxabs(commutator(s.a, s.E21)), 0.0);
}

TEST(SpinOperators, UpperLevelIsIndexZero) {
    const auto c = config(2, 0.0, 4);
    const auto s = spin_operators(c);
    // both ions excited, field vacuum
    CVector psi = CVector::Zero(static_cast<Eigen::Index>(c.total_dim()));
    psi(0) = 1.0;
    EXPECT_NEAR(expectation(psi, s.E22_minus_E11).real(), 2.0, 1e-15);
    EXPECT_LE((dicke_product_state(c, 0.0, 2) - psi).norm(), 1e-15);
}

TEST(Hamiltonian, Hermitian) {
    const auto h = dicke_hamiltonian(config(3, Complex(0.2, 0.1)));
    EXPECT_LE(hermiticity_defect(h.entries), 1e-15);
}

TEST(Hamiltonian, UncoupledSpectrum) {
    const auto c = config(2, 0.0, 6, 1.3, 0.7);
    std::vector<double> expected;
    for (int n = 0; n < 6; ++n)
        for (int up0 = 0; up0 < 2; ++up0)
            for (int up1 = 0; up1 < 2; ++up1) expected.push_back(1.3 * n + 0.7 * (up0 + up1 - 1.0));
    std::sort(expected.begin(), expected.end());
    const auto ev = eigenvalues(dicke_hamiltonian(c).entries);
    ASSERT_EQ(ev.size(), expected.size());
    for (std::size_t k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev[k], expected[k], 1e-12);
}

TEST(Hamiltonian, ConservesExcitations) {
    for (std::size_t N : {1u, 2u, 4u}) {
        const auto c = config(N, Complex(0.3, -0.2), 10, 1.0, 0.8);
        EXPECT_LE(maxabs(commutator(dicke_hamiltonian(c).entries, excitation_operator(c).entries)), 1e-12) << N;
    }
}

TEST(Hamiltonian, CollectiveSplittingIsIndependentOfN) {
    // on resonance the single-excitation bright doublet sits at omega - N eps / 2 +- |lambda|
    const double lam = 0.15;
    for (std::size_t N = 1; N <= 4; ++N) {
        const auto c = config(N, lam, 6);
        const auto ev = eigenvalues(dicke_hamiltonian(c).entries);
        const double base = 1.0 - 0.5 * static_cast<double>(N);
        EXPECT_LE(distance_to_spectrum(ev, base + lam), 1e-12) << N;
        EXPECT_LE(distance_to_spectrum(ev, base - lam), 1e-12) << N;
        if (N > 1) EXPECT_LE(distance_to_spectrum(ev, base), 1e-12) << N;  // dark states
    }
}

TEST(ProductState, NormalizedWithExpectedExcitation) {
    const auto c = config(3, 0.0, 32);
    const CVector psi = dicke_product_state(c, Complex(0.8, 0.3), 1);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
    EXPECT_NEAR(expectation(psi, excitation_operator(c).entries).real(), 0.73 + 1.0, 1e-10);
    EXPECT_THROW(dicke_product_state(c, 0.0, 4), InvalidArgument);
    EXPECT_THROW(dicke_product_state(config(1, 0.0, 8), 1.0), TruncationRisk);
}

TEST(Evolution, ConservationOverLongTimes) {
    const auto c = config(2, 0.1, 16);
    const CVector psi0 = dicke_product_state(c, Complex(0.6, 0.0), 1);
    const auto samples = dicke_evolve(c, psi0, 50.0, 100);
    ASSERT_EQ(samples.size(), 101u);
    EXPECT_EQ(samples.back().t, 50.0);
    double drift_x = 0.0, drift_e = 0.0;
    for (const auto& s : samples) {
        drift_x = std::max(drift_x, std::abs(s.excitation - samples.front().excitation));
        drift_e = std::max(drift_e, std::abs(s.energy - samples.front().energy));
    }
    EXPECT_LE(drift_x, 1e-10);
    EXPECT_LE(drift_e, 1e-10);
}

TEST(Evolution, FreeFieldStaysCoherent) {
    const auto c = config(1, 0.0, 24);
    const Complex al(0.7, 0.2);
    const auto samples = dicke_evolve(c, dicke_product_state(c, al), 3.0, 6);
    for (const auto& s : samples) {
        EXPECT_LE(std::abs(s.mean_a - al * std::exp(-kI * s.t)), 1e-9);
        EXPECT_LE(s.field_infidelity, 1e-9);
    }
}

TEST(Evolution, VacuumRabiOscillation) {
    const double lam = 0.2;
    const auto c = config(1, lam, 4);
    const auto s = spin_operators(c);
    const auto samples = dicke_evolve(c, dicke_product_state(c, 0.0, 1), 3.14159265358979323846 / (2.0 * lam), 1);
    // a full swap of the excitation into the field: one photon, no coherent amplitude
    EXPECT_NEAR(samples.back().excitation, 1.0, 1e-12);
    EXPECT_LE(std::abs(samples.back().mean_a), 1e-12);
    EXPECT_NEAR(samples.back().field_infidelity, 1.0, 1e-12);
}

TEST(Evolution, Csv) {
    const auto c = config(1, 0.1, 8);
    const std::string csv = dicke_csv(dicke_evolve(c, dicke_product_state(c, 0.3), 1.0, 4));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,re_alpha,im_alpha,infidelity,energy,excitation");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    EXPECT_THROW(dicke_evolve(c, CVector::Zero(3), 1.0, 4), ShapeError);
}

TEST(Semiclassical, ConstantDriveGroundState) {
    const TruncationPolicy p{64, 1e-10, 1e-10};
    for (Complex lam : {Complex(0.3, 0.0), Complex(-0.5, 0.4)}) {
        const double w = 1.4;
        const auto h = semiclassical_field_hamiltonian(w, [lam](double) { return lam; }, p)(0.0);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h.entries);
        EXPECT_NEAR(es.eigenvalues()(0), -std::norm(lam) / w, 1e-12);
        const FockVector ground{es.eigenvectors().col(0), p};
        EXPECT_NEAR(fidelity(ground, coherent_state(-lam / w, p)), 1.0, 1e-12);
    }
}

TEST(Semiclassical, DrivesStayCoherent) {
    const double w = 1.0;
    const std::vector<std::string> drives{"zero",          "const:0.1",       "const:0.05,0.1",    "sin:0.1",
                                          "cos:0.2,1.5",   "gauss:0.3,5,1",   "gauss:0.2,3,2,0.8", "chirp:0.1,0.05",
                                          "sin:0.05,0.5",  "cos:0.1"};
    const TruncationPolicy p{64, 1e-10, 1e-10};
    for (const auto& d : drives) {
        const auto r = driven_coherence_check(w, parse_drive(d, w), Complex(0.5, 0.0), 10.0, 500, p);
        EXPECT_LE(r.max_infidelity, 1e-6) << d;
        EXPECT_EQ(r.trajectory.size(), 501u);
    }
}

TEST(Semiclassical, ResonantDriveGrowsLinearly) {
    const TruncationPolicy p{64, 1e-10, 1e-10};
    const double t = 20.0;
    const auto r = driven_coherence_check(1.0, parse_drive("sin:0.1", 1.0), 0.0, t, 800, p);
    // the rotating part of 0.1 sin t pushes |alpha| at rate 0.05
    EXPECT_NEAR(std::abs(r.trajectory.back().alpha), 0.05 * t, 0.02);
}

TEST(Semiclassical, LeaksAreReported) {
    const TruncationPolicy p{16, 1e-10, 1e-10};
    EXPECT_THROW(driven_coherence_check(1.0, parse_drive("const:2", 1.0), 0.0, 10.0, 200, p), TruncationRisk);
}

TEST(Semiclassical, LabelFlow) {
    // free rotation and a constant drive have closed forms
    const Complex al(0.4, -0.1);
    EXPECT_LE(std::abs(propagate_label(2.0, parse_drive("zero", 2.0), al, 0.0, 1.3, 1.0, 64) - al * std::exp(-2.6 * kI)),
              1e-7);
    const Complex lam(0.2, 0.1);
    const Complex shift = lam / 2.0;
    const Complex exact = (al + shift) * std::exp(-kI * 2.0 * 1.3) - shift;
    EXPECT_LE(std::abs(propagate_label(2.0, parse_drive("const:0.2,0.1", 2.0), al, 0.0, 1.3, 1.0, 64) - exact), 1e-7);
}

TEST(Drives, Parsing) {
    EXPECT_EQ(parse_drive("zero", 1.0)(3.0), Complex{});
    EXPECT_EQ(parse_drive("const:0.5,-0.25", 1.0)(9.0), Complex(0.5, -0.25));
    EXPECT_NEAR(parse_drive("sin:2", 3.0)(0.5).real(), 2.0 * std::sin(1.5), 1e-15);
    EXPECT_NEAR(parse_drive("cos:2,0.5", 3.0)(1.0).real(), 2.0 * std::cos(0.5), 1e-15);
    EXPECT_NEAR(parse_drive("gauss:1,2,0.5", 1.0)(2.0).real(), std::cos(2.0), 1e-15);
    EXPECT_NEAR(parse_drive("chirp:1,0.2", 1.0)(2.0).real(), std::sin(2.0 + 0.4), 1e-15);
    for (const char* bad : {"const", "sin:", "sin:1,2,3", "gauss:1,2,0", "warble:1", "cos:x", "const:1e999"})
        EXPECT_THROW(parse_drive(bad, 1.0), InvalidArgument) << bad;
}

TEST(Drives, TrajectoryCsv) {
    const std::string csv = trajectory_csv({{0.0, Complex(0.1, 0.2), 0.0}});
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "t,re_alpha,im_alpha,infidelity");
    double t = -1, re = 0, im = 0, inf = -1;
    char sep = 0;
    std::istringstream(row) >> t >> sep >> re >> sep >> im >> sep >> inf;
    EXPECT_EQ(t, 0.0);
    EXPECT_EQ(re, 0.1);  // written with round-trip precision
    EXPECT_EQ(im, 0.2);
    EXPECT_EQ(inf, 0.0);
}
