#include <gtest/gtest.h>

#include "support.hpp"

using namespace specvar;
using specvar::testing::gaussian;
using specvar::testing::mat;

namespace {

const Matrix kB = mat(3, 3, {3, 0, 0, 0, 1, 0, 0, 0, 0.2});

ProblemSpec soft_problem() {
    ProblemSpec p;
    p.psi = least_squares_psi(kB);
    p.f = scaled(l1_spec(), 0.5);
    p.psi_kind = "least_squares";
    return p;
}

Matrix soft_x0() { return soft_threshold_solve(kB, 0.5); }

ProblemSpec saddle_problem() {
    ProblemSpec p;
    const Matrix X0 = mat(3, 3, {2.5, 0, 0, 0, 0.5, 0, 0, 0, 0});
    const Matrix E = mat(3, 3, {1, 0, 0, 0, 0, 0, 0, 0, 0});
    p.psi = curved_least_squares_psi(kB, Matrix::Zero(3, 3), E, 3.0, X0);
    p.f = scaled(l1_spec(), 0.5);
    p.psi_kind = "curved";
    return p;
}

template <class F>
void expect_error(ErrorKind kind, F&& fn) {
    try {
        fn();
        FAIL() << "no error thrown";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

}  // namespace

TEST(SoftThreshold, Solver) {
    const Matrix X0 = soft_x0();
    const Matrix expect = mat(3, 3, {2.5, 0, 0, 0, 0.5, 0, 0, 0, 0});
    EXPECT_LE((X0 - expect).norm(), 1e-12);
    std::mt19937_64 rng(81);
    const Matrix Bg = specvar::testing::with_sigma(specvar::testing::vec({3, 1, 0.2}), 3, rng);
    const Matrix Xg = soft_threshold_solve(Bg, 0.5);
    EXPECT_NEAR(singular_values(Xg)(0), 2.5, 1e-12);
    EXPECT_NEAR(singular_values(Xg)(2), 0.0, 1e-12);
}

TEST(Stationarity, Examples) {
    const ProblemSpec p = soft_problem();
    const StationarityResult a = stationarity_check(p, soft_x0());
    EXPECT_TRUE(a.stationary);
    EXPECT_LE(a.residual, 1e-9);
    EXPECT_FALSE(stationarity_check(p, kB).stationary);

    ProblemSpec z;
    z.psi = least_squares_psi(Matrix::Zero(3, 2));
    z.f = l1_spec();
    EXPECT_TRUE(stationarity_check(z, Matrix::Zero(3, 2)).stationary);
}

TEST(Stationarity, ObjectiveBeatsRandomPerturbations) {
    const ProblemSpec p = soft_problem();
    const Matrix X0 = soft_x0();
    const double base = p.objective(X0);
    std::mt19937_64 rng(82);
    std::uniform_real_distribution<double> scale(-4.0, 0.0);
    for (int s = 0; s < 10000; ++s) {
        Matrix D = gaussian(3, 3, rng);
        D *= std::pow(10.0, scale(rng)) / D.norm();
        ASSERT_GE(p.objective(X0 + D), base - 1e-12);
    }
}

TEST(Curvature, Examples) {
    const ProblemSpec p = soft_problem();
    const Matrix X0 = soft_x0();
    const Matrix H = mat(3, 3, {1, 0, 0, 0, 0, 0, 0, 0, 0});
    EXPECT_NEAR(curvature(p, X0, H).value(), 1.0, 1e-12);
    std::mt19937_64 rng(83);
    const Matrix G = gaussian(3, 3, rng);
    // off the critical cone
    EXPECT_TRUE(curvature(p, X0, G).is_infinite());
}

TEST(Curvature, Homogeneity) {
    const ProblemSpec p = soft_problem();
    const Matrix X0 = soft_x0();
    CertifyConfig cfg;
    cfg.samples = 40;
    cfg.min_samples = 40;
    const OptimalityCertificate cert = certify(p, X0, cfg);
    for (const CurvatureSample& s : cert.samples) {
        const double q = s.q.value();
        for (double c : {0.3, 2.0, 7.5}) EXPECT_NEAR(curvature(p, X0, c * s.H).value(), c * c * q, 1e-9 * c * c);
    }
}

TEST(Curvature, SandwichedByObjectiveQuotients) {
    const ProblemSpec p = soft_problem();
    const Matrix X0 = soft_x0();
    CertifyConfig cfg;
    cfg.samples = 60;
    cfg.min_samples = 60;
    const OptimalityCertificate cert = certify(p, X0, cfg);
    auto obj = [&](const Matrix& X) { return p.objective(X); };
    OracleConfig oc;
    oc.tau_grid = {1e-2, 1e-3, 1e-4};
    const Matrix zero = Matrix::Zero(3, 3);
    for (const CurvatureSample& s : cert.samples) {
        const double q = s.q.value();
        const auto fixed = quotient2_fixed(obj, X0, zero, s.H, oc);
        const double liminf = quotient2_liminf(obj, X0, zero, s.H, oc);
        EXPECT_LE(q, *std::min_element(fixed.begin(), fixed.end()) + 0.05) << s.generator;
        EXPECT_GE(q, liminf - 0.05) << s.generator;
    }
}

TEST(Certify, SoftThresholdSufficient) {
    const ProblemSpec p = soft_problem();
    CertifyConfig cfg;
    const OptimalityCertificate cert = certify(p, soft_x0(), cfg);
    EXPECT_EQ(cert.verdict, Verdict::SufficientEvidence);
    EXPECT_GE(cert.samples.size(), 100u);
    EXPECT_GE(cert.min_curvature, 0.9);
    EXPECT_LE(cert.stationarity_residual, 1e-9);
    EXPECT_GT(cert.growth_constant_observed, 0.0);
    double m = std::numeric_limits<double>::infinity();
    for (const CurvatureSample& s : cert.samples) {
        EXPECT_NEAR(s.H.norm(), 1.0, 1e-12);
        m = std::min(m, s.q.as_double());
    }
    EXPECT_EQ(m, cert.min_curvature);
    EXPECT_EQ(std::string(to_string(cert.verdict)), "sufficient-evidence");
}

TEST(Certify, SaddleNecessaryViolated) {
    const ProblemSpec p = saddle_problem();
    const Matrix X0 = mat(3, 3, {2.5, 0, 0, 0, 0.5, 0, 0, 0, 0});
    const OptimalityCertificate cert = certify(p, X0);
    EXPECT_TRUE(cert.is_stationary);
    ASSERT_EQ(cert.verdict, Verdict::NecessaryViolated);
    ASSERT_TRUE(cert.counterexample.has_value());
    EXPECT_TRUE(cert.descent_validated);
    EXPECT_NEAR(cert.counterexample_curvature, -2.0, 1e-9);
    const Matrix Y = -p.psi.gradient(X0);
    EXPECT_TRUE(F_critical_cone_contains(p.f, X0, Y, *cert.counterexample));
    EXPECT_LT(cert.counterexample_curvature, -CertifyConfig{}.curvature_tol);
}

TEST(Certify, ShortCircuits) {
    const ProblemSpec p = soft_problem();
    CertifyConfig cfg;
    cfg.samples = 0;
    EXPECT_EQ(certify(p, soft_x0(), cfg).verdict, Verdict::Inconclusive);
    const OptimalityCertificate ns = certify(p, kB);
    EXPECT_EQ(ns.verdict, Verdict::NotStationary);
    EXPECT_TRUE(ns.samples.empty());
}

TEST(Certify, SamplingExhausted) {
    CertifyConfig cfg;
    cfg.max_attempts = 10;
    expect_error(ErrorKind::SamplingExhausted, [&] { certify(soft_problem(), soft_x0(), cfg); });
}

TEST(Certify, BadGradientHookRejected) {
    ProblemSpec p = soft_problem();
    p.psi.gradient = [](const Matrix& X) { return Matrix(X); };
    expect_error(ErrorKind::AssumptionViolated, [&] { certify(p, soft_x0()); });
}

TEST(Certify, Deterministic) {
    CertifyConfig cfg;
    cfg.seed = 5;
    const OptimalityCertificate a = certify(soft_problem(), soft_x0(), cfg);
    const OptimalityCertificate b = certify(soft_problem(), soft_x0(), cfg);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].q.as_double(), b.samples[i].q.as_double());
        EXPECT_EQ((a.samples[i].H - b.samples[i].H).norm(), 0.0);
    }
    EXPECT_EQ(a.growth_constant_observed, b.growth_constant_observed);
}

TEST(Certify, LinearMapMatchesLeastSquares) {
    const Matrix A = Matrix::Identity(9, 9);
    Vector b(9);
    for (Index i = 0; i < 3; ++i)
        for (Index c = 0; c < 3; ++c) b(i * 3 + c) = kB(i, c);
    ProblemSpec p;
    p.psi = linear_least_squares_psi(A, b, 3, 3);
    p.f = scaled(l1_spec(), 0.5);
    const ProblemSpec ref = soft_problem();
    std::mt19937_64 rng(84);
    for (int s = 0; s < 20; ++s) {
        const Matrix X = gaussian(3, 3, rng);
        EXPECT_NEAR(p.psi.value(X), ref.psi.value(X), 1e-12);
        EXPECT_LE((p.psi.gradient(X) - ref.psi.gradient(X)).norm(), 1e-12);
    }
    EXPECT_EQ(certify(p, soft_x0()).verdict, Verdict::SufficientEvidence);
    expect_error(ErrorKind::ShapeError, [&] { linear_least_squares_psi(A, b, 2, 3); });
}

TEST(GrowthProbe, SoftThreshold) {
    const ProblemSpec p = soft_problem();
    const Matrix X0 = soft_x0();
    const double g2 = quadratic_growth_probe(p, X0, 1e-2, 10000, 0);
    const double g3 = quadratic_growth_probe(p, X0, 1e-3, 10000, 0);
    EXPECT_GE(g2, 0.25);
    EXPECT_GE(g3, g2 - 1e-9);
    EXPECT_EQ(g2, quadratic_growth_probe(p, X0, 1e-2, 10000, 0));
}

TEST(GrowthProbe, NonStationaryIsNegative) {
    EXPECT_LT(quadratic_growth_probe(soft_problem(), kB, 1e-2, 2000, 1), 0.0);
    expect_error(ErrorKind::InvalidConfig, [] { quadratic_growth_probe(soft_problem(), kB, 0.0, 10, 1); });
}
