#include <gtest/gtest.h>

#include "support.hpp"

using namespace specvar;
using specvar::testing::gaussian;
using specvar::testing::lift_singular_values;
using specvar::testing::mat;
using specvar::testing::vec;
using specvar::testing::with_sigma;

namespace {

const Matrix kSwap = mat(2, 2, {0, 1, 1, 0});

Matrix diag2(double a, double b) { return mat(2, 2, {a, 0, 0, b}); }

// One-sided second difference along the parabola X + tH + t^2/2 W.
Vector fd_second(const Matrix& X, const Matrix& H, const Matrix& W, double t) {
    auto g = [&](double s) { return lift_singular_values(X + s * H + 0.5 * s * s * W); };
    return (g(2 * t) - 2.0 * g(t) + g(0)) / (t * t);
}

Vector fd_first(const Matrix& X, const Matrix& H, double t) {
    return (lift_singular_values(X + t * H) - lift_singular_values(X)) / t;
}

struct Instance {
    Matrix X, H, W;
};

std::vector<Instance> corpus(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Instance> out;
    for (int k = 0; k < count; ++k) {
        Matrix X = (k % 2 == 0) ? gaussian(5, 4, rng) : with_sigma(specvar::testing::repeated_pattern(k / 2), 5, rng);
        out.push_back({X, gaussian(5, 4, rng), gaussian(5, 4, rng)});
    }
    return out;
}

}  // namespace

TEST(DirectionBlocks, Examples) {
    const DirectionBlocks a = direction_blocks(diag2(2, 1), Matrix::Identity(2, 2));
    EXPECT_EQ(a.gauge.part.t, 2);
    ASSERT_EQ(a.alpha.size(), 2u);
    EXPECT_NEAR(a.alpha[0].S(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(a.alpha[1].S(0, 0), 1.0, 1e-15);
    EXPECT_EQ(a.beta.R.size(), 0);

    const DirectionBlocks b = direction_blocks(Matrix::Identity(2, 2), diag2(3, -1));
    EXPECT_EQ(b.gauge.part.t, 1);
    EXPECT_LE((b.alpha[0].eig.lambda - vec({3, -1})).norm(), 1e-14);
    EXPECT_EQ(b.alpha[0].groups.blocks.size(), 2u);

    const DirectionBlocks c = direction_blocks(diag2(1, 0), kSwap);
    EXPECT_EQ(c.gauge.part.alpha.size(), 1u);
    EXPECT_NEAR(c.alpha[0].S(0, 0), 0.0, 1e-15);
    ASSERT_EQ(c.beta.R.rows(), 1);
    EXPECT_NEAR(c.beta.R(0, 0), 0.0, 1e-15);
    EXPECT_EQ(c.beta.zero_group.size, 1);
    EXPECT_TRUE(c.beta.groups.empty());
}

TEST(DirectionBlocks, ShapeError) {
    try {
        direction_blocks(diag2(1, 0), Matrix::Zero(3, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
    }
}

TEST(SigmaDir1, Examples) {
    EXPECT_LE((sigma_dir1(diag2(2, 1), Matrix::Identity(2, 2)) - vec({1, 1})).norm(), 1e-14);
    const Matrix H = mat(2, 2, {0.3, -1.2, 2.0, 0.7});
    EXPECT_LE((sigma_dir1(Matrix::Zero(2, 2), H) - lift_singular_values(H)).norm(), 1e-12);
    EXPECT_LE(sigma_dir1(diag2(2, 1), kSwap).norm(), 1e-14);
}

TEST(SigmaDir1, MatchesLiftFiniteDifference) {
    for (const Instance& in : corpus(60, 21)) {
        const Vector d = sigma_dir1(in.X, in.H);
        const Vector fd = fd_first(in.X, in.H, 1e-6);
        EXPECT_LE((d - fd).cwiseAbs().maxCoeff(), 1e-4 * (1 + in.H.squaredNorm()));
    }
}

TEST(SigmaDir1, PositiveHomogeneity) {
    for (const Instance& in : corpus(20, 22)) {
        for (double c : {0.5, 3.0}) {
            EXPECT_LE((sigma_dir1(in.X, c * in.H) - c * sigma_dir1(in.X, in.H)).cwiseAbs().maxCoeff(),
                      1e-12 * (1 + in.H.norm()));
        }
    }
}

TEST(SigmaDir1, OrderedWithinBlocks) {
    for (const Instance& in : corpus(20, 23)) {
        const Vector d = sigma_dir1(in.X, in.H);
        const SingularPartition p = partition_singular(svd_ordered(in.X).sigma, 5);
        for (const Block& b : p.alpha)
            for (Index s = b.start; s + 1 < b.end(); ++s) EXPECT_GE(d(s), d(s + 1));
        for (Index s = p.r; s + 1 < 4; ++s) EXPECT_GE(d(s), d(s + 1));
    }
}

TEST(SigmaDir2, Examples) {
    const Matrix Z2 = Matrix::Zero(2, 2);
    EXPECT_LE((sigma_dir2(diag2(2, 1), kSwap, Z2) - vec({2, -2})).norm(), 1e-13);
    EXPECT_NEAR(sigma_dir2(diag2(1, 0), kSwap, Z2)(1), 2.0, 1e-13);
    const Matrix W = mat(2, 2, {0.7, 5.0, -3.0, -0.4});
    EXPECT_LE((sigma_dir2(diag2(2, 1), Z2, W) - vec({0.7, -0.4})).norm(), 1e-14);
}

TEST(SigmaDir2, MatchesLiftSecondDifference) {
    for (const Instance& in : corpus(60, 24)) {
        const Vector d = sigma_dir2(in.X, in.H, in.W);
        const Vector fd = fd_second(in.X, in.H, in.W, 1e-4);
        EXPECT_LE((d - fd).cwiseAbs().maxCoeff(), 2e-2 * (1 + in.H.squaredNorm() + in.W.norm()));
    }
}

TEST(SigmaDir2, FrozenValues) {
    const Matrix X = mat(3, 2, {1.0, 0.5, 0.0, 1.0, 0.25, -0.5});
    const Matrix H = mat(3, 2, {0.2, -1.0, 1.5, 0.3, -0.7, 0.4});
    const Matrix W = mat(3, 2, {0.1, 0.0, -0.2, 0.6, 0.0, 1.0});
    const Vector d1 = sigma_dir1(X, H);
    const Vector d2 = sigma_dir2(X, H, W);
    const Vector fd1 = fd_first(X, H, 1e-7);
    const Vector fd2 = fd_second(X, H, W, 1e-4);
    EXPECT_LE((d1 - fd1).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LE((d2 - fd2).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_NEAR(d1(0), 0.12133150036967177, 1e-12);
    EXPECT_NEAR(d1(1), -0.58009476241719216, 1e-12);
    EXPECT_NEAR(d2(0), 2.0287046660304759, 1e-10);
    EXPECT_NEAR(d2(1), 1.3273950082372796, 1e-10);
}

TEST(SigmaDir2, GaugeInvariance) {
    for (const Instance& in : corpus(20, 25)) {
        const SvdDecomposition s = svd_ordered(in.X);
        const SingularPartition p = partition_singular(s.sigma, 5);
        const Vector d1 = sigma_dir1(in.X, in.H);
        const Vector d2 = sigma_dir2(in.X, in.H, in.W);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Gauge g = make_gauge(gauge_randomize(s, p, seed));
            EXPECT_LE((sigma_dir1(g, in.H) - d1).cwiseAbs().maxCoeff(), 1e-8);
            EXPECT_LE((sigma_dir2(g, in.H, in.W) - d2).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(SigmaDir2, ConditioningWarning) {
    const Matrix X = diag2(1.0, 1.0 - 1e-7);
    const Gauge g = make_gauge(X);
    EXPECT_FALSE(conditioning_warnings(g, resolvent_data(g)).empty());
    const Gauge h = make_gauge(diag2(2, 1));
    EXPECT_TRUE(conditioning_warnings(h, resolvent_data(h)).empty());
}

TEST(EigExpand2, Examples) {
    const EigExpansion a = eig_expand2(diag2(2, 1), kSwap);
    EXPECT_LE(a.first.norm(), 1e-14);
    EXPECT_LE((a.second - vec({2, -2})).norm(), 1e-13);
    const EigExpansion b = eig_expand2(Matrix::Zero(2, 2), diag2(1, -1));
    EXPECT_LE((b.first - vec({1, -1})).norm(), 1e-14);
    EXPECT_LE(b.second.norm(), 1e-14);
    const EigExpansion c = eig_expand2(Matrix::Identity(2, 2), diag2(3, -1));
    EXPECT_LE((c.first - vec({3, -1})).norm(), 1e-14);
    EXPECT_LE(c.second.norm(), 1e-14);
}

TEST(EigExpand2, MatchesSecondDifference) {
    std::mt19937_64 rng(26);
    for (int k = 0; k < 20; ++k) {
        const Matrix Q = random_orthogonal(5, rng);
        const Vector lam = vec({2, 2, 0.5, -1, -1});
        const Matrix A = Q * lam.asDiagonal() * Q.transpose();
        Matrix E = gaussian(5, 5, rng);
        E = 0.5 * (E + E.transpose()).eval();
        auto eigs = [](const Matrix& M) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
            return Vector(es.eigenvalues().reverse());
        };
        const double t = 1e-4;
        const Vector fd1 = (eigs(A + t * E) - eigs(A)) / t;
        const Vector fd2 = (eigs(A + 2 * t * E) - 2.0 * eigs(A + t * E) + eigs(A)) / (t * t);
        const EigExpansion e = eig_expand2(A, E);
        EXPECT_LE((e.first - fd1).cwiseAbs().maxCoeff(), 1e-2);
        EXPECT_LE((e.second - fd2).cwiseAbs().maxCoeff(), 2e-2);
    }
}

TEST(EigExpand2, Asymmetric) {
    try {
        eig_expand2(mat(2, 2, {1, 2, 0, 1}), Matrix::Zero(2, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AsymmetricInput);
    }
}

TEST(ExpansionResidual, Examples) {
    const Vector r = expansion_residual(diag2(2, 1), kSwap, Matrix::Zero(2, 2), 1e-3);
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-9);
    std::mt19937_64 rng(27);
    const Matrix X = gaussian(4, 3, rng);
    EXPECT_EQ(expansion_residual(X, Matrix::Zero(4, 3), Matrix::Zero(4, 3), 1e-3).norm(), 0.0);
}

TEST(ExpansionResidual, DecaysFasterThanTSquared) {
    for (const Instance& in : corpus(40, 28)) {
        std::vector<double> q;
        for (double t : {1e-2, 1e-3, 1e-4})
            q.push_back(expansion_residual(in.X, in.H, in.W, t).cwiseAbs().maxCoeff() / (t * t));
        EXPECT_LE(q[1], q[0] / 5.0);
    }
}

TEST(MinDirection, Examples) {
    const Matrix W1 = min_direction_construct(diag2(2, 1), Matrix::Zero(2, 2), vec({5, 3}));
    EXPECT_LE((sigma_dir2(diag2(2, 1), Matrix::Zero(2, 2), W1) - vec({5, 3})).norm(), 1e-12);
    const Matrix W2 = min_direction_construct(diag2(1, 0), kSwap, vec({0, 2}));
    EXPECT_LE((sigma_dir2(diag2(1, 0), kSwap, W2) - vec({0, 2})).norm(), 1e-12);
}

TEST(MinDirection, RoundTrip) {
    for (const Instance& in : corpus(40, 29)) {
        const Vector z = sigma_dir2(in.X, in.H, in.W);
        const Matrix W = min_direction_construct(in.X, in.H, z);
        EXPECT_LE((sigma_dir2(in.X, in.H, W) - z).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(MinDirection, NotBlockSorted) {
    try {
        min_direction_construct(Matrix::Identity(2, 2), Matrix::Zero(2, 2), vec({1, 2}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotBlockSorted);
    }
}
