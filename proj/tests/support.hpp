#pragma once

#include <Eigen/Eigenvalues>
#include <random>
#include <vector>

#include "specvar/specvar.hpp"

namespace specvar::testing {

inline Matrix gaussian(Index m, Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix A(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index c = 0; c < n; ++c) A(i, c) = nd(rng);
    return A;
}

inline Matrix with_sigma(const Vector& s, Index m, std::mt19937_64& rng) {
    const Index n = s.size();
    return random_orthogonal(m, rng) * diag_mn(s, m, n) * random_orthogonal(n, rng).transpose();
}

// 5x4 singular value patterns with ties and rank deficiency.
inline Vector repeated_pattern(int k) {
    static const std::vector<std::vector<double>> pats = {
        {3, 3, 1, 0}, {2, 2, 2, 0.5}, {4, 1, 1, 0}, {2, 2, 0, 0}, {1.5, 1.5, 1.5, 1.5},
        {3, 1, 0, 0}, {2, 2, 1, 1},   {5, 0, 0, 0}, {1, 1, 1, 0},   {3, 2, 2, 0.7},
    };
    const auto& p = pats[static_cast<std::size_t>(k) % pats.size()];
    Vector v(static_cast<Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) v(static_cast<Index>(i)) = p[i];
    return v;
}

// Singular values read off the spectrum of the symmetric lift, computed without svd_ordered.
inline Vector lift_singular_values(const Matrix& X) {
    const Index m = X.rows();
    const Index n = X.cols();
    Matrix L = Matrix::Zero(m + n, m + n);
    L.topRightCorner(m, n) = X;
    L.bottomLeftCorner(n, m) = X.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(L, Eigen::EigenvaluesOnly);
    Vector s(n);
    for (Index i = 0; i < n; ++i) s(i) = std::max(0.0, es.eigenvalues()(m + n - 1 - i));
    return s;
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline Matrix mat(Index m, Index n, std::initializer_list<double> v) {
    Matrix out(m, n);
    auto it = v.begin();
    for (Index i = 0; i < m; ++i)
        for (Index c = 0; c < n; ++c) out(i, c) = *it++;
    return out;
}

inline Matrix unit(const Matrix& A) { return A / A.norm(); }

struct CriticalTriple {
    std::string f;
    Matrix X, Y, H;
};

// (X, Y, H) with Y in dF(X) and H in the critical cone, built in a random gauge.
inline CriticalTriple critical_triple(int kind, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Index m = 5, n = 4;
    const Matrix U = random_orthogonal(m, rng);
    const Matrix V = random_orthogonal(n, rng);
    Matrix G = gaussian(m, n, rng);
    Matrix Yg = Matrix::Zero(m, n);
    Vector s(n);
    CriticalTriple out;
    switch (kind % 4) {
        case 0: {
            // nuclear norm, tie plus two-dimensional kernel
            out.f = "l1";
            s << 3.0, 3.0, 0.0, 0.0;
            if (u(rng) < 0.5) s(1) = 2.0;
            const Matrix Q = random_orthogonal(3, rng);
            const Matrix Qh = random_orthogonal(2, rng);
            const double z2 = 0.8 * u(rng);
            Matrix Z = Q.leftCols(2) * Vector(vec({1.0, z2})).asDiagonal() * Qh.transpose();
            Matrix R = Q.leftCols(2) * Vector(vec({0.2 + u(rng), 0.0})).asDiagonal() * Qh.transpose();
            Yg.topLeftCorner(2, 2) = Matrix::Identity(2, 2);
            Yg.block(2, 2, 3, 2) = Z;
            G.block(2, 2, 3, 2) = R;
            break;
        }
        case 1: {
            // nuclear norm, rank one
            out.f = "l1";
            s << 2.0 + u(rng), 0.0, 0.0, 0.0;
            const Matrix Q = random_orthogonal(4, rng);
            const Matrix Qh = random_orthogonal(3, rng);
            Vector z(3);
            z << 1.0, 0.9 * u(rng), 0.0;
            std::sort(z.data(), z.data() + 3, std::greater<>());
            Vector r(3);
            r << 0.3 + u(rng), 0.0, 0.0;
            Yg(0, 0) = 1.0;
            Yg.block(1, 1, 4, 3) = Q.leftCols(3) * z.asDiagonal() * Qh.transpose();
            G.block(1, 1, 4, 3) = Q.leftCols(3) * r.asDiagonal() * Qh.transpose();
            break;
        }
        case 2: {
            // spectral norm at a simple top singular value
            out.f = "linf";
            s << 3.0, 2.0 + 0.5 * u(rng), 1.0, 0.5 * u(rng);
            Yg(0, 0) = 1.0;
            break;
        }
        default: {
            // Ky Fan 2-norm with a gap after the second singular value
            out.f = "kyfan:2";
            s << 3.0 + u(rng), 2.0, 1.0, 0.5 * u(rng);
            Yg(0, 0) = Yg(1, 1) = 1.0;
            break;
        }
    }
    out.X = U * diag_mn(s, m, n) * V.transpose();
    out.Y = U * Yg * V.transpose();
    out.H = U * G * V.transpose();
    out.H /= out.H.norm();
    return out;
}

}  // namespace specvar::testing
