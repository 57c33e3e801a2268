#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "specvar/errors.hpp"

namespace specvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Tolerances {
    double cluster = 1e-8;
    double rank = 1e-12;
    double gap_warning = 1e-6;
};

struct SvdDecomposition {
    Matrix U;
    Vector sigma;
    Matrix V;
};

struct EigDecomposition {
    Matrix Q;
    Vector lambda;
};

// Contiguous 0-based index range.
struct Block {
    Index start = 0;
    Index size = 0;

    Index end() const { return start + size; }
    bool empty() const { return size == 0; }
    bool contains(Index s) const { return s >= start && s < end(); }
};

struct EigenPartition {
    std::vector<Block> blocks;
    Vector values;                 // one representative (block mean) per block
    std::vector<Index> block_of;   // per index
    std::vector<Index> l;          // 1-based position inside the block
    std::vector<Index> j;          // entries after s inside the block
    std::vector<Index> r;          // block size
};

struct SingularPartition {
    Index m = 0;
    Index n = 0;
    Index r = 0;
    Index t = 0;
    Vector mu;
    std::vector<Block> alpha;
    Block beta;
    Block beta0;
    Block betahat;
    std::vector<Index> block_of;   // alpha block id, or -1 for beta
    std::vector<Index> l;
    std::vector<Index> j;
    std::vector<Index> rs;
};

inline double inner(const Matrix& A, const Matrix& B) {
    return (A.array() * B.array()).sum();
}

inline void check_finite(const Matrix& X, const char* where) {
    if (!X.allFinite()) throw Error(ErrorKind::NonFinite, std::string(where) + ": non-finite entry");
}

inline void check_tall(const Matrix& X, const char* where) {
    if (X.cols() > X.rows())
        throw Error(ErrorKind::ShapeError, std::string(where) + ": requires cols <= rows, transpose first");
}

inline void check_same_shape(const Matrix& A, const Matrix& B, const char* where) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw Error(ErrorKind::ShapeError, std::string(where) + ": shape mismatch");
}

// m x n matrix with v on the leading diagonal.
inline Matrix diag_mn(const Vector& v, Index m, Index n) {
    Matrix D = Matrix::Zero(m, n);
    for (Index i = 0; i < std::min<Index>(v.size(), std::min(m, n)); ++i) D(i, i) = v(i);
    return D;
}

namespace detail {

inline void fix_column_sign(Matrix& A, Index col, Matrix* partner) {
    Index best = 0;
    double mag = -1.0;
    for (Index i = 0; i < A.rows(); ++i) {
        if (std::abs(A(i, col)) > mag) {
            mag = std::abs(A(i, col));
            best = i;
        }
    }
    if (A.rows() > 0 && A(best, col) < 0) {
        A.col(col) *= -1.0;
        if (partner) partner->col(col) *= -1.0;
    }
}

inline EigenPartition group_sorted(const Vector& v, double abs_tol) {
    EigenPartition p;
    const Index n = v.size();
    p.block_of.assign(n, 0);
    p.l.assign(n, 0);
    p.j.assign(n, 0);
    p.r.assign(n, 0);
    Index start = 0;
    for (Index i = 1; i <= n; ++i) {
        if (i == n || v(i - 1) - v(i) > abs_tol) {
            p.blocks.push_back({start, i - start});
            start = i;
        }
    }
    p.values.resize(static_cast<Index>(p.blocks.size()));
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const Block& blk = p.blocks[b];
        p.values(static_cast<Index>(b)) = v.segment(blk.start, blk.size).mean();
        for (Index s = blk.start; s < blk.end(); ++s) {
            p.block_of[s] = static_cast<Index>(b);
            p.l[s] = s - blk.start + 1;
            p.j[s] = blk.end() - s - 1;
            p.r[s] = blk.size;
        }
    }
    return p;
}

inline void check_sorted(const Vector& v, const char* where) {
    const double slack = 1e-15 * std::max(1.0, v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
    for (Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(i - 1) + slack)
            throw Error(ErrorKind::NotSorted, std::string(where) + ": input is not nonincreasing");
    }
}

}  // namespace detail

inline SvdDecomposition svd_ordered(const Matrix& X) {
    check_finite(X, "svd_ordered");
    check_tall(X, "svd_ordered");
    const Index m = X.rows();
    const Index n = X.cols();
    SvdDecomposition out;
    if (n == 0) {
        out.U = Matrix::Identity(m, m);
        out.sigma = Vector(0);
        out.V = Matrix(0, 0);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.U = svd.matrixU();
    out.sigma = svd.singularValues();
    out.V = svd.matrixV();
    for (Index c = 0; c < n; ++c) detail::fix_column_sign(out.U, c, &out.V);
    for (Index c = n; c < m; ++c) detail::fix_column_sign(out.U, c, nullptr);
    return out;
}

inline EigDecomposition sym_eig_ordered(const Matrix& A) {
    check_finite(A, "sym_eig_ordered");
    if (A.rows() != A.cols()) throw Error(ErrorKind::ShapeError, "sym_eig_ordered: matrix is not square");
    const Index n = A.rows();
    EigDecomposition out;
    if (n == 0) {
        out.Q = Matrix(0, 0);
        out.lambda = Vector(0);
        return out;
    }
    const Matrix S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    out.lambda = es.eigenvalues().reverse();
    out.Q = es.eigenvectors().rowwise().reverse();
    for (Index c = 0; c < n; ++c) detail::fix_column_sign(out.Q, c, nullptr);
    return out;
}

inline Vector singular_values(const Matrix& X) {
    if (X.cols() > X.rows()) return svd_ordered(X.transpose()).sigma;
    return svd_ordered(X).sigma;
}

inline Matrix lift(const Matrix& X) {
    check_tall(X, "lift");
    const Index m = X.rows();
    const Index n = X.cols();
    Matrix B = Matrix::Zero(m + n, m + n);
    B.topRightCorner(m, n) = X;
    B.bottomLeftCorner(n, m) = X.transpose();
    return B;
}

inline EigenPartition partition_eigen(const Vector& lambda, double cluster_tol = 1e-8) {
    detail::check_sorted(lambda, "partition_eigen");
    const double scale = std::max(1.0, lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0);
    return detail::group_sorted(lambda, cluster_tol * scale);
}

inline SingularPartition partition_singular(const Vector& sigma, Index m, double cluster_tol = 1e-8,
                                            double rank_tol = 1e-12) {
    detail::check_sorted(sigma, "partition_singular");
    const Index n = sigma.size();
    if (m < n) throw Error(ErrorKind::ShapeError, "partition_singular: m < n");
    const double scale = std::max(1.0, n ? sigma(0) : 0.0);
    SingularPartition p;
    p.m = m;
    p.n = n;
    while (p.r < n && sigma(p.r) > rank_tol * scale) ++p.r;
    EigenPartition head = detail::group_sorted(sigma.head(p.r), cluster_tol * scale);
    p.alpha = head.blocks;
    p.mu = head.values;
    p.t = static_cast<Index>(p.alpha.size());
    p.beta = {p.r, n - p.r};
    p.beta0 = {n, m - n};
    p.betahat = {p.r, m - p.r};
    p.block_of.assign(n, -1);
    p.l.assign(n, 0);
    p.j.assign(n, 0);
    p.rs.assign(n, 0);
    for (Index s = 0; s < p.r; ++s) {
        p.block_of[s] = head.block_of[s];
        p.l[s] = head.l[s];
        p.j[s] = head.j[s];
        p.rs[s] = head.r[s];
    }
    for (Index s = p.r; s < n; ++s) {
        p.l[s] = s - p.r + 1;
        p.j[s] = n - s - 1;
        p.rs[s] = n - p.r;
    }
    return p;
}

inline SingularPartition partition_values(const Vector& v, double cluster_tol = 1e-8, double rank_tol = 1e-12) {
    return partition_singular(v, v.size(), cluster_tol, rank_tol);
}

inline Matrix random_orthogonal(Index k, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix A(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index c = 0; c < k; ++c) A(i, c) = nd(rng);
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index c = 0; c < k; ++c)
        if (R(c, c) < 0) Q.col(c) *= -1.0;
    return Q;
}

inline void check_consistent(const SvdDecomposition& svd, const SingularPartition& part) {
    const Index m = svd.U.rows();
    const Index n = svd.sigma.size();
    bool ok = svd.U.cols() == m && svd.V.rows() == n && svd.V.cols() == n && part.m == m && part.n == n &&
              part.r <= n && static_cast<Index>(part.block_of.size()) == n;
    Index next = 0;
    for (const Block& b : part.alpha) {
        ok = ok && b.start == next && b.size > 0;
        next = b.end();
    }
    ok = ok && next == part.r && part.beta.start == part.r && part.beta.size == n - part.r;
    if (!ok) throw Error(ErrorKind::InconsistentPartition, "svd and partition do not describe the same matrix");
}

inline SvdDecomposition gauge_randomize(const SvdDecomposition& svd, const SingularPartition& part,
                                        std::uint64_t seed) {
    check_consistent(svd, part);
    std::mt19937_64 rng(seed);
    SvdDecomposition out = svd;
    for (const Block& b : part.alpha) {
        const Matrix Q = random_orthogonal(b.size, rng);
        out.U.middleCols(b.start, b.size) = (svd.U.middleCols(b.start, b.size) * Q).eval();
        out.V.middleCols(b.start, b.size) = (svd.V.middleCols(b.start, b.size) * Q).eval();
    }
    if (part.beta.size > 0) {
        const Matrix Qv = random_orthogonal(part.beta.size, rng);
        out.V.middleCols(part.beta.start, part.beta.size) =
            (svd.V.middleCols(part.beta.start, part.beta.size) * Qv).eval();
    }
    if (part.betahat.size > 0) {
        const Matrix Qu = random_orthogonal(part.betahat.size, rng);
        out.U.middleCols(part.betahat.start, part.betahat.size) =
            (svd.U.middleCols(part.betahat.start, part.betahat.size) * Qu).eval();
    }
    return out;
}

}  // namespace specvar
