#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "specvar/matrix_core.hpp"

namespace specvar {

// An SVD of X together with its multiplicity partition.
struct Gauge {
    SvdDecomposition svd;
    SingularPartition part;

    Index m() const { return svd.U.rows(); }
    Index n() const { return svd.sigma.size(); }
};

inline Gauge make_gauge(const SvdDecomposition& svd, const Tolerances& tol = {}) {
    Gauge g{svd, partition_singular(svd.sigma, svd.U.rows(), tol.cluster, tol.rank)};
    return g;
}

inline Gauge make_gauge(const Matrix& X, const Tolerances& tol = {}) {
    return make_gauge(svd_ordered(X), tol);
}

struct AlphaDirection {
    Matrix S;
    EigDecomposition eig;
    EigenPartition groups;
};

struct BetaDirection {
    Matrix R;                  // |betahat| x |beta|
    Matrix Q;                  // |betahat| x |betahat|
    Matrix Qhat;               // |beta| x |beta|
    Vector eta;                // sigma(R)
    std::vector<Block> groups; // nonzero groups, positions inside beta
    Block zero_group;
};

struct DirectionBlocks {
    Gauge gauge;
    std::vector<AlphaDirection> alpha;
    BetaDirection beta;
    std::vector<Index> ltilde;  // 1-based position inside the second-level group
    double second_level_tol = 0.0;
};

namespace detail {

inline Matrix alpha_cols(const Matrix& M, const Block& b) { return M.middleCols(b.start, b.size); }

// Blocks of the gauge that feed the beta formulas.
inline Matrix U_betahat(const Gauge& g) { return g.svd.U.rightCols(g.part.betahat.size); }
inline Matrix V_beta(const Gauge& g) { return g.svd.V.rightCols(g.part.beta.size); }
inline Matrix U_alpha(const Gauge& g) { return g.svd.U.leftCols(g.part.r); }
inline Matrix V_alpha(const Gauge& g) { return g.svd.V.leftCols(g.part.r); }

inline Vector mu_expanded(const Gauge& g) {
    Vector s(g.part.r);
    for (std::size_t i = 0; i < g.part.alpha.size(); ++i) {
        const Block& b = g.part.alpha[i];
        s.segment(b.start, b.size).setConstant(g.part.mu(static_cast<Index>(i)));
    }
    return s;
}

// H V_alpha Sigma_alpha^{-1} U_alpha^T H
inline Matrix alpha_pinv_sandwich(const Gauge& g, const Matrix& H) {
    const Vector inv = mu_expanded(g).cwiseInverse();
    return H * V_alpha(g) * inv.asDiagonal() * U_alpha(g).transpose() * H;
}

}  // namespace detail

inline DirectionBlocks direction_blocks(const Gauge& g, const Matrix& H, const Tolerances& tol = {}) {
    if (H.rows() != g.m() || H.cols() != g.n()) throw Error(ErrorKind::ShapeError, "direction_blocks: shape mismatch");
    check_finite(H, "direction_blocks");
    DirectionBlocks db;
    db.gauge = g;
    const SingularPartition& p = g.part;
    const Index n = g.n();

    double scale = 0.0;
    for (const Block& b : p.alpha) {
        AlphaDirection a;
        const Matrix Ua = detail::alpha_cols(g.svd.U, b);
        const Matrix Va = detail::alpha_cols(g.svd.V, b);
        const Matrix C = Ua.transpose() * H * Va;
        a.S = 0.5 * (C + C.transpose());
        a.eig = sym_eig_ordered(a.S);
        scale = std::max(scale, a.eig.lambda.cwiseAbs().maxCoeff());
        db.alpha.push_back(std::move(a));
    }
    BetaDirection& bd = db.beta;
    if (p.beta.size > 0) {
        bd.R = detail::U_betahat(g).transpose() * H * detail::V_beta(g);
        const SvdDecomposition rs = svd_ordered(bd.R);
        bd.Q = rs.U;
        bd.Qhat = rs.V;
        bd.eta = rs.sigma;
        scale = std::max(scale, bd.eta(0));
    } else {
        bd.R = Matrix(p.betahat.size, 0);
        bd.Q = Matrix::Identity(p.betahat.size, p.betahat.size);
        bd.Qhat = Matrix(0, 0);
        bd.eta = Vector(0);
    }

    db.second_level_tol = tol.cluster * scale;
    db.ltilde.assign(n, 0);
    for (std::size_t i = 0; i < p.alpha.size(); ++i) {
        AlphaDirection& a = db.alpha[i];
        a.groups = detail::group_sorted(a.eig.lambda, db.second_level_tol);
        for (Index k = 0; k < p.alpha[i].size; ++k) db.ltilde[p.alpha[i].start + k] = a.groups.l[k];
    }
    if (p.beta.size > 0) {
        Index nz = 0;
        while (nz < bd.eta.size() && bd.eta(nz) > tol.rank * scale) ++nz;
        EigenPartition gp = detail::group_sorted(bd.eta.head(nz), db.second_level_tol);
        bd.groups = gp.blocks;
        bd.zero_group = {nz, p.beta.size - nz};
        for (Index k = 0; k < nz; ++k) db.ltilde[p.r + k] = gp.l[k];
        for (Index k = nz; k < p.beta.size; ++k) db.ltilde[p.r + k] = k - nz + 1;
    }
    return db;
}

inline DirectionBlocks direction_blocks(const Matrix& X, const Matrix& H, const Tolerances& tol = {}) {
    check_same_shape(X, H, "direction_blocks");
    return direction_blocks(make_gauge(X, tol), H, tol);
}

inline Vector sigma_dir1(const DirectionBlocks& db) {
    const SingularPartition& p = db.gauge.part;
    Vector d(db.gauge.n());
    for (std::size_t i = 0; i < p.alpha.size(); ++i)
        d.segment(p.alpha[i].start, p.alpha[i].size) = db.alpha[i].eig.lambda;
    if (p.beta.size > 0) d.segment(p.r, p.beta.size) = db.beta.eta;
    return d;
}

inline Vector sigma_dir1(const Gauge& g, const Matrix& H, const Tolerances& tol = {}) {
    return sigma_dir1(direction_blocks(g, H, tol));
}

inline Vector sigma_dir1(const Matrix& X, const Matrix& H, const Tolerances& tol = {}) {
    return sigma_dir1(direction_blocks(X, H, tol));
}

struct ResolventBlock {
    Block alpha;
    double mu = 0.0;
    Matrix P_alpha;
    Matrix P_c;
    Vector lambda_c;
    double min_gap = 0.0;
};

struct ResolventData {
    Matrix P;
    Vector lambda;
    std::vector<ResolventBlock> blocks;
    double min_gap = std::numeric_limits<double>::infinity();
};

// Eigenvectors of lift(X): columns (u_j; v_j)/sqrt2, (u_j; 0) for j >= n, (-u_j; v_j)/sqrt2.
inline ResolventData resolvent_data(const Gauge& g) {
    const Index m = g.m();
    const Index n = g.n();
    const SingularPartition& p = g.part;
    const double h = 1.0 / std::sqrt(2.0);
    ResolventData rd;
    rd.P = Matrix::Zero(m + n, m + n);
    rd.lambda = Vector::Zero(m + n);
    const Vector mu = detail::mu_expanded(g);
    for (Index c = 0; c < n; ++c) {
        rd.P.block(0, c, m, 1) = h * g.svd.U.col(c);
        rd.P.block(m, c, n, 1) = h * g.svd.V.col(c);
        rd.P.block(0, m + c, m, 1) = -h * g.svd.U.col(c);
        rd.P.block(m, m + c, n, 1) = h * g.svd.V.col(c);
        if (c < p.r) {
            rd.lambda(c) = mu(c);
            rd.lambda(m + c) = -mu(c);
        }
    }
    for (Index c = n; c < m; ++c) rd.P.block(0, c, m, 1) = g.svd.U.col(c);

    for (std::size_t i = 0; i < p.alpha.size(); ++i) {
        ResolventBlock rb;
        rb.alpha = p.alpha[i];
        rb.mu = p.mu(static_cast<Index>(i));
        rb.P_alpha = rd.P.middleCols(rb.alpha.start, rb.alpha.size);
        const Index nc = m + n - rb.alpha.size;
        rb.P_c.resize(m + n, nc);
        rb.lambda_c.resize(nc);
        Index k = 0;
        for (Index c = 0; c < m + n; ++c) {
            if (rb.alpha.contains(c)) continue;
            rb.P_c.col(k) = rd.P.col(c);
            rb.lambda_c(k) = rd.lambda(c);
            ++k;
        }
        rb.min_gap = (rb.mu - rb.lambda_c.array()).abs().minCoeff();
        rd.min_gap = std::min(rd.min_gap, rb.min_gap);
        rd.blocks.push_back(std::move(rb));
    }
    return rd;
}

// P_a^T B(H) P_c (mu I - Lambda)^{-1} P_c^T B(H) P_a
inline Matrix resolvent_quadratic(const ResolventBlock& rb, const Matrix& H) {
    const Index m = H.rows();
    const Index n = H.cols();
    Matrix BP(m + n, rb.alpha.size);
    BP.topRows(m) = H * rb.P_alpha.bottomRows(n);
    BP.bottomRows(n) = H.transpose() * rb.P_alpha.topRows(m);
    const Matrix C = rb.P_c.transpose() * BP;
    const Vector d = (rb.mu - rb.lambda_c.array()).inverse().matrix();
    Matrix G = C.transpose() * d.asDiagonal() * C;
    return 0.5 * (G + G.transpose());
}

inline std::vector<std::string> conditioning_warnings(const Gauge& g, const ResolventData& rd,
                                                      const Tolerances& tol = {}) {
    std::vector<std::string> w;
    const double s1 = g.n() ? g.svd.sigma(0) : 0.0;
    if (rd.min_gap < tol.gap_warning * std::max(1.0, s1)) {
        std::ostringstream os;
        os.precision(3);
        os << "resolvent spectral gap " << rd.min_gap << " below " << tol.gap_warning * std::max(1.0, s1);
        w.push_back(os.str());
    }
    return w;
}

inline Vector sigma_dir2(const DirectionBlocks& db, const ResolventData& rd, const Matrix& H, const Matrix& W) {
    const Gauge& g = db.gauge;
    const SingularPartition& p = g.part;
    if (W.rows() != g.m() || W.cols() != g.n() || H.rows() != g.m() || H.cols() != g.n())
        throw Error(ErrorKind::ShapeError, "sigma_dir2: shape mismatch");
    check_finite(W, "sigma_dir2");
    Vector out(g.n());

    for (std::size_t i = 0; i < p.alpha.size(); ++i) {
        const Block& b = p.alpha[i];
        const AlphaDirection& a = db.alpha[i];
        const Matrix C = detail::alpha_cols(g.svd.U, b).transpose() * W * detail::alpha_cols(g.svd.V, b);
        const Matrix M = 0.5 * (C + C.transpose()) + 2.0 * resolvent_quadratic(rd.blocks[i], H);
        for (const Block& grp : a.groups.blocks) {
            const Matrix Qj = a.eig.Q.middleCols(grp.start, grp.size);
            out.segment(b.start + grp.start, grp.size) = sym_eig_ordered(Qj.transpose() * M * Qj).lambda;
        }
    }

    if (p.beta.size > 0) {
        const BetaDirection& bd = db.beta;
        const Matrix Ub = detail::U_betahat(g);
        const Matrix Vb = detail::V_beta(g);
        Matrix MR = Ub.transpose() * W * Vb;
        if (p.r > 0) MR -= 2.0 * Ub.transpose() * detail::alpha_pinv_sandwich(g, H) * Vb;
        for (const Block& grp : bd.groups) {
            const Matrix T = bd.Q.middleCols(grp.start, grp.size).transpose() * MR *
                             bd.Qhat.middleCols(grp.start, grp.size);
            out.segment(p.r + grp.start, grp.size) = sym_eig_ordered(0.5 * (T + T.transpose())).lambda;
        }
        const Block& z = bd.zero_group;
        if (z.size > 0) {
            const Index rows = p.betahat.size - z.start;
            const Matrix T = bd.Q.rightCols(rows).transpose() * MR * bd.Qhat.middleCols(z.start, z.size);
            out.segment(p.r + z.start, z.size) = svd_ordered(T).sigma;
        }
    }
    return out;
}

inline Vector sigma_dir2(const Gauge& g, const Matrix& H, const Matrix& W, const Tolerances& tol = {}) {
    const DirectionBlocks db = direction_blocks(g, H, tol);
    return sigma_dir2(db, resolvent_data(g), H, W);
}

inline Vector sigma_dir2(const Matrix& X, const Matrix& H, const Matrix& W, const Tolerances& tol = {}) {
    check_same_shape(X, H, "sigma_dir2");
    check_same_shape(X, W, "sigma_dir2");
    return sigma_dir2(make_gauge(X, tol), H, W, tol);
}

struct EigExpansion {
    Vector first;
    Vector second;
};

inline EigExpansion eig_expand2(const Matrix& A, const Matrix& E, const Tolerances& tol = {}) {
    if (A.rows() != A.cols() || E.rows() != E.cols() || A.rows() != E.rows())
        throw Error(ErrorKind::ShapeError, "eig_expand2: square matrices of equal order required");
    check_finite(A, "eig_expand2");
    check_finite(E, "eig_expand2");
    auto asym = [](const Matrix& M) {
        return (M - M.transpose()).norm() > 1e-12 * std::max(1.0, M.norm());
    };
    if (asym(A) || asym(E)) throw Error(ErrorKind::AsymmetricInput, "eig_expand2: input is not symmetric");
    const Index n = A.rows();
    const EigDecomposition ed = sym_eig_ordered(A);
    const EigenPartition part = partition_eigen(ed.lambda, tol.cluster);
    const Matrix Es = 0.5 * (E + E.transpose());
    EigExpansion out{Vector(n), Vector(n)};

    std::vector<EigDecomposition> firsts;
    double scale = 0.0;
    for (const Block& b : part.blocks) {
        const Matrix Ub = ed.Q.middleCols(b.start, b.size);
        firsts.push_back(sym_eig_ordered(Ub.transpose() * Es * Ub));
        scale = std::max(scale, firsts.back().lambda.cwiseAbs().maxCoeff());
    }
    for (std::size_t bi = 0; bi < part.blocks.size(); ++bi) {
        const Block& b = part.blocks[bi];
        const double lam = part.values(static_cast<Index>(bi));
        const Matrix Ub = ed.Q.middleCols(b.start, b.size);
        Matrix Uc(n, n - b.size);
        Vector dc(n - b.size);
        Index k = 0;
        for (std::size_t bj = 0; bj < part.blocks.size(); ++bj) {
            if (bj == bi) continue;
            const Block& o = part.blocks[bj];
            Uc.middleCols(k, o.size) = ed.Q.middleCols(o.start, o.size);
            dc.segment(k, o.size).setConstant(1.0 / (lam - part.values(static_cast<Index>(bj))));
            k += o.size;
        }
        const Matrix C = Uc.transpose() * Es * Ub;
        const Matrix G = C.transpose() * dc.asDiagonal() * C;
        const EigDecomposition& f = firsts[bi];
        out.first.segment(b.start, b.size) = f.lambda;
        const EigenPartition grp = detail::group_sorted(f.lambda, tol.cluster * scale);
        for (const Block& gb : grp.blocks) {
            const Matrix Qj = f.Q.middleCols(gb.start, gb.size);
            out.second.segment(b.start + gb.start, gb.size) =
                sym_eig_ordered(2.0 * Qj.transpose() * G * Qj).lambda;
        }
    }
    return out;
}

inline Vector expansion_residual(const Matrix& X, const Matrix& H, const Matrix& W, double t,
                                 const Tolerances& tol = {}) {
    if (!(t > 0)) throw Error(ErrorKind::AssumptionViolated, "expansion_residual: t must be positive");
    check_same_shape(X, H, "expansion_residual");
    check_same_shape(X, W, "expansion_residual");
    const Gauge g = make_gauge(X, tol);
    const DirectionBlocks db = direction_blocks(g, H, tol);
    const Vector d1 = sigma_dir1(db);
    const Vector d2 = sigma_dir2(db, resolvent_data(g), H, W);
    const Matrix Xt = X + t * H + 0.5 * t * t * W;
    return svd_ordered(Xt).sigma - (g.svd.sigma + t * d1 + 0.5 * t * t * d2);
}

inline Matrix min_direction_construct(const Gauge& g, const Matrix& H, const Vector& zbar,
                                      const Tolerances& tol = {}) {
    if (zbar.size() != g.n()) throw Error(ErrorKind::ShapeError, "min_direction_construct: zbar has wrong length");
    const DirectionBlocks db = direction_blocks(g, H, tol);
    const SingularPartition& p = g.part;
    const double slack = 1e-12 * std::max(1.0, zbar.size() ? zbar.cwiseAbs().maxCoeff() : 0.0);
    auto require_sorted = [&](Index start, Index size) {
        for (Index k = start + 1; k < start + size; ++k)
            if (zbar(k) > zbar(k - 1) + slack)
                throw Error(ErrorKind::NotBlockSorted, "min_direction_construct: zbar not nonincreasing in a block");
    };
    for (std::size_t i = 0; i < p.alpha.size(); ++i)
        for (const Block& grp : db.alpha[i].groups.blocks) require_sorted(p.alpha[i].start + grp.start, grp.size);
    for (const Block& grp : db.beta.groups) require_sorted(p.r + grp.start, grp.size);
    const Block& z = db.beta.zero_group;
    if (z.size > 0) {
        require_sorted(p.r + z.start, z.size);
        if (zbar(p.r + z.start + z.size - 1) < -slack)
            throw Error(ErrorKind::NotBlockSorted, "min_direction_construct: zero group of R needs zbar >= 0");
    }

    const ResolventData rd = resolvent_data(g);
    const Index m = g.m();
    const Index n = g.n();
    Matrix Wg = Matrix::Zero(m, n);
    for (std::size_t i = 0; i < p.alpha.size(); ++i) {
        const Block& b = p.alpha[i];
        const Matrix& Q = db.alpha[i].eig.Q;
        const Matrix A = Q * zbar.segment(b.start, b.size).asDiagonal() * Q.transpose();
        Wg.block(b.start, b.start, b.size, b.size) = A - 2.0 * resolvent_quadratic(rd.blocks[i], H);
    }
    if (p.beta.size > 0) {
        const Matrix D = diag_mn(zbar.segment(p.r, p.beta.size), p.betahat.size, p.beta.size);
        Matrix Wb = db.beta.Q * D * db.beta.Qhat.transpose();
        if (p.r > 0)
            Wb += 2.0 * detail::U_betahat(g).transpose() * detail::alpha_pinv_sandwich(g, H) * detail::V_beta(g);
        Wg.block(p.r, p.r, p.betahat.size, p.beta.size) = Wb;
    }
    return g.svd.U * Wg * g.svd.V.transpose();
}

inline Matrix min_direction_construct(const Matrix& X, const Matrix& H, const Vector& zbar,
                                      const Tolerances& tol = {}) {
    check_same_shape(X, H, "min_direction_construct");
    return min_direction_construct(make_gauge(X, tol), H, zbar, tol);
}

}  // namespace specvar
