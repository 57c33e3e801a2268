#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specvar/absym.hpp"
#include "specvar/extended_value.hpp"
#include "specvar/sv_calculus.hpp"

namespace specvar {

inline ExtendedValue F_eval(const SpectralFunctionSpec& f, const Matrix& X) {
    return f.eval(svd_ordered(X).sigma);
}

namespace detail {

inline void require_first_order_flags(const SpectralFunctionSpec& f, const char* where) {
    if (!(f.lipschitz_on_domain || (f.convex && f.lsc)))
        throw Error(ErrorKind::AssumptionViolated, std::string(where) + ": f must be Lipschitz on its domain or convex lsc");
}

inline void require_convex(const SpectralFunctionSpec& f, const char* where) {
    if (!(f.convex && f.lsc)) throw Error(ErrorKind::AssumptionViolated, std::string(where) + ": f must be convex and lsc");
}

inline Gauge gauge_or_default(const Matrix& X, const std::optional<SvdDecomposition>& start, const Tolerances& tol) {
    if (!start) return make_gauge(X, tol);
    const Gauge g = make_gauge(*start, tol);
    const Matrix rec = g.svd.U * diag_mn(g.svd.sigma, g.m(), g.n()) * g.svd.V.transpose();
    if (rec.rows() != X.rows() || rec.cols() != X.cols() || (rec - X).norm() > 1e-10 * std::max(1.0, X.norm()))
        throw Error(ErrorKind::InconsistentPartition, "supplied decomposition does not reproduce X");
    return g;
}

}  // namespace detail

inline ExtendedValue F_subderivative(const SpectralFunctionSpec& f, const Matrix& X, const Matrix& H,
                                     const Tolerances& tol = {}, const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, H, "F_subderivative");
    detail::require_first_order_flags(f, "F_subderivative");
    const Gauge g = detail::gauge_or_default(X, start, tol);
    if (!f.eval(g.svd.sigma).is_finite()) throw Error(ErrorKind::AssumptionViolated, "F_subderivative: F(X) is not finite");
    return f.subderivative(g.svd.sigma, sigma_dir1(g, H, tol));
}

inline bool F_subdiff_contains(const SpectralFunctionSpec& f, const Matrix& X, const Matrix& Y) {
    check_same_shape(X, Y, "F_subdiff_contains");
    detail::require_convex(f, "F_subdiff_contains");
    const Vector sx = svd_ordered(X).sigma;
    const Vector sy = svd_ordered(Y).sigma;
    if (!f.subdiff_contains(sx, sy)) return false;
    return std::abs(inner(X, Y) - sx.dot(sy)) <= 1e-9 * (1.0 + X.norm() * Y.norm());
}

inline Matrix F_subdiff_element(const SpectralFunctionSpec& f, const Matrix& X) {
    detail::require_convex(f, "F_subdiff_element");
    const SvdDecomposition s = svd_ordered(X);
    const Vector v = f.subdiff_representative(s.sigma);
    return s.U * diag_mn(v, X.rows(), X.cols()) * s.V.transpose();
}

// (U, V) diagonalizing X and Y with both singular value vectors ordered.
inline Gauge simultaneous_gauge(const Matrix& X, const Matrix& Y, const Tolerances& tol = {},
                                const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, Y, "simultaneous_gauge");
    Gauge g = detail::gauge_or_default(X, start, tol);
    const SingularPartition& p = g.part;
    const Matrix M = g.svd.U.transpose() * Y * g.svd.V;
    for (const Block& b : p.alpha) {
        const Matrix A = M.block(b.start, b.start, b.size, b.size);
        const EigDecomposition e = sym_eig_ordered(A);
        g.svd.U.middleCols(b.start, b.size) = (g.svd.U.middleCols(b.start, b.size) * e.Q).eval();
        g.svd.V.middleCols(b.start, b.size) = (g.svd.V.middleCols(b.start, b.size) * e.Q).eval();
    }
    if (p.beta.size > 0) {
        const Matrix A = M.block(p.r, p.r, p.betahat.size, p.beta.size);
        const SvdDecomposition s = svd_ordered(A);
        g.svd.U.rightCols(p.betahat.size) = (g.svd.U.rightCols(p.betahat.size) * s.U).eval();
        g.svd.V.rightCols(p.beta.size) = (g.svd.V.rightCols(p.beta.size) * s.V).eval();
    }
    const Vector sy = svd_ordered(Y).sigma;
    const Matrix D = g.svd.U.transpose() * Y * g.svd.V - diag_mn(sy, Y.rows(), Y.cols());
    if (D.norm() > 1e-8 * std::max(1.0, Y.norm()))
        throw Error(ErrorKind::NoSimultaneousGauge, "no simultaneous ordered SVD of X and Y within tolerance");
    return g;
}

inline bool F_critical_cone_contains(const SpectralFunctionSpec& f, const Matrix& X, const Matrix& Y, const Matrix& H,
                                     const Tolerances& tol = {}) {
    check_same_shape(X, H, "F_critical_cone_contains");
    if (!F_subdiff_contains(f, X, Y)) throw Error(ErrorKind::NotASubgradient, "F_critical_cone_contains: Y is not in dF(X)");
    const double dF = F_subderivative(f, X, H, tol).value();
    return std::abs(dF - inner(Y, H)) <= 1e-8 * (1.0 + Y.norm() * H.norm());
}

// Block conditions of the critical cone in a simultaneous gauge; advisory only.
struct CriticalConeDiagnostics {
    std::vector<double> alpha_commutators;  // ||Sigma(Y)_ii S_i - S_i Sigma(Y)_ii||
    double beta_residual = 0.0;             // ||A R^T - R A^T|| + ||A^T R - R^T A||
    double duality_gap = 0.0;               // dF(X)(H) - <Y, H>
};

inline CriticalConeDiagnostics critical_cone_diagnostics(const SpectralFunctionSpec& f, const Matrix& X, const Matrix& Y,
                                                         const Matrix& H, const Tolerances& tol = {}) {
    CriticalConeDiagnostics d;
    const Gauge g = simultaneous_gauge(X, Y, tol);
    const DirectionBlocks db = direction_blocks(g, H, tol);
    const Vector sy = svd_ordered(Y).sigma;
    const SingularPartition& p = g.part;
    for (std::size_t i = 0; i < p.alpha.size(); ++i) {
        const Block& b = p.alpha[i];
        const Matrix A = sy.segment(b.start, b.size).asDiagonal();
        const Matrix& S = db.alpha[i].S;
        d.alpha_commutators.push_back((A * S - S * A).norm());
    }
    if (p.beta.size > 0) {
        const Matrix A = diag_mn(sy.segment(p.r, p.beta.size), p.betahat.size, p.beta.size);
        const Matrix& R = db.beta.R;
        d.beta_residual = (A * R.transpose() - R * A.transpose()).norm() + (A.transpose() * R - R.transpose() * A).norm();
    }
    d.duality_gap = F_subderivative(f, X, H, tol).value() - inner(Y, H);
    return d;
}

struct SecondSubderivativeReport {
    ExtendedValue value;
    ExtendedValue d2f_term;
    double alpha_term = 0.0;
    double beta_term = 0.0;
    bool critical = false;
    std::vector<std::string> warnings;
};

namespace detail {

inline double alpha_curvature(const Gauge& g, const ResolventData& rd, const Vector& weights, const Matrix& H) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.part.alpha.size(); ++i) {
        const Block& b = g.part.alpha[i];
        const Matrix G = resolvent_quadratic(rd.blocks[i], H);
        total += 2.0 * weights.segment(b.start, b.size).dot(G.diagonal());
    }
    return total;
}

inline double beta_curvature(const Gauge& g, const Matrix& omega_beta, const Matrix& H) {
    if (g.part.r == 0 || g.part.beta.size == 0) return 0.0;
    return -2.0 * inner(omega_beta, alpha_pinv_sandwich(g, H));
}

}  // namespace detail

inline SecondSubderivativeReport F_second_subderivative(const SpectralFunctionSpec& f, const Matrix& X, const Matrix& Y,
                                                        const Matrix& H, const Tolerances& tol = {},
                                                        const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, Y, "F_second_subderivative");
    check_same_shape(X, H, "F_second_subderivative");
    if (!(f.convex && f.lsc && f.lipschitz_on_domain))
        throw Error(ErrorKind::AssumptionViolated, "F_second_subderivative: f must be convex, lsc and Lipschitz on its domain");
    if (!f.polyhedral && !f.second_subderivative)
        throw Error(ErrorKind::AssumptionViolated, "F_second_subderivative: non-polyhedral f needs a second_subderivative hook");
    if (!F_subdiff_contains(f, X, Y))
        throw Error(ErrorKind::AssumptionViolated, "F_second_subderivative: Y is not in dF(X)");

    const Gauge g = simultaneous_gauge(X, Y, tol, start);
    const SingularPartition& p = g.part;
    const Vector sy = svd_ordered(Y).sigma;
    const ResolventData rd = resolvent_data(g);

    SecondSubderivativeReport rep;
    rep.warnings = conditioning_warnings(g, rd, tol);
    const Vector d1 = sigma_dir1(g, H, tol);
    const double dF = f.subderivative(g.svd.sigma, d1).value();
    rep.critical = std::abs(dF - inner(Y, H)) <= 1e-8 * (1.0 + Y.norm() * H.norm());

    rep.alpha_term = detail::alpha_curvature(g, rd, sy, H);
    if (p.beta.size > 0 && p.r > 0) {
        const Matrix Sb = diag_mn(sy.segment(p.r, p.beta.size), p.betahat.size, p.beta.size);
        const Matrix omega_beta = detail::U_betahat(g) * Sb * detail::V_beta(g).transpose();
        rep.beta_term = detail::beta_curvature(g, omega_beta, H);
    }
    if (!rep.critical) {
        rep.d2f_term = ExtendedValue::infinity();
    } else if (f.polyhedral) {
        rep.d2f_term = 0.0;
    } else {
        rep.d2f_term = f.second_subderivative(g.svd.sigma, sy, d1);
    }
    rep.value = rep.d2f_term + ExtendedValue(rep.alpha_term + rep.beta_term);
    return rep;
}

inline ExtendedValue F_parabolic_subderivative(const SpectralFunctionSpec& f, const Matrix& X, const Matrix& H,
                                               const Matrix& W, const Tolerances& tol = {},
                                               const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, H, "F_parabolic_subderivative");
    check_same_shape(X, W, "F_parabolic_subderivative");
    if (!f.parabolic_subderivative)
        throw Error(ErrorKind::AssumptionViolated, "F_parabolic_subderivative: f has no parabolic hook");
    const Gauge g = detail::gauge_or_default(X, start, tol);
    if (!f.eval(g.svd.sigma).is_finite())
        throw Error(ErrorKind::AssumptionViolated, "F_parabolic_subderivative: F(X) is not finite");
    const DirectionBlocks db = direction_blocks(g, H, tol);
    const Vector d1 = sigma_dir1(db);
    if (!f.subderivative(g.svd.sigma, d1).is_finite())
        throw Error(ErrorKind::AssumptionViolated, "F_parabolic_subderivative: dF(X)(H) is not finite");
    const Vector d2 = sigma_dir2(db, resolvent_data(g), H, W);
    return f.parabolic_subderivative(g.svd.sigma, d1, d2);
}

inline double nuclear_psi_subderivative(const Matrix& X, const Matrix& H, const Tolerances& tol = {},
                                        const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, H, "nuclear_psi_subderivative");
    const Gauge g = detail::gauge_or_default(X, start, tol);
    if (g.part.beta.size == 0) throw Error(ErrorKind::FullRank, "nuclear_psi_subderivative: X has full column rank");
    const Matrix R = detail::U_betahat(g).transpose() * H * detail::V_beta(g);
    return svd_ordered(R).sigma.sum();
}

inline ExtendedValue nuclear_psi_second_epi(const Matrix& X, const Matrix& Omega, const Matrix& H,
                                            const Tolerances& tol = {},
                                            const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, Omega, "nuclear_psi_second_epi");
    check_same_shape(X, H, "nuclear_psi_second_epi");
    const Gauge g = detail::gauge_or_default(X, start, tol);
    const SingularPartition& p = g.part;
    if (p.beta.size == 0) throw Error(ErrorKind::FullRank, "nuclear_psi_second_epi: X has full column rank");
    const Matrix Ub = detail::U_betahat(g);
    const Matrix Vb = detail::V_beta(g);
    const Matrix Z = Ub.transpose() * Omega * Vb;
    const double off = (Omega - Ub * Z * Vb.transpose()).norm();
    if (off > 1e-9 * (1.0 + Omega.norm()) || svd_ordered(Z).sigma(0) > 1.0 + 1e-10)
        throw Error(ErrorKind::NotInRegularSubdiff, "nuclear_psi_second_epi: Omega is not U_bh Z V_b^T with ||Z|| <= 1");
    const double dpsi = svd_ordered(Ub.transpose() * H * Vb).sigma.sum();
    if (std::abs(dpsi - inner(Omega, H)) > 1e-8 * (1.0 + Omega.norm() * H.norm())) return ExtendedValue::infinity();
    return detail::beta_curvature(g, Omega, H);
}

inline double nuclear_phi_second_diff(const Matrix& X, const Matrix& H, const Tolerances& tol = {},
                                      const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, H, "nuclear_phi_second_diff");
    const Gauge g = detail::gauge_or_default(X, start, tol);
    if (g.part.r == 0) throw Error(ErrorKind::RankZero, "nuclear_phi_second_diff: X = 0");
    return detail::alpha_curvature(g, resolvent_data(g), Vector::Ones(g.part.r), H);
}

struct NuclearEpiReport {
    ExtendedValue value;
    double phi_term = 0.0;
    ExtendedValue cone_term;
    double psi_term = 0.0;
};

inline NuclearEpiReport nuclear_second_epi(const Matrix& X, const Matrix& Omega, const Matrix& H,
                                           const Tolerances& tol = {},
                                           const std::optional<SvdDecomposition>& start = {}) {
    check_same_shape(X, Omega, "nuclear_second_epi");
    check_same_shape(X, H, "nuclear_second_epi");
    if (!F_subdiff_contains(l1_spec(), X, Omega))
        throw Error(ErrorKind::NotASubgradient, "nuclear_second_epi: Omega is not in the nuclear norm subdifferential");
    const Gauge g = detail::gauge_or_default(X, start, tol);
    const SingularPartition& p = g.part;
    NuclearEpiReport rep;
    rep.cone_term = 0.0;
    if (p.r > 0) rep.phi_term = detail::alpha_curvature(g, resolvent_data(g), Vector::Ones(p.r), H);
    if (p.beta.size > 0) {
        const Matrix Ua = detail::U_alpha(g);
        const Matrix Va = detail::V_alpha(g);
        const Matrix omega_beta = Omega - Ua * Va.transpose();
        const Matrix R = detail::U_betahat(g).transpose() * H * detail::V_beta(g);
        const double dpsi = svd_ordered(R).sigma.sum();
        if (std::abs(dpsi - inner(omega_beta, H)) > 1e-8 * (1.0 + Omega.norm() * H.norm()))
            rep.cone_term = ExtendedValue::infinity();
        rep.psi_term = detail::beta_curvature(g, omega_beta, H);
    }
    rep.value = ExtendedValue(rep.phi_term) + rep.cone_term + ExtendedValue(rep.psi_term);
    return rep;
}

struct InvariantSetSpec {
    std::string name;
    std::function<bool(const Vector&)> contains;
    std::function<Vector(const Vector&)> project;
    std::function<bool(const Vector&, const Vector&)> tangent_contains;
    std::function<bool(const Vector&, const Vector&, const Vector&)> tangent2_contains;
};

namespace detail {

inline double vec_tol(const Vector& v, double rel) {
    return rel * (1.0 + (v.size() ? v.cwiseAbs().maxCoeff() : 0.0));
}

inline Vector project_l1_ball(const Vector& x, double rho) {
    const Vector a = x.cwiseAbs();
    if (a.sum() <= rho) return x;
    std::vector<double> s(a.data(), a.data() + a.size());
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        cum += s[i];
        const double th = (cum - rho) / static_cast<double>(i + 1);
        if (s[i] - th > 0) theta = th;
    }
    Vector p(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const double mag = std::max(a(i) - theta, 0.0);
        p(i) = x(i) < 0 ? -mag : mag;
    }
    return p;
}

}  // namespace detail

inline InvariantSetSpec whole_space_set() {
    InvariantSetSpec s;
    s.name = "all";
    s.contains = [](const Vector&) { return true; };
    s.project = [](const Vector& x) { return x; };
    s.tangent_contains = [](const Vector&, const Vector&) { return true; };
    s.tangent2_contains = [](const Vector&, const Vector&, const Vector&) { return true; };
    return s;
}

inline InvariantSetSpec origin_set() {
    InvariantSetSpec s;
    s.name = "zero";
    auto is_zero = [](const Vector& v) { return v.size() == 0 || v.cwiseAbs().maxCoeff() <= 1e-12; };
    s.contains = is_zero;
    s.project = [](const Vector& x) { return Vector(Vector::Zero(x.size())); };
    s.tangent_contains = [is_zero](const Vector&, const Vector& w) { return is_zero(w); };
    s.tangent2_contains = [is_zero](const Vector&, const Vector& w, const Vector& u) { return is_zero(w) && is_zero(u); };
    return s;
}

inline InvariantSetSpec linf_ball_set(double rho) {
    if (!(rho > 0)) throw Error(ErrorKind::InvalidConfig, "linf ball: radius must be positive");
    InvariantSetSpec s;
    s.name = "linf:" + std::to_string(rho);
    s.contains = [rho](const Vector& x) { return x.size() == 0 || x.cwiseAbs().maxCoeff() <= rho * (1.0 + 1e-12); };
    s.project = [rho](const Vector& x) { return Vector(x.cwiseMax(-rho).cwiseMin(rho)); };
    s.tangent_contains = [rho](const Vector& x, const Vector& w) {
        const double tw = detail::vec_tol(w, 1e-9);
        for (Index i = 0; i < x.size(); ++i)
            if (std::abs(x(i)) >= rho * (1.0 - 1e-12) && (x(i) > 0 ? w(i) : -w(i)) > tw) return false;
        return true;
    };
    s.tangent2_contains = [rho](const Vector& x, const Vector& w, const Vector& u) {
        const double tw = detail::vec_tol(w, 1e-9);
        const double tu = detail::vec_tol(u, 1e-9);
        for (Index i = 0; i < x.size(); ++i) {
            if (std::abs(x(i)) < rho * (1.0 - 1e-12)) continue;
            const double sw = x(i) > 0 ? w(i) : -w(i);
            const double su = x(i) > 0 ? u(i) : -u(i);
            if (sw > tw) return false;
            if (sw >= -tw && su > tu) return false;
        }
        return true;
    };
    return s;
}

inline InvariantSetSpec l1_ball_set(double rho) {
    if (!(rho > 0)) throw Error(ErrorKind::InvalidConfig, "l1 ball: radius must be positive");
    InvariantSetSpec s;
    s.name = "l1:" + std::to_string(rho);
    const SpectralFunctionSpec g = l1_spec();
    auto active = [rho](const Vector& x) { return x.cwiseAbs().sum() >= rho * (1.0 - 1e-12); };
    s.contains = [rho](const Vector& x) { return x.cwiseAbs().sum() <= rho * (1.0 + 1e-12); };
    s.project = [rho](const Vector& x) { return detail::project_l1_ball(x, rho); };
    s.tangent_contains = [g, active](const Vector& x, const Vector& w) {
        if (!active(x)) return true;
        return g.subderivative(x, w).value() <= detail::vec_tol(w, 1e-9);
    };
    s.tangent2_contains = [g, active](const Vector& x, const Vector& w, const Vector& u) {
        if (!active(x)) return true;
        const double dw = g.subderivative(x, w).value();
        const double tw = detail::vec_tol(w, 1e-9);
        if (dw > tw) return false;
        if (dw < -tw) return true;
        return g.parabolic_subderivative(x, w, u).value() <= detail::vec_tol(u, 1e-9);
    };
    return s;
}

inline InvariantSetSpec set_from_name(const std::string& name) {
    if (name == "all") return whole_space_set();
    if (name == "zero") return origin_set();
    auto radius = [&](const std::string& prefix) {
        const std::string rest = name.substr(prefix.size());
        std::size_t pos = 0;
        double r = 0.0;
        try {
            r = std::stod(rest, &pos);
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidConfig, "cannot parse radius in '" + name + "'");
        }
        if (pos != rest.size()) throw Error(ErrorKind::InvalidConfig, "cannot parse radius in '" + name + "'");
        return r;
    };
    if (name.rfind("linf:", 0) == 0) return linf_ball_set(radius("linf:"));
    if (name.rfind("l1:", 0) == 0) return l1_ball_set(radius("l1:"));
    throw Error(ErrorKind::InvalidConfig, "unknown set name '" + name + "'");
}

inline bool invariant_tangent_contains(const InvariantSetSpec& D, const Matrix& X, const Matrix& H, int order,
                                       const std::optional<Matrix>& W = {}, const Tolerances& tol = {}) {
    check_same_shape(X, H, "invariant_tangent_contains");
    if (order != 1 && order != 2) throw Error(ErrorKind::InvalidConfig, "invariant_tangent_contains: order must be 1 or 2");
    const Gauge g = make_gauge(X, tol);
    if (!D.contains(g.svd.sigma)) throw Error(ErrorKind::NotInSet, "invariant_tangent_contains: X is not in the set");
    const DirectionBlocks db = direction_blocks(g, H, tol);
    const Vector d1 = sigma_dir1(db);
    const bool first = D.tangent_contains(g.svd.sigma, d1);
    if (order == 1 || !first) return first;
    const Matrix Wm = W ? *W : Matrix::Zero(X.rows(), X.cols());
    check_same_shape(X, Wm, "invariant_tangent_contains");
    return D.tangent2_contains(g.svd.sigma, d1, sigma_dir2(db, resolvent_data(g), H, Wm));
}

struct SetDistance {
    double distance = 0.0;
    Matrix nearest;
};

inline SetDistance invariant_set_distance(const InvariantSetSpec& D, const Matrix& X) {
    if (!D.project) throw Error(ErrorKind::ProjectionUnavailable, "invariant_set_distance: set has no projection");
    const SvdDecomposition s = svd_ordered(X);
    const Vector p = D.project(s.sigma);
    SetDistance out;
    out.distance = (s.sigma - p).norm();
    out.nearest = s.U * diag_mn(p, X.rows(), X.cols()) * s.V.transpose();
    return out;
}

}  // namespace specvar
