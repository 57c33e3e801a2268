#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "specvar/errors.hpp"
#include "specvar/matrix_core.hpp"
#include "specvar/parallel.hpp"

namespace specvar {

using MatrixFunction = std::function<double(const Matrix&)>;

struct OracleConfig {
    std::vector<double> tau_grid{1e-1, 1e-2, 1e-3, 1e-4};
    int samples_per_tau = 64;
    double radius_factor = 2.0;
    std::uint64_t seed = 0;
    bool include_guided = true;

    void validate() const {
        if (tau_grid.empty()) throw Error(ErrorKind::InvalidConfig, "OracleConfig: empty tau grid");
        for (std::size_t i = 0; i < tau_grid.size(); ++i) {
            if (!(tau_grid[i] > 0) || !std::isfinite(tau_grid[i]))
                throw Error(ErrorKind::InvalidConfig, "OracleConfig: tau must be positive");
            if (i > 0 && !(tau_grid[i] < tau_grid[i - 1]))
                throw Error(ErrorKind::InvalidConfig, "OracleConfig: tau grid must be strictly decreasing");
        }
        if (samples_per_tau < 1) throw Error(ErrorKind::InvalidConfig, "OracleConfig: samples_per_tau must be >= 1");
        if (!(radius_factor >= 0)) throw Error(ErrorKind::InvalidConfig, "OracleConfig: radius factor must be >= 0");
    }
};

namespace detail {

inline double base_value(const MatrixFunction& g, const Matrix& x) {
    const double gx = g(x);
    if (!std::isfinite(gx)) throw Error(ErrorKind::NonFiniteBase, "oracle: g(x) is not finite");
    return gx;
}

inline double second_quotient(const MatrixFunction& g, const Matrix& x, double gx, const Matrix& v, const Matrix& w,
                              double tau) {
    const double val = g(x + tau * w);
    const double q = (val - gx - tau * inner(v, w)) / (0.5 * tau * tau);
    return std::isnan(q) ? std::numeric_limits<double>::infinity() : q;
}

inline Matrix random_unit(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix u(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) u(i, c) = nd(rng);
    const double nrm = u.norm();
    return nrm > 0 ? Matrix(u / nrm) : u;
}

}  // namespace detail

inline std::vector<double> quotient2_fixed(const MatrixFunction& g, const Matrix& x, const Matrix& v, const Matrix& w,
                                           const OracleConfig& cfg = {}) {
    cfg.validate();
    check_same_shape(x, v, "quotient2_fixed");
    check_same_shape(x, w, "quotient2_fixed");
    const double gx = detail::base_value(g, x);
    std::vector<double> out;
    for (double tau : cfg.tau_grid) out.push_back(detail::second_quotient(g, x, gx, v, w, tau));
    return out;
}

// w V_a S_a^{-1} U_a^T w from an SVD of x.
inline Matrix default_guide(const Matrix& x, const Matrix& w) {
    if (x.cols() > x.rows() || x.cols() < 2) return Matrix::Zero(x.rows(), x.cols());
    const SvdDecomposition s = svd_ordered(x);
    const SingularPartition p = partition_singular(s.sigma, x.rows());
    if (p.r == 0) return Matrix::Zero(x.rows(), x.cols());
    const Vector inv = s.sigma.head(p.r).cwiseInverse();
    return w * s.V.leftCols(p.r) * inv.asDiagonal() * s.U.leftCols(p.r).transpose() * w;
}

struct LiminfEstimate {
    double value = std::numeric_limits<double>::infinity();
    double tau = 0.0;
    std::string source;  // "fixed", "random" or "guided"
    Index sample = 0;
};

// Perturbed directions are w + tau*D; guided holds the corrections D.
inline LiminfEstimate quotient2_liminf_detail(const MatrixFunction& g, const Matrix& x, const Matrix& v, const Matrix& w,
                                              const OracleConfig& cfg = {}, const std::vector<Matrix>& guided = {}) {
    cfg.validate();
    check_same_shape(x, v, "quotient2_liminf");
    check_same_shape(x, w, "quotient2_liminf");
    const double gx = detail::base_value(g, x);
    const double tau = cfg.tau_grid.back();

    std::vector<Matrix> dirs;
    std::vector<std::string> kinds;
    dirs.push_back(w);
    kinds.emplace_back("fixed");
    std::mt19937_64 rng(cfg.seed);
    for (int s = 0; s < cfg.samples_per_tau; ++s) {
        dirs.push_back(w + tau * cfg.radius_factor * detail::random_unit(x.rows(), x.cols(), rng));
        kinds.emplace_back("random");
    }
    for (const Matrix& D : guided) {
        check_same_shape(x, D, "quotient2_liminf");
        dirs.push_back(w + tau * D);
        kinds.emplace_back("guided");
    }
    if (cfg.include_guided && x.cols() > 1) {
        dirs.push_back(w + tau * default_guide(x, w));
        kinds.emplace_back("guided");
    }

    std::vector<double> q(dirs.size());
    detail::parallel_for(dirs.size(), [&](std::size_t i) { q[i] = detail::second_quotient(g, x, gx, v, dirs[i], tau); });

    LiminfEstimate best;
    best.tau = tau;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] < best.value) {
            best.value = q[i];
            best.source = kinds[i];
            best.sample = static_cast<Index>(i);
        }
    }
    return best;
}

inline double quotient2_liminf(const MatrixFunction& g, const Matrix& x, const Matrix& v, const Matrix& w,
                               const OracleConfig& cfg = {}, const std::vector<Matrix>& guided = {}) {
    return quotient2_liminf_detail(g, x, v, w, cfg, guided).value;
}

inline std::vector<double> parabolic_quotient(const MatrixFunction& g, const Matrix& x, const Matrix& w, double dgxw,
                                              const Matrix& z, const OracleConfig& cfg = {}) {
    cfg.validate();
    check_same_shape(x, w, "parabolic_quotient");
    check_same_shape(x, z, "parabolic_quotient");
    if (!std::isfinite(dgxw)) throw Error(ErrorKind::NonFiniteBase, "parabolic_quotient: dg(x)(w) is not finite");
    const double gx = detail::base_value(g, x);
    std::vector<double> out;
    for (double tau : cfg.tau_grid) {
        const double val = g(x + tau * w + 0.5 * tau * tau * z);
        out.push_back((val - gx - tau * dgxw) / (0.5 * tau * tau));
    }
    return out;
}

struct SmoothFunction {
    std::function<double(const Matrix&)> value;
    std::function<Matrix(const Matrix&)> gradient;
    std::function<Matrix(const Matrix&, const Matrix&)> hessian_apply;
};

struct GradientCheckConfig {
    double tau = 1e-5;
    double threshold = 1e-5;
    int directions = 4;
    std::uint64_t seed = 0;
};

struct GradientCheckReport {
    double gradient_rel_error = 0.0;
    double hessian_rel_error = 0.0;
    bool gradient_ok = false;
    bool hessian_ok = false;

    bool ok() const { return gradient_ok && hessian_ok; }
};

inline GradientCheckReport fd_gradient_check(const SmoothFunction& psi, const Matrix& X,
                                             const GradientCheckConfig& cfg = {}) {
    GradientCheckReport rep;
    const double h = cfg.tau;
    const Matrix grad = psi.gradient(X);
    Matrix fd(X.rows(), X.cols());
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index c = 0; c < X.cols(); ++c) {
            Matrix E = Matrix::Zero(X.rows(), X.cols());
            E(i, c) = h;
            fd(i, c) = (psi.value(X + E) - psi.value(X - E)) / (2.0 * h);
        }
    }
    rep.gradient_rel_error = (fd - grad).norm() / std::max(1.0, grad.norm());
    std::mt19937_64 rng(cfg.seed);
    for (int d = 0; d < cfg.directions; ++d) {
        const Matrix H = detail::random_unit(X.rows(), X.cols(), rng);
        const Matrix hv = psi.hessian_apply(X, H);
        const Matrix fdh = (psi.gradient(X + h * H) - psi.gradient(X - h * H)) / (2.0 * h);
        rep.hessian_rel_error = std::max(rep.hessian_rel_error, (fdh - hv).norm() / std::max(1.0, hv.norm()));
    }
    rep.gradient_ok = rep.gradient_rel_error <= cfg.threshold;
    rep.hessian_ok = rep.hessian_rel_error <= cfg.threshold;
    return rep;
}

}  // namespace specvar
