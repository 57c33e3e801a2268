#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "specvar/absym.hpp"
#include "specvar/oimf.hpp"
#include "specvar/oracles.hpp"
#include "specvar/parallel.hpp"

namespace specvar {

struct ProblemSpec {
    SmoothFunction psi;
    SpectralFunctionSpec f;
    std::string psi_kind = "custom";

    double objective(const Matrix& X) const { return psi.value(X) + F_eval(f, X).as_double(); }
};

// psi(X) = 1/2 ||X - B||^2
inline SmoothFunction least_squares_psi(const Matrix& B) {
    SmoothFunction s;
    s.value = [B](const Matrix& X) { return 0.5 * (X - B).squaredNorm(); };
    s.gradient = [B](const Matrix& X) { return Matrix(X - B); };
    s.hessian_apply = [](const Matrix&, const Matrix& H) { return H; };
    return s;
}

// psi(X) = 1/2 ||A vec(X) - b||^2 with vec row-major.
inline SmoothFunction linear_least_squares_psi(const Matrix& A, const Vector& b, Index rows, Index cols) {
    if (A.cols() != rows * cols || A.rows() != b.size())
        throw Error(ErrorKind::ShapeError, "linear_least_squares_psi: operator table has the wrong shape");
    auto vec = [rows, cols](const Matrix& X) {
        Vector v(rows * cols);
        for (Index i = 0; i < rows; ++i)
            for (Index c = 0; c < cols; ++c) v(i * cols + c) = X(i, c);
        return v;
    };
    auto unvec = [rows, cols](const Vector& v) {
        Matrix X(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index c = 0; c < cols; ++c) X(i, c) = v(i * cols + c);
        return X;
    };
    SmoothFunction s;
    s.value = [=](const Matrix& X) { return 0.5 * (A * vec(X) - b).squaredNorm(); };
    s.gradient = [=](const Matrix& X) { return unvec(A.transpose() * (A * vec(X) - b)); };
    s.hessian_apply = [=](const Matrix&, const Matrix& H) { return unvec(A.transpose() * (A * vec(H))); };
    return s;
}

// psi(X) = 1/2 ||X - B||^2 - <C, X> - gamma/2 <E, X - A>^2
inline SmoothFunction curved_least_squares_psi(const Matrix& B, const Matrix& C, const Matrix& E, double gamma,
                                               const Matrix& A) {
    check_same_shape(B, C, "curved_least_squares_psi");
    check_same_shape(B, E, "curved_least_squares_psi");
    check_same_shape(B, A, "curved_least_squares_psi");
    SmoothFunction s;
    s.value = [=](const Matrix& X) {
        const double e = inner(E, X - A);
        return 0.5 * (X - B).squaredNorm() - inner(C, X) - 0.5 * gamma * e * e;
    };
    s.gradient = [=](const Matrix& X) { return Matrix(X - B - C - gamma * inner(E, X - A) * E); };
    s.hessian_apply = [=](const Matrix&, const Matrix& H) { return Matrix(H - gamma * inner(E, H) * E); };
    return s;
}

// argmin 1/2 ||X - B||^2 + weight ||X||_*
inline Matrix soft_threshold_solve(const Matrix& B, double weight) {
    if (!(weight >= 0)) throw Error(ErrorKind::AssumptionViolated, "soft_threshold_solve: weight must be >= 0");
    const SvdDecomposition s = svd_ordered(B);
    const Vector shrunk = (s.sigma.array() - weight).max(0.0).matrix();
    return s.U * diag_mn(shrunk, B.rows(), B.cols()) * s.V.transpose();
}

struct StationarityResult {
    double residual = 0.0;
    bool stationary = false;
};

inline StationarityResult stationarity_check(const ProblemSpec& p, const Matrix& X0) {
    const Matrix grad = p.psi.gradient(X0);
    check_same_shape(X0, grad, "stationarity_check");
    const Matrix Y = -grad;
    const Vector sx = svd_ordered(X0).sigma;
    const Vector sy = singular_values(Y);
    if (!p.f.subdiff_violation) throw Error(ErrorKind::AssumptionViolated, "stationarity_check: f has no violation hook");
    const double box = p.f.subdiff_violation(sx, sy);
    const double trace_gap = std::max(0.0, sx.dot(sy) - inner(X0, Y));
    StationarityResult r;
    r.residual = std::max(box, trace_gap);
    r.stationary = r.residual <= 1e-7 * (1.0 + grad.norm());
    return r;
}

inline ExtendedValue curvature(const ProblemSpec& p, const Matrix& X0, const Matrix& H, const Tolerances& tol = {}) {
    const Matrix Y = -p.psi.gradient(X0);
    const SecondSubderivativeReport rep = F_second_subderivative(p.f, X0, Y, H, tol);
    if (!rep.critical) return ExtendedValue::infinity();
    return ExtendedValue(inner(H, p.psi.hessian_apply(X0, H))) + rep.value;
}

inline double quadratic_growth_probe(const ProblemSpec& p, const Matrix& X0, double eps, int n_samples,
                                     std::uint64_t seed) {
    if (!(eps > 0)) throw Error(ErrorKind::InvalidConfig, "quadratic_growth_probe: eps must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.1, 1.0);
    std::vector<Matrix> pts;
    for (int s = 0; s < n_samples; ++s) {
        const Matrix D = detail::random_unit(X0.rows(), X0.cols(), rng);
        pts.push_back(eps * ud(rng) * D);
    }
    const double base = p.objective(X0);
    std::vector<double> ratio(pts.size());
    detail::parallel_for(pts.size(), [&](std::size_t i) {
        ratio[i] = (p.objective(X0 + pts[i]) - base) / pts[i].squaredNorm();
    });
    double best = std::numeric_limits<double>::infinity();
    for (double r : ratio) best = std::min(best, r);
    return best;
}

enum class Verdict { NotStationary, NecessaryViolated, SufficientEvidence, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::NotStationary: return "not-stationary";
        case Verdict::NecessaryViolated: return "necessary-violated";
        case Verdict::SufficientEvidence: return "sufficient-evidence";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct CertifyConfig {
    int samples = 200;
    int min_samples = 100;
    int max_attempts = 20000;
    std::uint64_t seed = 0;
    double curvature_tol = 1e-8;
    double growth_eps = 1e-2;
    int growth_samples = 2000;
    Tolerances tol;
};

struct CurvatureSample {
    Matrix H;
    ExtendedValue q;
    std::string generator;
};

struct OptimalityCertificate {
    double stationarity_residual = 0.0;
    bool is_stationary = false;
    GradientCheckReport gradient_check;
    std::vector<CurvatureSample> samples;
    double min_curvature = std::numeric_limits<double>::infinity();
    double growth_constant_observed = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Matrix> counterexample;
    double counterexample_curvature = 0.0;
    bool descent_validated = false;
    int attempts = 0;
};

// obj(X0 + tH) < obj(X0) + t^2 q / 4 for some t in {1e-2, 1e-3}.
inline bool validate_descent(const ProblemSpec& p, const Matrix& X0, const Matrix& H, double q) {
    const double base = p.objective(X0);
    for (double t : {1e-2, 1e-3})
        if (p.objective(X0 + t * H) < base + 0.25 * t * t * q) return true;
    return false;
}

namespace detail {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix A(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) A(i, c) = nd(rng);
    return A;
}

// Candidate directions in the coordinates of a simultaneous gauge.
class ConeCandidates {
public:
    ConeCandidates(const Gauge& g, const Vector& sy, std::uint64_t seed) : g_(g), sy_(sy), rng_(seed) {
        const Index m = g.m();
        const Index n = g.n();
        for (Index i = 0; i < m; ++i)
            for (Index c = 0; c < n; ++c) {
                Matrix E = Matrix::Zero(m, n);
                E(i, c) = 1.0;
                elementary_.push_back(E);
            }
        for (Index i = 0; i < n; ++i)
            for (Index c = i + 1; c < n; ++c) {
                Matrix E = Matrix::Zero(m, n);
                E(i, c) = E(c, i) = 1.0;
                elementary_.push_back(E);
            }
    }

    static constexpr int kinds = 6;

    static const char* name(int kind) {
        static const char* names[] = {"gaussian", "beta-zeroed", "alpha-alpha", "coupling", "elementary", "beta-aligned"};
        return names[kind];
    }

    Matrix next(int kind) {
        const SingularPartition& p = g_.part;
        const Index m = g_.m();
        const Index n = g_.n();
        Matrix Hg = gaussian(m, n, rng_);
        switch (kind) {
            case 0:
                break;
            case 1:
                Hg.block(p.r, p.r, p.betahat.size, p.beta.size).setZero();
                break;
            case 2: {
                Matrix A = Matrix::Zero(m, n);
                A.topLeftCorner(p.r, p.r) = Hg.topLeftCorner(p.r, p.r);
                Hg = A;
                break;
            }
            case 3:
                Hg.topLeftCorner(p.r, p.r).setZero();
                Hg.block(p.r, p.r, p.betahat.size, p.beta.size).setZero();
                break;
            case 4:
                if (elementary_.empty()) return Matrix::Zero(m, n);
                Hg = elementary_[next_elementary_++ % elementary_.size()];
                break;
            default: {
                // beta block supported where sigma(Y) is largest on beta
                Hg.block(p.r, p.r, p.betahat.size, p.beta.size).setZero();
                if (p.beta.size > 0) {
                    const double top = sy_.segment(p.r, p.beta.size).maxCoeff();
                    for (Index s = p.r; s < n; ++s)
                        if (top > 0 && sy_(s) >= top * (1.0 - 1e-9)) Hg(s, s) = std::abs(Hg(s, s));
                }
                break;
            }
        }
        return g_.svd.U * Hg * g_.svd.V.transpose();
    }

private:
    Gauge g_;
    Vector sy_;
    std::mt19937_64 rng_;
    std::vector<Matrix> elementary_;
    std::size_t next_elementary_ = 0;
};

}  // namespace detail

inline OptimalityCertificate certify(const ProblemSpec& p, const Matrix& X0, const CertifyConfig& cfg = {}) {
    OptimalityCertificate cert;
    cert.gradient_check = fd_gradient_check(p.psi, X0);
    if (!cert.gradient_check.ok())
        throw Error(ErrorKind::AssumptionViolated, "certify: psi hooks fail the finite-difference check at X0");
    const StationarityResult st = stationarity_check(p, X0);
    cert.stationarity_residual = st.residual;
    cert.is_stationary = st.stationary;
    cert.growth_constant_observed = quadratic_growth_probe(p, X0, cfg.growth_eps, cfg.growth_samples, cfg.seed);
    if (!st.stationary) {
        cert.verdict = Verdict::NotStationary;
        return cert;
    }
    if (cfg.samples <= 0) {
        cert.verdict = Verdict::Inconclusive;
        return cert;
    }

    const Matrix Y = -p.psi.gradient(X0);
    const Gauge g = simultaneous_gauge(X0, Y, cfg.tol);
    const Vector sy = singular_values(Y);
    detail::ConeCandidates gen(g, sy, cfg.seed);
    std::vector<Matrix> accepted;
    std::vector<std::string> origin;
    while (static_cast<int>(accepted.size()) < cfg.samples && cert.attempts < cfg.max_attempts) {
        const int kind = cert.attempts % detail::ConeCandidates::kinds;
        ++cert.attempts;
        Matrix H = gen.next(kind);
        const double nrm = H.norm();
        if (nrm == 0) continue;
        H /= nrm;
        if (!F_critical_cone_contains(p.f, X0, Y, H, cfg.tol)) continue;
        accepted.push_back(H);
        origin.emplace_back(detail::ConeCandidates::name(kind));
    }
    if (static_cast<int>(accepted.size()) < cfg.min_samples)
        throw Error(ErrorKind::SamplingExhausted, "certify: too few critical-cone samples (" +
                                                      std::to_string(accepted.size()) + ")");

    std::vector<ExtendedValue> qs(accepted.size());
    detail::parallel_for(accepted.size(), [&](std::size_t i) { qs[i] = curvature(p, X0, accepted[i], cfg.tol); });

    std::optional<std::size_t> worst;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        cert.samples.push_back({accepted[i], qs[i], origin[i]});
        if (qs[i].as_double() < cert.min_curvature) {
            cert.min_curvature = qs[i].as_double();
            worst = i;
        }
    }
    if (worst && cert.min_curvature < -cfg.curvature_tol) {
        cert.verdict = Verdict::NecessaryViolated;
        cert.counterexample = accepted[*worst];
        cert.counterexample_curvature = cert.min_curvature;
        cert.descent_validated = validate_descent(p, X0, accepted[*worst], cert.min_curvature);
    } else if (cert.min_curvature > cfg.curvature_tol) {
        cert.verdict = Verdict::SufficientEvidence;
    } else {
        cert.verdict = Verdict::Inconclusive;
    }
    return cert;
}

}  // namespace specvar
