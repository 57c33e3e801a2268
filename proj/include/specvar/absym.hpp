#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "specvar/errors.hpp"
#include "specvar/extended_value.hpp"
#include "specvar/matrix_core.hpp"

namespace specvar {

struct SignedPermutation {
    std::vector<Index> perm;   // (Q x)_i = sign_i * x_{perm_i}
    std::vector<int> sign;

    Index size() const { return static_cast<Index>(perm.size()); }

    static SignedPermutation identity(Index n) {
        SignedPermutation q;
        q.perm.resize(n);
        std::iota(q.perm.begin(), q.perm.end(), Index{0});
        q.sign.assign(n, 1);
        return q;
    }

    static SignedPermutation random(Index n, std::mt19937_64& rng) {
        SignedPermutation q = identity(n);
        std::shuffle(q.perm.begin(), q.perm.end(), rng);
        std::bernoulli_distribution coin(0.5);
        for (auto& s : q.sign) s = coin(rng) ? 1 : -1;
        return q;
    }

    Vector apply(const Vector& x) const {
        if (x.size() != size()) throw Error(ErrorKind::ShapeError, "SignedPermutation: length mismatch");
        Vector y(x.size());
        for (Index i = 0; i < size(); ++i) y(i) = sign[i] * x(perm[i]);
        return y;
    }

    SignedPermutation inverse() const {
        SignedPermutation q;
        q.perm.resize(perm.size());
        q.sign.resize(perm.size());
        for (Index i = 0; i < size(); ++i) {
            q.perm[perm[i]] = i;
            q.sign[perm[i]] = sign[i];
        }
        return q;
    }

    Matrix matrix() const {
        Matrix M = Matrix::Zero(size(), size());
        for (Index i = 0; i < size(); ++i) M(i, perm[i]) = sign[i];
        return M;
    }
};

struct SpectralFunctionSpec {
    std::string name;
    bool polyhedral = false;
    bool convex = false;
    bool lsc = false;
    bool lipschitz_on_domain = false;

    std::function<ExtendedValue(const Vector&)> eval;
    std::function<ExtendedValue(const Vector&, const Vector&)> subderivative;
    std::function<bool(const Vector&, const Vector&)> subdiff_contains;
    // Nonnegative size of the failure of v in df(x); zero inside.
    std::function<double(const Vector&, const Vector&)> subdiff_violation;
    std::function<Vector(const Vector&)> subdiff_representative;
    std::function<ExtendedValue(const Vector&, const Vector&, const Vector&)> second_subderivative;
    std::function<ExtendedValue(const Vector&, const Vector&, const Vector&)> parabolic_subderivative;
    std::function<bool(const Vector&, const Vector&, const Vector&)> critical_cone_contains;
};

inline double zero_threshold(const Vector& x) {
    return 1e-12 * (1.0 + (x.size() ? x.cwiseAbs().maxCoeff() : 0.0));
}

namespace detail {

inline double level_tol(const Vector& v, std::size_t level) {
    const double mx = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    return (level == 0 ? 1e-12 : 1e-9) * (1.0 + mx);
}

// Lexicographic maximum of <a, levels[0]>, <a, levels[1]>, ... over the vertices a of the
// unit ball dual to the sum of the k largest magnitudes; returns the value at the last level.
inline double topk_lex(const std::vector<const Vector*>& levels, Index k) {
    const std::size_t L = levels.size() - 1;
    const Index n = levels[0]->size();
    for (const Vector* v : levels)
        if (v->size() != n) throw Error(ErrorKind::ShapeError, "absolutely symmetric function: length mismatch");
    k = std::min(k, n);
    std::vector<double> tols(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) tols[l] = level_tol(*levels[l], l);

    // per-coordinate lexicographically best sign
    Matrix c(n, static_cast<Index>(levels.size()));
    for (Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < L && s == 0.0; ++l) {
            const double val = (*levels[l])(i);
            if (std::abs(val) > tols[l]) s = val > 0 ? 1.0 : -1.0;
        }
        for (std::size_t l = 0; l <= L; ++l) {
            const double val = (*levels[l])(i);
            c(i, static_cast<Index>(l)) = s != 0.0 ? s * val : (l == L ? std::abs(val) : 0.0);
        }
    }

    std::vector<Index> pool(n);
    std::iota(pool.begin(), pool.end(), Index{0});
    std::vector<Index> chosen;
    Index need = k;
    for (std::size_t l = 0; l < L && need > 0; ++l) {
        const Index col = static_cast<Index>(l);
        std::stable_sort(pool.begin(), pool.end(), [&](Index a, Index b) { return c(a, col) > c(b, col); });
        if (static_cast<Index>(pool.size()) <= need) break;
        const double thr = c(pool[need - 1], col);
        std::vector<Index> ties;
        for (Index i : pool) {
            if (c(i, col) > thr + tols[l]) {
                chosen.push_back(i);
            } else if (c(i, col) >= thr - tols[l]) {
                ties.push_back(i);
            }
        }
        need = k - static_cast<Index>(chosen.size());
        pool = ties;
    }
    double value = 0.0;
    const Index last = static_cast<Index>(L);
    for (Index i : chosen) value += c(i, last);
    std::vector<double> rest;
    for (Index i : pool) rest.push_back(c(i, last));
    std::sort(rest.begin(), rest.end(), std::greater<>());
    for (Index i = 0; i < std::min<Index>(need, static_cast<Index>(rest.size())); ++i) value += rest[i];
    return value;
}

inline double topk_dual(const Vector& v, Index k) {
    if (v.size() == 0) return 0.0;
    k = std::min<Index>(k, v.size());
    return std::max(v.cwiseAbs().maxCoeff(), v.cwiseAbs().sum() / static_cast<double>(k));
}

inline Vector topk_representative(const Vector& x, Index k) {
    const Index n = x.size();
    k = std::min(k, n);
    std::vector<Index> idx(n);
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(x(a)) > std::abs(x(b)); });
    const double thr = zero_threshold(x);
    Vector v = Vector::Zero(n);
    for (Index i = 0; i < k; ++i) {
        const double xi = x(idx[i]);
        if (std::abs(xi) > thr) v(idx[i]) = xi > 0 ? 1.0 : -1.0;
    }
    return v;
}

inline double l1_box_violation(const Vector& x, const Vector& v) {
    const double thr = zero_threshold(x);
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        if (x(i) > thr) {
            worst = std::max(worst, std::abs(v(i) - 1.0));
        } else if (x(i) < -thr) {
            worst = std::max(worst, std::abs(v(i) + 1.0));
        } else {
            worst = std::max(worst, std::abs(v(i)) - 1.0);
        }
    }
    return worst;
}

// Builds a spec for the sum of the k largest magnitudes; k < 0 stands for "all".
inline SpectralFunctionSpec topk_spec(std::string name, Index k) {
    SpectralFunctionSpec s;
    s.name = std::move(name);
    s.polyhedral = s.convex = s.lsc = s.lipschitz_on_domain = true;
    auto kk = [k](const Vector& x) {
        if (k < 0) return x.size();
        if (k > x.size()) throw Error(ErrorKind::BadK, "kyfan: k exceeds the dimension");
        return k;
    };
    s.eval = [kk](const Vector& x) { return ExtendedValue(topk_lex({&x}, kk(x))); };
    s.subderivative = [kk](const Vector& x, const Vector& w) { return ExtendedValue(topk_lex({&x, &w}, kk(x))); };
    s.subdiff_violation = [kk, k](const Vector& x, const Vector& v) {
        if (v.size() != x.size()) throw Error(ErrorKind::ShapeError, "subdifferential: length mismatch");
        if (k < 0) return std::max(0.0, l1_box_violation(x, v));
        const double fx = topk_lex({&x}, kk(x));
        const double gap = (fx - x.dot(v)) / (1.0 + fx);
        return std::max({0.0, topk_dual(v, kk(x)) - 1.0, std::abs(gap)});
    };
    s.subdiff_contains = [sv = s.subdiff_violation](const Vector& x, const Vector& v) { return sv(x, v) <= 1e-10; };
    s.subdiff_representative = [kk](const Vector& x) { return topk_representative(x, kk(x)); };
    s.parabolic_subderivative = [kk](const Vector& x, const Vector& w, const Vector& z) {
        return ExtendedValue(topk_lex({&x, &w, &z}, kk(x)));
    };
    s.critical_cone_contains = [s](const Vector& x, const Vector& v, const Vector& w) {
        if (!s.subdiff_contains(x, v)) throw Error(ErrorKind::NotASubgradient, "critical cone: v is not a subgradient");
        const double df = s.subderivative(x, w).value();
        return std::abs(df - v.dot(w)) <= 1e-9 * (1.0 + v.norm() * w.norm());
    };
    auto cone = s.critical_cone_contains;
    s.second_subderivative = [cone](const Vector& x, const Vector& v, const Vector& w) {
        return cone(x, v, w) ? ExtendedValue(0.0) : ExtendedValue::infinity();
    };
    return s;
}

}  // namespace detail

inline SpectralFunctionSpec l1_spec() { return detail::topk_spec("l1", -1); }

inline SpectralFunctionSpec linf_spec() { return detail::topk_spec("linf", 1); }

inline SpectralFunctionSpec kyfan_spec(Index k) {
    if (k < 1) throw Error(ErrorKind::BadK, "kyfan: k must be at least 1");
    return detail::topk_spec("kyfan:" + std::to_string(k), k);
}

// c * f for c > 0.
inline SpectralFunctionSpec scaled(const SpectralFunctionSpec& f, double c) {
    if (!(c > 0) || !std::isfinite(c)) throw Error(ErrorKind::AssumptionViolated, "scaled: weight must be positive");
    if (c == 1.0) return f;
    SpectralFunctionSpec s = f;
    std::ostringstream os;
    os.precision(17);
    os << c << "*" << f.name;
    s.name = os.str();
    if (f.eval) s.eval = [f, c](const Vector& x) { return c * f.eval(x); };
    if (f.subderivative) s.subderivative = [f, c](const Vector& x, const Vector& w) { return c * f.subderivative(x, w); };
    if (f.subdiff_violation)
        s.subdiff_violation = [f, c](const Vector& x, const Vector& v) { return f.subdiff_violation(x, v / c); };
    if (f.subdiff_contains)
        s.subdiff_contains = [f, c](const Vector& x, const Vector& v) { return f.subdiff_contains(x, v / c); };
    if (f.subdiff_representative)
        s.subdiff_representative = [f, c](const Vector& x) { return Vector(c * f.subdiff_representative(x)); };
    if (f.parabolic_subderivative)
        s.parabolic_subderivative = [f, c](const Vector& x, const Vector& w, const Vector& z) {
            return c * f.parabolic_subderivative(x, w, z);
        };
    if (f.critical_cone_contains)
        s.critical_cone_contains = [f, c](const Vector& x, const Vector& v, const Vector& w) {
            return f.critical_cone_contains(x, v / c, w);
        };
    if (f.second_subderivative)
        s.second_subderivative = [f, c](const Vector& x, const Vector& v, const Vector& w) {
            return c * f.second_subderivative(x, v / c, w);
        };
    return s;
}

inline SpectralFunctionSpec spec_from_name(const std::string& name) {
    if (name == "l1") return l1_spec();
    if (name == "linf") return linf_spec();
    const std::string prefix = "kyfan:";
    if (name.rfind(prefix, 0) == 0) {
        const std::string rest = name.substr(prefix.size());
        std::size_t pos = 0;
        long k = 0;
        try {
            k = std::stol(rest, &pos);
        } catch (const std::exception&) {
            throw Error(ErrorKind::BadK, "kyfan: cannot parse k in '" + name + "'");
        }
        if (pos != rest.size()) throw Error(ErrorKind::BadK, "kyfan: cannot parse k in '" + name + "'");
        return kyfan_spec(static_cast<Index>(k));
    }
    throw Error(ErrorKind::InvalidConfig, "unknown function name '" + name + "'");
}

inline ExtendedValue f_eval(const SpectralFunctionSpec& f, const Vector& x) { return f.eval(x); }

inline ExtendedValue f_subderivative(const SpectralFunctionSpec& f, const Vector& x, const Vector& w) {
    if (x.size() != w.size()) throw Error(ErrorKind::ShapeError, "f_subderivative: length mismatch");
    return f.subderivative(x, w);
}

inline bool f_subdiff_contains(const SpectralFunctionSpec& f, const Vector& x, const Vector& v) {
    return f.subdiff_contains(x, v);
}

inline Vector f_subdiff_representative(const SpectralFunctionSpec& f, const Vector& x) {
    return f.subdiff_representative(x);
}

inline bool f_critical_cone_contains(const SpectralFunctionSpec& f, const Vector& x, const Vector& v, const Vector& w) {
    return f.critical_cone_contains(x, v, w);
}

inline ExtendedValue f_second_subderivative(const SpectralFunctionSpec& f, const Vector& x, const Vector& v,
                                            const Vector& w) {
    if (f.polyhedral) {
        if (!f.subdiff_contains(x, v))
            throw Error(ErrorKind::NotASubgradient, "f_second_subderivative: v is not a subgradient");
        return f.critical_cone_contains(x, v, w) ? ExtendedValue(0.0) : ExtendedValue::infinity();
    }
    if (!f.second_subderivative)
        throw Error(ErrorKind::NotPolyhedral, "f_second_subderivative: non-polyhedral f needs a second_subderivative hook");
    return f.second_subderivative(x, v, w);
}

inline ExtendedValue f_parabolic_subderivative(const SpectralFunctionSpec& f, const Vector& x, const Vector& w,
                                               const Vector& z) {
    if (!f.parabolic_subderivative)
        throw Error(ErrorKind::AssumptionViolated, "f_parabolic_subderivative: no parabolic hook");
    return f.parabolic_subderivative(x, w, z);
}

inline bool stabilizer_contains(const Vector& x, const SignedPermutation& Q) {
    if (x.size() == 0) return true;
    return (Q.apply(x) - x).cwiseAbs().maxCoeff() <= zero_threshold(x);
}

inline bool stabilizer2_contains(const Vector& x, const Vector& w, const SignedPermutation& Q) {
    if (w.size() == 0) return stabilizer_contains(x, Q);
    return stabilizer_contains(x, Q) && (Q.apply(w) - w).cwiseAbs().maxCoeff() <= zero_threshold(w);
}

}  // namespace specvar
