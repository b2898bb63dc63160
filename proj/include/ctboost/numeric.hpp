#ifndef CTBOOST_NUMERIC_HPP
#define CTBOOST_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ctboost {

using Vec = std::vector<double>;

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(a[i])) with the max-exponent shift. Entries equal to -inf
// (zero mass in log space) are skipped; all -inf yields -inf.
inline double log_sum_exp(const Vec& a) {
    double m = neg_inf;
    for (double x : a) m = std::max(m, x);
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (double x : a) {
        if (x != neg_inf) s += std::exp(x - m);
    }
    return m + std::log(s);
}

// Normalizes exp(a[k]) to a probability vector without overflow.
// Returns the log of the normalizer.
inline double softmax_inplace(Vec& a) {
    const double lz = log_sum_exp(a);
    if (!std::isfinite(lz)) {
        throw std::range_error("softmax: normalizer underflowed to zero");
    }
    for (double& x : a) x = (x == neg_inf) ? 0.0 : std::exp(x - lz);
    return lz;
}

// KL(v || w) = sum v log(v/w), with 0 log 0 = 0. Infinite when v charges a
// point w does not.
inline double kl_divergence(const Vec& v, const Vec& w) {
    if (v.size() != w.size()) {
        throw std::invalid_argument("kl_divergence: size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) continue;
        if (w[i] == 0.0) return std::numeric_limits<double>::infinity();
        s += v[i] * std::log(v[i] / w[i]);
    }
    return s;
}

// Three-valued sign with an optional tolerance band around zero.
inline int sign3(double x, double zero_tol = 0.0) {
    if (x > zero_tol) return 1;
    if (x < -zero_tol) return -1;
    return 0;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sum(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += x;
    return s;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

}  // namespace ctboost

#endif  // CTBOOST_NUMERIC_HPP
