#ifndef CTBOOST_CORE_HPP
#define CTBOOST_CORE_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctboost/numeric.hpp"

namespace ctboost {

constexpr double simplex_tol = 1e-12;

/// Labeled sample everything is measured on. Feature vectors are optional:
/// all statistics only evaluate hypotheses at the training points, so the
/// points matter solely to the stump learner.
struct TrainingSet {
    std::vector<Vec> points;  // empty, or one feature vector per point
    std::vector<int> labels;  // each in {-1,+1}

    TrainingSet(std::vector<Vec> pts, std::vector<int> lbls)
        : points(std::move(pts)), labels(std::move(lbls)) {
        if (labels.empty()) {
            throw std::invalid_argument("TrainingSet: needs at least one point");
        }
        for (int y : labels) {
            if (y != 1 && y != -1) {
                throw std::invalid_argument("TrainingSet: labels must be +1 or -1");
            }
        }
        if (!points.empty()) {
            if (points.size() != labels.size()) {
                throw std::invalid_argument("TrainingSet: points/labels length mismatch");
            }
            for (const Vec& p : points) {
                if (p.size() != points.front().size()) {
                    throw std::invalid_argument("TrainingSet: ragged feature rows");
                }
            }
        }
    }

    static TrainingSet from_labels(std::vector<int> lbls) {
        return TrainingSet({}, std::move(lbls));
    }

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

enum class HypKind { binary, ternary, real };

/// Weak hypothesis represented by its value vector h(x_i) on the training
/// points. binary(c) means every value is -c or +c; ternary means values
/// lie in {-1,0,+1}.
struct WeakHypothesis {
    Vec values;
    HypKind kind = HypKind::real;
    double level = 1.0;  // the c of binary(c); unused otherwise

    static WeakHypothesis binary(Vec v, double c = 1.0) {
        if (!(c > 0.0)) {
            throw std::invalid_argument("WeakHypothesis::binary: c must be positive");
        }
        for (double x : v) {
            if (std::abs(x) != c) {
                throw std::invalid_argument(
                    "WeakHypothesis::binary: values must be -c or +c");
            }
        }
        return WeakHypothesis{std::move(v), HypKind::binary, c};
    }

    static WeakHypothesis ternary(Vec v) {
        for (double x : v) {
            if (x != 1.0 && x != -1.0 && x != 0.0) {
                throw std::invalid_argument(
                    "WeakHypothesis::ternary: values must be in {-1,0,+1}");
            }
        }
        return WeakHypothesis{std::move(v), HypKind::ternary, 1.0};
    }

    static WeakHypothesis real(Vec v) {
        return WeakHypothesis{std::move(v), HypKind::real, 1.0};
    }

    std::size_t size() const { return values.size(); }

    WeakHypothesis negated() const {
        WeakHypothesis h = *this;
        for (double& x : h.values) x = -x;
        return h;
    }
};

/// Probability vector on the m training points.
class WeightMeasure {
public:
    explicit WeightMeasure(Vec w) : w_(std::move(w)) {
        for (double x : w_) {
            if (!(x >= 0.0)) {
                throw std::invalid_argument("WeightMeasure: negative weight");
            }
        }
        if (std::abs(sum(w_) - 1.0) > simplex_tol) {
            throw std::invalid_argument("WeightMeasure: weights must sum to 1");
        }
    }

    static WeightMeasure uniform(std::size_t m) {
        return WeightMeasure(Vec(m, 1.0 / static_cast<double>(m)));
    }

    const Vec& weights() const { return w_; }
    double operator[](std::size_t i) const { return w_[i]; }
    std::size_t size() const { return w_.size(); }

private:
    Vec w_;
};

struct EnsembleTerm {
    double weight;  // t_k >= 0
    int hyp;        // pool index
};

/// Nonnegative combination H = sum t_k h_k, kept with cached values
/// H(x_i). Consecutive terms with the same hypothesis id merge.
class Ensemble {
public:
    Ensemble() = default;
    explicit Ensemble(std::size_t m) : h_values_(m, 0.0) {}

    void add_term(double t, int hyp_id, const WeakHypothesis& h) {
        if (!(t >= 0.0)) {
            throw std::invalid_argument("Ensemble::add_term: weight must be >= 0");
        }
        if (h.size() != h_values_.size()) {
            throw std::invalid_argument("Ensemble::add_term: value length mismatch");
        }
        // Merge only a genuinely unchanged control; confidence-rated rounds
        // reuse a partition id with fresh values.
        if (!terms_.empty() && terms_.back().hyp == hyp_id &&
            last_values_ == h.values) {
            terms_.back().weight += t;
        } else {
            terms_.push_back({t, hyp_id});
            last_values_ = h.values;
        }
        for (std::size_t i = 0; i < h_values_.size(); ++i) {
            h_values_[i] += t * h.values[i];
        }
        norm_ += t;
    }

    const std::vector<EnsembleTerm>& terms() const { return terms_; }
    const Vec& h_values() const { return h_values_; }
    double norm() const { return norm_; }
    std::size_t size() const { return h_values_.size(); }

    // Recompute H(x_i) from the terms; used to check cache consistency.
    Vec recompute(const std::vector<WeakHypothesis>& pool) const {
        Vec out(h_values_.size(), 0.0);
        for (const EnsembleTerm& t : terms_) {
            const Vec& v = pool.at(static_cast<std::size_t>(t.hyp)).values;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.weight * v[i];
        }
        return out;
    }

private:
    std::vector<EnsembleTerm> terms_;
    Vec h_values_;
    Vec last_values_;
    double norm_ = 0.0;
};

struct LabelMasses {
    double pos = 0.0;  // mass with this value and label +1
    double neg = 0.0;
};

/// Edge and error masses of one weak hypothesis under a measure.
/// w_plus/w_minus/w_zero split by the sign of y_i h(x_i); per_value groups
/// mass by the hypothesis value and the label (the W^{+-,j} of finite-valued
/// hypotheses).
struct EdgeStats {
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w_zero = 0.0;
    double sigma = 0.0;  // sum y_i h(x_i) w(i)
    double beta = 0.0;   // 1/2 - w_minus, signed
    std::map<double, LabelMasses> per_value;
};

inline void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

inline EdgeStats edge_stats(const WeakHypothesis& h, const WeightMeasure& w,
                            const TrainingSet& ts) {
    check_lengths(h.size(), ts.size(), "edge_stats");
    check_lengths(w.size(), ts.size(), "edge_stats");
    EdgeStats s;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double hv = h.values[i];
        const double yh = ts.labels[i] * hv;
        s.sigma += yh * w[i];
        if (hv == 0.0) {
            s.w_zero += w[i];
        } else if (yh > 0.0) {
            s.w_plus += w[i];
        } else {
            s.w_minus += w[i];
        }
        LabelMasses& lm = s.per_value[hv];
        (ts.labels[i] > 0 ? lm.pos : lm.neg) += w[i];
    }
    s.beta = 0.5 - s.w_minus;
    return s;
}

/// sigma_w(h) alone, when the full mass table is not needed.
inline double edge(const WeakHypothesis& h, const WeightMeasure& w,
                   const TrainingSet& ts) {
    check_lengths(h.size(), ts.size(), "edge");
    check_lengths(w.size(), ts.size(), "edge");
    double s = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        s += ts.labels[i] * h.values[i] * w[i];
    }
    return s;
}

struct CombinedError {
    double w_minus = 0.0;  // mass with sign H(x_i) * y_i = -1
    double w_zero = 0.0;   // mass with H(x_i) = 0 (no decision)
};

/// Error masses of the sign classifier induced by H-values. zero_tol widens
/// the "no decision" band for numerically produced H values; closed-form
/// paths use exact zero.
inline CombinedError combined_error(const Vec& h_values, const WeightMeasure& w,
                                    const TrainingSet& ts, double zero_tol = 0.0) {
    check_lengths(h_values.size(), ts.size(), "combined_error");
    check_lengths(w.size(), ts.size(), "combined_error");
    CombinedError e;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int s = sign3(h_values[i], zero_tol);
        if (s == 0) {
            e.w_zero += w[i];
        } else if (s * ts.labels[i] < 0) {
            e.w_minus += w[i];
        }
    }
    return e;
}

inline CombinedError combined_error(const Ensemble& H, const WeightMeasure& w,
                                    const TrainingSet& ts, double zero_tol = 0.0) {
    return combined_error(H.h_values(), w, ts, zero_tol);
}

/// Minimal normalized margin min_i y_i H(x_i) / ||H||, in [-1,1].
/// The zero ensemble has margin -1 by convention.
inline double margin(const Vec& h_values, double norm, const TrainingSet& ts) {
    check_lengths(h_values.size(), ts.size(), "margin");
    if (norm <= 0.0) return -1.0;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        m = std::min(m, ts.labels[i] * h_values[i] / norm);
    }
    return m;
}

inline double margin(const Ensemble& H, const TrainingSet& ts) {
    return margin(H.h_values(), H.norm(), ts);
}

/// E(H,w) = sum w(i) exp(-y_i H(x_i)), the convex overestimate of the
/// training error that serves as the Lyapunov function.
inline double lyapunov_e(const Vec& h_values, const WeightMeasure& w,
                         const TrainingSet& ts) {
    check_lengths(h_values.size(), ts.size(), "lyapunov_e");
    check_lengths(w.size(), ts.size(), "lyapunov_e");
    double s = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (w[i] == 0.0) continue;
        s += w[i] * std::exp(-ts.labels[i] * h_values[i]);
    }
    return s;
}

inline double lyapunov_e(const Ensemble& H, const WeightMeasure& w,
                         const TrainingSet& ts) {
    return lyapunov_e(H.h_values(), w, ts);
}

// log E(H,w), evaluated in log space so large ||H|| stays representable.
inline double log_lyapunov_e(const Vec& h_values, const WeightMeasure& w,
                             const TrainingSet& ts) {
    check_lengths(h_values.size(), ts.size(), "log_lyapunov_e");
    Vec a(ts.size(), neg_inf);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (w[i] > 0.0) {
            a[i] = std::log(w[i]) - ts.labels[i] * h_values[i];
        }
    }
    return log_sum_exp(a);
}

}  // namespace ctboost

#endif  // CTBOOST_CORE_HPP
