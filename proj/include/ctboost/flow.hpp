#ifndef CTBOOST_FLOW_HPP
#define CTBOOST_FLOW_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctboost/core.hpp"
#include "ctboost/numeric.hpp"

namespace ctboost {

/// A point of the extended phase space: coordinates H(x_k), the measure w,
/// elapsed time, the active hypothesis and the accumulated ensemble.
struct FlowState {
    Vec h_values;
    WeightMeasure w;
    double time = 0.0;
    std::optional<int> active_hyp;
    Ensemble ensemble;

    static FlowState initial(const WeightMeasure& w0) {
        return FlowState{Vec(w0.size(), 0.0), w0, 0.0, std::nullopt,
                         Ensemble(w0.size())};
    }
};

inline bool flow_state_consistent(const FlowState& s,
                                  const std::vector<WeakHypothesis>& pool,
                                  double tol = 1e-10) {
    return max_abs_diff(s.h_values, s.ensemble.recompute(pool)) <= tol;
}

/// sigma of a probe hypothesis at the current state of the flow.
inline double sigma_of(const FlowState& s, const WeakHypothesis& h,
                       const TrainingSet& ts) {
    return edge(h, s.w, ts);
}

struct PropagationResult {
    FlowState state;
    double log_z;  // log of the segment normalizer; the exact integral of
                   // sigma over the segment is -log_z
};

namespace detail {
// Exponential reweighting w(k) exp(-t y_k h(x_k)) / Z in log space; zero
// masses stay exactly zero. Returns the normalized weights and log Z.
inline std::pair<Vec, double> reweight_log(const WeightMeasure& w,
                                           const WeakHypothesis& h, double t,
                                           const TrainingSet& ts) {
    Vec logw(ts.size(), neg_inf);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (w[k] > 0.0) {
            logw[k] = std::log(w[k]) - t * ts.labels[k] * h.values[k];
        }
    }
    const double log_z = softmax_inplace(logw);
    return {std::move(logw), log_z};
}
}  // namespace detail

/// The measure after running constant control h for time t, without the
/// rest of the state.
inline WeightMeasure reweighted(const WeightMeasure& w, const WeakHypothesis& h,
                                double t, const TrainingSet& ts) {
    return WeightMeasure(detail::reweight_log(w, h, t, ts).first);
}

/// Exact time-delta flow under the constant control h:
///   H(x_k) += delta h(x_k),
///   w(k)   <- w(k) exp(-delta y_k h(x_k)) / Z(delta).
/// The reweighting runs in log space with a max shift, so zero masses stay
/// exactly zero and large exponents do not overflow.
inline PropagationResult propagate_closed_form(const FlowState& s,
                                               const WeakHypothesis& h, int hyp_id,
                                               double delta,
                                               const TrainingSet& ts) {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("propagate_closed_form: delta must be > 0");
    }
    check_lengths(h.size(), ts.size(), "propagate_closed_form");
    check_lengths(s.w.size(), ts.size(), "propagate_closed_form");

    const std::size_t m = ts.size();
    auto [neww, log_z] = detail::reweight_log(s.w, h, delta, ts);

    FlowState next{s.h_values, WeightMeasure(std::move(neww)), s.time + delta,
                   hyp_id, s.ensemble};
    for (std::size_t k = 0; k < m; ++k) {
        next.h_values[k] += delta * h.values[k];
    }
    next.ensemble.add_term(delta, hyp_id, h);
    return {std::move(next), log_z};
}

struct NumericPropagation {
    FlowState state;
    double max_step_drift = 0.0;        // max |sum w - 1| before renormalizing
    double drift_per_unit_time = 0.0;   // accumulated drift / elapsed time
};

/// Classical fixed-step RK4 on the flow equations
///   dH(x_k)/dt = h(x_k),
///   dw(k)/dt   = (-y_k h(x_k) + sigma_t) w(k).
/// The measure is renormalized after every step; the recorded drift shows
/// how well the integrator conserves the simplex on its own. This is the
/// verification oracle for propagate_closed_form.
inline NumericPropagation propagate_numeric(const FlowState& s,
                                            const WeakHypothesis& h, int hyp_id,
                                            double delta, int steps,
                                            const TrainingSet& ts) {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("propagate_numeric: delta must be > 0");
    }
    if (steps < 1) {
        throw std::invalid_argument("propagate_numeric: steps must be >= 1");
    }
    check_lengths(h.size(), ts.size(), "propagate_numeric");
    check_lengths(s.w.size(), ts.size(), "propagate_numeric");

    const std::size_t m = ts.size();
    const double dt = delta / steps;
    Vec w = s.w.weights();

    auto rhs = [&](const Vec& wv, Vec& dw) {
        double sig = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            sig += ts.labels[k] * h.values[k] * wv[k];
        }
        for (std::size_t k = 0; k < m; ++k) {
            dw[k] = (-ts.labels[k] * h.values[k] + sig) * wv[k];
        }
    };

    Vec k1(m), k2(m), k3(m), k4(m), tmp(m);
    double max_drift = 0.0, total_drift = 0.0;
    for (int step = 0; step < steps; ++step) {
        rhs(w, k1);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = w[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = w[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = w[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < m; ++i) {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        const double total = sum(w);
        const double drift = std::abs(total - 1.0);
        max_drift = std::max(max_drift, drift);
        total_drift += drift;
        for (double& x : w) x /= total;
    }

    FlowState next{s.h_values, WeightMeasure(std::move(w)), s.time + delta,
                   hyp_id, s.ensemble};
    for (std::size_t k = 0; k < m; ++k) {
        next.h_values[k] += delta * h.values[k];
    }
    next.ensemble.add_term(delta, hyp_id, h);
    return {std::move(next), max_drift, total_drift / delta};
}

/// Potential coordinates f(k) = -log w(k). Defined only for strictly
/// positive measures.
inline Vec potential_coordinates(const WeightMeasure& w) {
    Vec f(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] <= 0.0) {
            throw std::domain_error(
                "potential_coordinates: zero-mass point has infinite potential");
        }
        f[k] = -std::log(w[k]);
    }
    return f;
}

/// d sigma / dt under the hypothesis's own constant control:
///   -sum (y_k h(x_k))^2 w(k) + sigma^2,
/// which Jensen makes nonpositive, strictly so when y h is non-constant on
/// the support of w.
inline double sigma_derivative(const WeakHypothesis& h, const WeightMeasure& w,
                               const TrainingSet& ts) {
    check_lengths(h.size(), ts.size(), "sigma_derivative");
    check_lengths(w.size(), ts.size(), "sigma_derivative");
    double sig = 0.0, second = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double yh = ts.labels[k] * h.values[k];
        sig += yh * w[k];
        second += yh * yh * w[k];
    }
    return -second + sig * sig;
}

/// sigma of `probe` after the flow has run for time t under constant
/// control `control`, evaluated from the closed form without building the
/// intermediate state. Shifted exponentials keep large t safe.
inline double sigma_after(const WeightMeasure& w, const WeakHypothesis& control,
                          const WeakHypothesis& probe, double t,
                          const TrainingSet& ts) {
    check_lengths(control.size(), ts.size(), "sigma_after");
    check_lengths(probe.size(), ts.size(), "sigma_after");
    check_lengths(w.size(), ts.size(), "sigma_after");
    double shift = neg_inf;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (w[k] > 0.0) {
            shift = std::max(shift, -t * ts.labels[k] * control.values[k]);
        }
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (w[k] == 0.0) continue;
        const double e = w[k] * std::exp(-t * ts.labels[k] * control.values[k] - shift);
        num += ts.labels[k] * probe.values[k] * e;
        den += e;
    }
    return num / den;
}

/// Closed-form orbit of the measure under a constant binary or ternary
/// control: a limit vector supported on the misclassified set plus
/// direction vectors scaled by scalar path functions,
///   binary:  w_t = L + D u(t),          u(t) = 1/(W+ + e^{2ct} W-),
///   ternary: w_t = L + D+ a(t) + D0 b(t),
///            a(t) = e^{-t}/Z(t), b(t) = 1/Z(t),
///            Z(t) = W+ e^{-t} + W- e^{t} + W0.
struct OrbitDecomposition {
    Vec limit;                    // L[w0]
    Vec dir_plus;                 // D (binary) or D+ (ternary)
    std::optional<Vec> dir_zero;  // D0, ternary only
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w_zero = 0.0;
    double level = 1.0;  // c of the binary control
    bool ternary = false;

    double u(double t) const {
        return 1.0 / (w_plus + std::exp(2.0 * level * t) * w_minus);
    }
    double z(double t) const {
        return w_plus * std::exp(-t) + w_minus * std::exp(t) + w_zero;
    }
    double alpha(double t) const { return std::exp(-t) / z(t); }
    double beta(double t) const { return 1.0 / z(t); }

    Vec at(double t) const {
        Vec w(limit.size());
        if (ternary) {
            const double a = alpha(t), b = beta(t);
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] = limit[i] + dir_plus[i] * a + (*dir_zero)[i] * b;
            }
        } else {
            const double uu = u(t);
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] = limit[i] + dir_plus[i] * uu;
            }
        }
        return w;
    }
};

inline OrbitDecomposition orbit_decompose(const WeightMeasure& w0,
                                          const WeakHypothesis& h,
                                          const TrainingSet& ts) {
    check_lengths(h.size(), ts.size(), "orbit_decompose");
    check_lengths(w0.size(), ts.size(), "orbit_decompose");
    if (h.kind == HypKind::real) {
        throw std::invalid_argument(
            "orbit_decompose: closed-form orbits need binary or ternary controls");
    }
    const EdgeStats st = edge_stats(h, w0, ts);
    if (st.w_minus <= 0.0) {
        throw std::domain_error(
            "orbit_decompose: no misclassified mass, limit vector undefined");
    }

    const std::size_t m = ts.size();
    OrbitDecomposition d;
    d.w_plus = st.w_plus;
    d.w_minus = st.w_minus;
    d.w_zero = st.w_zero;
    d.level = h.level;
    // The ternary lemma assumes 0 < W0 < 1; with no zero-value mass the
    // binary decomposition applies to a ternary control as well.
    d.ternary = (h.kind == HypKind::ternary && st.w_zero > 0.0);

    d.limit.assign(m, 0.0);
    d.dir_plus.assign(m, 0.0);
    if (d.ternary) d.dir_zero = Vec(m, 0.0);

    for (std::size_t i = 0; i < m; ++i) {
        const double yh = ts.labels[i] * h.values[i];
        if (yh < 0.0) {
            d.limit[i] = w0[i] / st.w_minus;
            d.dir_plus[i] = -st.w_plus / st.w_minus * w0[i];
            if (d.ternary) (*d.dir_zero)[i] = -st.w_zero / st.w_minus * w0[i];
        } else if (h.values[i] == 0.0) {
            if (d.ternary) (*d.dir_zero)[i] = w0[i];
        } else {
            d.dir_plus[i] = w0[i];
        }
    }
    return d;
}

}  // namespace ctboost

#endif  // CTBOOST_FLOW_HPP
