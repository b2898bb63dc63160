#ifndef CTBOOST_GEOMETRY_HPP
#define CTBOOST_GEOMETRY_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctboost/controls.hpp"
#include "ctboost/core.hpp"
#include "ctboost/flow.hpp"

namespace ctboost {

/// Diagonal inverse metric induced by a divergence: the Kullback-Leibler
/// expansion gives g^{kk} = w(k) on the positive orthant, the binary
/// variant g^{kk} = w(k)(1 - w(k)) on the open cube. Custom divergences
/// supply their own diagonal.
struct DivergenceMetric {
    enum class Kind { kl, binary_kl, custom };
    Kind kind = Kind::kl;
    std::function<double(double)> custom_inv;

    static DivergenceMetric kl() { return {Kind::kl, {}}; }
    static DivergenceMetric binary_kl() { return {Kind::binary_kl, {}}; }
    static DivergenceMetric custom(std::function<double(double)> inv) {
        return {Kind::custom, std::move(inv)};
    }

    double inverse_metric(double wk) const {
        switch (kind) {
            case Kind::kl:
                if (!(wk > 0.0)) {
                    throw std::domain_error("metric: needs w(k) > 0");
                }
                return wk;
            case Kind::binary_kl:
                if (!(wk > 0.0 && wk < 1.0)) {
                    throw std::domain_error("metric: needs 0 < w(k) < 1");
                }
                return wk * (1.0 - wk);
            case Kind::custom: {
                const double g = custom_inv(wk);
                if (!(g > 0.0)) {
                    throw std::domain_error("metric: inverse metric must be > 0");
                }
                return g;
            }
        }
        throw std::logic_error("metric: bad kind");
    }
};

/// Potential driving a gradient flow. lambda(k) = y_k h(x_k); the rayleigh
/// form sum(lambda w)/sum(w) is 0-homogeneous and restricts to the edge on
/// the simplex, the linear form sum(lambda w) drives the logistic flow.
struct PotentialSpec {
    enum class Kind { rayleigh, linear };
    Kind kind = Kind::rayleigh;
    Vec lambda;

    static PotentialSpec rayleigh(Vec lam) {
        return {Kind::rayleigh, std::move(lam)};
    }
    static PotentialSpec linear(Vec lam) { return {Kind::linear, std::move(lam)}; }
    static PotentialSpec for_hypothesis(Kind kind, const WeakHypothesis& h,
                                        const TrainingSet& ts) {
        check_lengths(h.size(), ts.size(), "PotentialSpec");
        Vec lam(ts.size());
        for (std::size_t k = 0; k < ts.size(); ++k) {
            lam[k] = ts.labels[k] * h.values[k];
        }
        return {kind, std::move(lam)};
    }

    double value(const Vec& w) const {
        check_lengths(lambda.size(), w.size(), "PotentialSpec::value");
        const double num = dot(lambda, w);
        if (kind == Kind::linear) return num;
        const double den = sum(w);
        if (!(den > 0.0)) {
            throw std::domain_error("PotentialSpec: rayleigh needs sum w > 0");
        }
        return num / den;
    }

    Vec gradient(const Vec& w) const {
        check_lengths(lambda.size(), w.size(), "PotentialSpec::gradient");
        if (kind == Kind::linear) return lambda;
        const double den = sum(w);
        if (!(den > 0.0)) {
            throw std::domain_error("PotentialSpec: rayleigh needs sum w > 0");
        }
        const double v = dot(lambda, w) / den;
        Vec g(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            g[k] = (lambda[k] - v) / den;
        }
        return g;
    }
};

/// -g grad V componentwise. With the KL metric and the rayleigh potential
/// this is exactly the measure half of the flow equations; with the binary
/// metric and the linear potential it is the logistic right-hand side.
inline Vec gradient_flow_rhs(const DivergenceMetric& metric,
                             const PotentialSpec& pot, const Vec& w) {
    const Vec grad = pot.gradient(w);
    Vec rhs(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        rhs[k] = -metric.inverse_metric(w[k]) * grad[k];
    }
    return rhs;
}

/// Central finite differences of V composed with the metric, against the
/// analytic right-hand side. Returns the worst relative error over
/// coordinates (floored at 1e-8 in the denominator).
inline double finite_difference_gradient_check(const DivergenceMetric& metric,
                                               const PotentialSpec& pot,
                                               const Vec& w, double step) {
    if (!(step >= 1e-8 && step <= 1e-4)) {
        throw std::invalid_argument(
            "finite_difference_gradient_check: step outside [1e-8, 1e-4]");
    }
    const Vec analytic = gradient_flow_rhs(metric, pot, w);
    double worst = 0.0;
    Vec shifted = w;
    for (std::size_t k = 0; k < w.size(); ++k) {
        shifted[k] = w[k] + step;
        const double up = pot.value(shifted);
        shifted[k] = w[k] - step;
        const double down = pot.value(shifted);
        shifted[k] = w[k];
        const double numeric = -metric.inverse_metric(w[k]) *
                               (up - down) / (2.0 * step);
        const double denom = std::max(1e-8, std::abs(analytic[k]));
        worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
    }
    return worst;
}

/// Fixed-step RK4 for dw/dt = -g grad V; the generic route for divergences
/// without a closed form.
inline Vec integrate_gradient_flow(const DivergenceMetric& metric,
                                   const PotentialSpec& pot, Vec w, double t,
                                   int steps) {
    if (steps < 1) {
        throw std::invalid_argument("integrate_gradient_flow: steps must be >= 1");
    }
    const double dt = t / steps;
    const std::size_t m = w.size();
    Vec k1, k2, k3, k4, tmp(m);
    for (int s = 0; s < steps; ++s) {
        k1 = gradient_flow_rhs(metric, pot, w);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = w[i] + 0.5 * dt * k1[i];
        k2 = gradient_flow_rhs(metric, pot, tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = w[i] + 0.5 * dt * k2[i];
        k3 = gradient_flow_rhs(metric, pot, tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = w[i] + dt * k3[i];
        k4 = gradient_flow_rhs(metric, pot, tmp);
        for (std::size_t i = 0; i < m; ++i) {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    return w;
}

/// Closed form of the binary-KL gradient flow (the logistic equations):
///   w_t(k) = w_0(k) / ((1 - w_0(k)) e^{y_k h(x_k) t} + w_0(k)).
/// Lives on the cube, one coordinate at a time; endpoints are fixed points.
inline Vec logit_flow_closed_form(const Vec& w0, const WeakHypothesis& h,
                                  const TrainingSet& ts, double t) {
    check_lengths(w0.size(), ts.size(), "logit_flow_closed_form");
    check_lengths(h.size(), ts.size(), "logit_flow_closed_form");
    Vec w(w0.size());
    for (std::size_t k = 0; k < w0.size(); ++k) {
        if (!(w0[k] >= 0.0 && w0[k] <= 1.0)) {
            throw std::invalid_argument("logit_flow_closed_form: w0 outside [0,1]");
        }
        if (w0[k] == 0.0 || w0[k] == 1.0) {
            w[k] = w0[k];
            continue;
        }
        const double e = std::exp(ts.labels[k] * h.values[k] * t);
        w[k] = w0[k] / ((1.0 - w0[k]) * e + w0[k]);
    }
    return w;
}

inline double foliation_leaf_value(const PotentialSpec& pot, const Vec& w) {
    return pot.value(w);
}

/// Time at which the flow under constant control h reaches the zero leaf
/// {w : V_h(w) = 0}, i.e. the zero of the monotone edge t -> sigma_t(h).
/// Returns nullopt when the edge stays positive (the control never stops
/// being profitable). The bracket doubles from 1 until the sign changes.
inline std::optional<double> leaf_crossing_time(const FlowState& state,
                                                const WeakHypothesis& h,
                                                const TrainingSet& ts,
                                                double tol = 1e-12) {
    const double sigma0 = edge(h, state.w, ts);
    if (!(sigma0 > 0.0)) {
        throw std::invalid_argument(
            "leaf_crossing_time: needs sigma > 0 to start a round");
    }
    double hi = 1.0;
    int doublings = 0;
    while (sigma_after(state.w, h, h, hi, ts) > 0.0) {
        if (++doublings > 64) return std::nullopt;
        hi *= 2.0;
    }
    double lo = (hi == 1.0) ? 0.0 : hi / 2.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (sigma_after(state.w, h, h, mid, ts) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// The invariant geometric algorithm: run the largest-potential hypothesis
/// down to its zero leaf, then reselect. On two-valued pools this coincides
/// with the argmin-W- policy and its optimal switch times.
class GeometricPolicy final : public ControlPolicy {
public:
    explicit GeometricPolicy(std::vector<WeakHypothesis> pool, double tol = 1e-13)
        : pool_(std::move(pool)), tol_(tol) {
        if (pool_.empty()) {
            throw std::invalid_argument("GeometricPolicy: empty pool");
        }
        uniform_binary_ = true;
        for (const WeakHypothesis& h : pool_) {
            if (h.kind != HypKind::binary || h.level != pool_.front().level) {
                uniform_binary_ = false;
            }
        }
    }

    std::string name() const override { return "geometric"; }

    ControlDecision next(const FlowState& state, const TrainingSet& ts) override {
        std::size_t best = 0;
        if (uniform_binary_) {
            // On a two-valued pool of one confidence level, argmax V is
            // argmin W-. Comparing the masses directly keeps exact ties in
            // the same order the argmin-W- policy breaks them.
            EdgeStats best_stats;
            double best_wm = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < pool_.size(); ++j) {
                const EdgeStats s = edge_stats(pool_[j], state.w, ts);
                if (s.w_minus < best_wm) {
                    best_wm = s.w_minus;
                    best = j;
                    best_stats = s;
                }
            }
            if (!round_makes_progress(best_stats)) {
                return ControlDecision::halt(StopReason::stopped_unfinished);
            }
        } else {
            double best_v = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < pool_.size(); ++j) {
                const double v = edge(pool_[j], state.w, ts);
                if (v > best_v) {
                    best_v = v;
                    best = j;
                }
            }
            if (!(best_v > 0.0)) {
                return ControlDecision::halt(StopReason::stopped_unfinished);
            }
        }
        const auto crossing = leaf_crossing_time(state, pool_[best], ts, tol_);
        if (!crossing) {
            return ControlDecision::halt(StopReason::perfect_hypothesis);
        }
        return ControlDecision::go(static_cast<int>(best), pool_[best], *crossing);
    }

private:
    std::vector<WeakHypothesis> pool_;
    double tol_;
    bool uniform_binary_ = false;
};

}  // namespace ctboost

#endif  // CTBOOST_GEOMETRY_HPP
