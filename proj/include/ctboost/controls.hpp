#ifndef CTBOOST_CONTROLS_HPP
#define CTBOOST_CONTROLS_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctboost/core.hpp"
#include "ctboost/flow.hpp"
#include "ctboost/trajectory.hpp"

namespace ctboost {

enum class StopReason {
    max_rounds,
    horizon_reached,
    stopped_unfinished,   // no hypothesis with error mass below 1/2
    perfect_hypothesis,   // a chosen hypothesis makes no error
    margin_stop,          // arc-gv weight dropped to <= 0
};

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::max_rounds: return "max-rounds";
        case StopReason::horizon_reached: return "horizon-reached";
        case StopReason::stopped_unfinished: return "stopped-unfinished";
        case StopReason::perfect_hypothesis: return "perfect-hypothesis";
        case StopReason::margin_stop: return "margin-stop";
    }
    return "unknown";
}

// A round stops unfinished when its optimal normalizer cannot get below
// 1 - min_z_progress, i.e. the best hypothesis cannot materially shrink E.
// The optimal switch leaves the outgoing hypothesis at error mass exactly
// 1/2 (normalizer exactly 1), so stopped runs sit on that knife edge; a
// shared progress band keeps every formulation of the same round structure
// stopping at the same round despite last-ulp differences in their
// measures.
constexpr double min_z_progress = 1e-9;

inline bool round_makes_progress(const EdgeStats& stats) {
    if (stats.w_plus <= stats.w_minus) return false;
    const double z_opt =
        2.0 * std::sqrt(stats.w_plus * stats.w_minus) + stats.w_zero;
    return z_opt < 1.0 - min_z_progress;
}

// --- switch-time rules --------------------------------------------------

struct SwitchTime {
    enum class Kind { run, stop_unfinished, stop_perfect };
    Kind kind = Kind::run;
    double delta = 0.0;
};

/// Optimal segment length for a binary(c) control: the time at which the
/// segment normalizer is minimal and sigma hits zero,
///   delta = (1/2c) log(W+/W-).
/// W- >= 1/2 signals the unfinished stop; W- = 0 means the hypothesis is
/// already perfect and no finite switch time exists.
inline SwitchTime adaboost_switch_time(const EdgeStats& stats, double c) {
    if (!(c > 0.0)) {
        throw std::invalid_argument("adaboost_switch_time: c must be positive");
    }
    if (!round_makes_progress(stats)) {
        return {SwitchTime::Kind::stop_unfinished, 0.0};
    }
    if (stats.w_minus <= 0.0) return {SwitchTime::Kind::stop_perfect, 0.0};
    return {SwitchTime::Kind::run,
            std::log(stats.w_plus / stats.w_minus) / (2.0 * c)};
}

struct ArcgvTime {
    enum class Kind { run, stop };
    Kind kind = Kind::run;
    double delta = 0.0;
    bool capped = false;
};

/// Margin-adjusted switch time
///   t = min(cap, 1/2 log((1+2b)/(1-2b)) - 1/2 log((1+mu)/(1-mu))),
/// for binary(1) controls. mu = -1 selects the cap; t <= 0 stops the run.
inline ArcgvTime arcgv_switch_time(const EdgeStats& stats, double mu, double cap) {
    if (!(cap > 0.0)) {
        throw std::invalid_argument("arcgv_switch_time: cap must be positive");
    }
    if (!(stats.beta > 0.0)) {
        throw std::invalid_argument("arcgv_switch_time: needs beta > 0");
    }
    if (mu >= 1.0) {
        throw std::domain_error(
            "arcgv_switch_time: margin 1 means a perfect classifier exists");
    }
    if (mu < -1.0) {
        throw std::invalid_argument("arcgv_switch_time: margin below -1");
    }
    if (mu == -1.0) return {ArcgvTime::Kind::run, cap, true};
    const double b = stats.beta;
    const double t = 0.5 * std::log((1.0 + 2.0 * b) / (1.0 - 2.0 * b)) -
                     0.5 * std::log((1.0 + mu) / (1.0 - mu));
    if (t <= 0.0) return {ArcgvTime::Kind::stop, t, false};
    if (t >= cap) return {ArcgvTime::Kind::run, cap, true};
    return {ArcgvTime::Kind::run, t, false};
}

/// Mass misclassified by the hypothesis that just ran, under the post-switch
/// measure. On uncapped arc-gv rounds this equals (1 - mu_prev)/2.
inline double arcgv_post_measure(const FlowState& after, const WeakHypothesis& used,
                                 const TrainingSet& ts) {
    return edge_stats(used, after.w, ts).w_minus;
}

/// Closed form of the arc-gv round normalizer for mu != +-1.
inline double arcgv_z_closed_form(const EdgeStats& stats, double mu) {
    const double r = (1.0 - mu) / (1.0 + mu);
    return std::sqrt(stats.w_minus * stats.w_plus) *
           (std::sqrt(r) + 1.0 / std::sqrt(r));
}

// --- confidence-rated values ---------------------------------------------

/// Hypothesis given as a partition of the training points into p leaves;
/// the output value on each leaf is assigned per round.
struct PartitionHypothesis {
    std::vector<int> leaf;  // leaf index per training point, in [0, num_leaves)
    int num_leaves = 0;

    static PartitionHypothesis from_leaves(std::vector<int> leaves) {
        PartitionHypothesis p;
        if (leaves.empty()) {
            throw std::invalid_argument("PartitionHypothesis: empty leaf map");
        }
        for (int l : leaves) {
            if (l < 0) throw std::invalid_argument("PartitionHypothesis: bad leaf");
            p.num_leaves = std::max(p.num_leaves, l + 1);
        }
        p.leaf = std::move(leaves);
        return p;
    }

    /// Partition of a two-valued hypothesis: leaf 0 where h > 0, leaf 1 else.
    static PartitionHypothesis from_binary(const WeakHypothesis& h) {
        std::vector<int> leaves(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            leaves[i] = h.values[i] > 0.0 ? 0 : 1;
        }
        return from_leaves(std::move(leaves));
    }
};

struct CrpValueAssignment {
    Vec values;                   // c_j per leaf
    double z_sum = 0.0;           // sum_j 2 sqrt(W+j W-j)
    std::vector<int> degenerate;  // leaves with one-sided mass
    double label_plus = 0.0;      // total mass with y = +1
    double label_minus = 0.0;
    Vec p_plus;                   // leaf profile of the +1 mass
    Vec p_minus;
};

/// Optimal confidence values for one round of length delta:
/// c_j = (1/2 delta) log(W+j / W-j) on leaves carrying both labels. A
/// one-sided leaf gets the largest confidence that keeps its normalizer
/// contribution at or below epsilon_cap / p, so the realized Z never
/// exceeds z_sum + epsilon_cap. Empty leaves output 0.
inline CrpValueAssignment crp_assign_values(const PartitionHypothesis& part,
                                            const WeightMeasure& w,
                                            const TrainingSet& ts, double delta,
                                            double epsilon_cap) {
    check_lengths(part.leaf.size(), ts.size(), "crp_assign_values");
    check_lengths(w.size(), ts.size(), "crp_assign_values");
    if (!(delta > 0.0)) {
        throw std::invalid_argument("crp_assign_values: delta must be > 0");
    }
    if (!(epsilon_cap > 0.0)) {
        throw std::invalid_argument("crp_assign_values: epsilon_cap must be > 0");
    }

    const int p = part.num_leaves;
    Vec plus(p, 0.0), minus(p, 0.0);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        (ts.labels[i] > 0 ? plus : minus)[part.leaf[i]] += w[i];
    }

    CrpValueAssignment a;
    a.values.assign(p, 0.0);
    a.p_plus.assign(p, 0.0);
    a.p_minus.assign(p, 0.0);
    a.label_plus = sum(plus);
    a.label_minus = sum(minus);
    for (int j = 0; j < p; ++j) {
        if (plus[j] > 0.0 && minus[j] > 0.0) {
            a.values[j] = std::log(plus[j] / minus[j]) / (2.0 * delta);
            a.z_sum += 2.0 * std::sqrt(plus[j] * minus[j]);
        } else if (plus[j] > 0.0 || minus[j] > 0.0) {
            a.degenerate.push_back(j);
            const double mass = plus[j] + minus[j];
            const double conf =
                std::max(0.0, std::log(p * mass / epsilon_cap) / delta);
            a.values[j] = (plus[j] > 0.0 ? conf : -conf);
        }
        if (a.label_plus > 0.0) a.p_plus[j] = plus[j] / a.label_plus;
        if (a.label_minus > 0.0) a.p_minus[j] = minus[j] / a.label_minus;
    }
    return a;
}

inline WeakHypothesis realize_partition(const PartitionHypothesis& part,
                                        const CrpValueAssignment& a) {
    Vec v(part.leaf.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = a.values[part.leaf[i]];
    }
    return WeakHypothesis::real(std::move(v));
}

// --- control policies ----------------------------------------------------

struct ControlStep {
    int hyp_id = -1;
    WeakHypothesis control;  // the values actually driving the flow
    double duration = 0.0;
};

struct ControlDecision {
    std::optional<ControlStep> step;
    StopReason stop = StopReason::max_rounds;

    static ControlDecision go(int id, WeakHypothesis h, double dt) {
        return {ControlStep{id, std::move(h), dt}, StopReason::max_rounds};
    }
    static ControlDecision halt(StopReason r) { return {std::nullopt, r}; }
};

/// Piecewise-constant control: at each switch instant, picks the next
/// hypothesis and how long to run it. Policies hold only configuration, so
/// one instance can drive many runs.
class ControlPolicy {
public:
    virtual ~ControlPolicy() = default;
    virtual std::string name() const = 0;
    virtual ControlDecision next(const FlowState& state, const TrainingSet& ts) = 0;
};

namespace detail {
inline void require_nonempty(std::size_t n, const char* who) {
    if (n == 0) throw std::invalid_argument(std::string(who) + ": empty pool");
}
}  // namespace detail

/// argmin-W- selection with the optimal switch time; sampling the flow at
/// switch instants reproduces the discrete rounds.
class AdaboostPolicy final : public ControlPolicy {
public:
    explicit AdaboostPolicy(std::vector<WeakHypothesis> pool)
        : pool_(std::move(pool)) {
        detail::require_nonempty(pool_.size(), "AdaboostPolicy");
        for (const WeakHypothesis& h : pool_) {
            if (h.kind != HypKind::binary) {
                throw std::invalid_argument(
                    "AdaboostPolicy: pool must be two-valued hypotheses");
            }
        }
    }

    std::string name() const override { return "adaboost"; }

    ControlDecision next(const FlowState& state, const TrainingSet& ts) override {
        std::size_t best = 0;
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
        const SwitchTime st = adaboost_switch_time(best_stats, pool_[best].level);
        switch (st.kind) {
            case SwitchTime::Kind::stop_unfinished:
                return ControlDecision::halt(StopReason::stopped_unfinished);
            case SwitchTime::Kind::stop_perfect:
                return ControlDecision::halt(StopReason::perfect_hypothesis);
            case SwitchTime::Kind::run:
                break;
        }
        return ControlDecision::go(static_cast<int>(best), pool_[best], st.delta);
    }

private:
    std::vector<WeakHypothesis> pool_;
};

/// arc-gv: the optimal time shortened by the current margin, capped at a
/// fixed large interval while the margin stays at -1.
class ArcgvPolicy final : public ControlPolicy {
public:
    ArcgvPolicy(std::vector<WeakHypothesis> pool, double cap)
        : pool_(std::move(pool)), cap_(cap) {
        detail::require_nonempty(pool_.size(), "ArcgvPolicy");
        if (!(cap_ > 0.0)) {
            throw std::invalid_argument("ArcgvPolicy: cap must be positive");
        }
    }

    std::string name() const override { return "arcgv"; }

    ControlDecision next(const FlowState& state, const TrainingSet& ts) override {
        std::size_t best = 0;
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
        if (best_stats.w_minus > 0.0 && !round_makes_progress(best_stats)) {
            return ControlDecision::halt(StopReason::stopped_unfinished);
        }
        if (best_stats.w_minus <= 0.0) {
            // The setting assumes no perfect weak classifier; report instead
            // of running toward margin 1.
            return ControlDecision::halt(StopReason::perfect_hypothesis);
        }
        const double mu = margin(state.h_values, state.ensemble.norm(), ts);
        const ArcgvTime at = arcgv_switch_time(best_stats, mu, cap_);
        if (at.kind == ArcgvTime::Kind::stop) {
            return ControlDecision::halt(StopReason::margin_stop);
        }
        return ControlDecision::go(static_cast<int>(best), pool_[best], at.delta);
    }

private:
    std::vector<WeakHypothesis> pool_;
    double cap_;
};

/// Confidence-rated rounds of unit length: each round reassigns leaf values
/// optimally and runs the partition whose normalizer bound is smallest.
class CrpPolicy final : public ControlPolicy {
public:
    CrpPolicy(std::vector<PartitionHypothesis> pool, double epsilon_cap = 1e-3)
        : pool_(std::move(pool)), epsilon_cap_(epsilon_cap) {
        detail::require_nonempty(pool_.size(), "CrpPolicy");
    }

    std::string name() const override { return "crp"; }

    ControlDecision next(const FlowState& state, const TrainingSet& ts) override {
        std::size_t best = 0;
        CrpValueAssignment best_assign;
        double best_z = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool_.size(); ++j) {
            CrpValueAssignment a =
                crp_assign_values(pool_[j], state.w, ts, 1.0, epsilon_cap_);
            if (a.z_sum < best_z) {
                best_z = a.z_sum;
                best = j;
                best_assign = std::move(a);
            }
        }
        if (best_z >= 1.0 - min_z_progress) {
            // No partition can materially shrink E; the used partition sits
            // at exactly 1 on the next round, so this is the natural stop.
            return ControlDecision::halt(StopReason::stopped_unfinished);
        }
        if (best_z == 0.0) {
            const CombinedError err = combined_error(state.h_values, state.w, ts);
            if (err.w_minus + err.w_zero == 0.0) {
                return ControlDecision::halt(StopReason::perfect_hypothesis);
            }
        }
        WeakHypothesis control = realize_partition(pool_[best], best_assign);
        return ControlDecision::go(static_cast<int>(best), std::move(control), 1.0);
    }

private:
    std::vector<PartitionHypothesis> pool_;
    double epsilon_cap_;
};

/// Greedy continuous-time control: always runs the hypothesis with the
/// largest edge, switching where edge curves cross and the newcomer's edge
/// is rising faster. Crossings are located on the closed-form edge
/// difference, scanned at scan_dt and sharpened by bisection.
class SuperboostPolicy final : public ControlPolicy {
public:
    SuperboostPolicy(std::vector<WeakHypothesis> pool, double horizon,
                     double scan_dt = 1e-3, double event_tol = 1e-12,
                     double tie_tol = 1e-9)
        : pool_(std::move(pool)), horizon_(horizon), scan_dt_(scan_dt),
          event_tol_(event_tol), tie_tol_(tie_tol) {
        detail::require_nonempty(pool_.size(), "SuperboostPolicy");
        if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
            throw std::invalid_argument("SuperboostPolicy: horizon must be finite");
        }
    }

    std::string name() const override { return "superboost"; }

    ControlDecision next(const FlowState& state, const TrainingSet& ts) override {
        const double remaining = horizon_ - state.time;
        if (remaining <= event_tol_) {
            return ControlDecision::halt(StopReason::horizon_reached);
        }

        const std::size_t active = select_active(state, ts);
        const WeakHypothesis& ha = pool_[active];
        double best_cross = remaining;
        for (std::size_t j = 0; j < pool_.size(); ++j) {
            if (j == active) continue;
            const auto cross =
                first_crossing(state.w, ha, pool_[j], best_cross, ts);
            if (cross && *cross < best_cross) best_cross = *cross;
        }
        // Either a genuine switch event or the final run-out to the horizon;
        // both are full segments for the propagator.
        return ControlDecision::go(static_cast<int>(active), ha, best_cross);
    }

private:
    // dsigma(u)/dt when the flow is driven by v: -sum (yu)(yv) w + s(u)s(v).
    static double cross_derivative(const WeakHypothesis& u, const WeakHypothesis& v,
                                   const WeightMeasure& w, const TrainingSet& ts) {
        double mixed = 0.0, su = 0.0, sv = 0.0;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const double yu = ts.labels[k] * u.values[k];
            const double yv = ts.labels[k] * v.values[k];
            mixed += yu * yv * w[k];
            su += yu * w[k];
            sv += yv * w[k];
        }
        return -mixed + su * sv;
    }

    // Largest-edge hypothesis. Near-ties arise exactly at crossing instants;
    // there the paper's rule compares growth rates under the control that was
    // running, so a segment that ended on a crossing hands over correctly.
    std::size_t select_active(const FlowState& state, const TrainingSet& ts) const {
        double max_sigma = -std::numeric_limits<double>::infinity();
        for (const WeakHypothesis& h : pool_) {
            max_sigma = std::max(max_sigma, edge(h, state.w, ts));
        }
        const WeakHypothesis* prev =
            state.active_hyp ? &pool_[static_cast<std::size_t>(*state.active_hyp)]
                             : nullptr;
        std::size_t best = pool_.size();
        double best_deriv = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool_.size(); ++j) {
            if (edge(pool_[j], state.w, ts) < max_sigma - tie_tol_) continue;
            const double d = prev
                ? cross_derivative(pool_[j], *prev, state.w, ts)
                : sigma_derivative(pool_[j], state.w, ts);
            if (best == pool_.size() || d > best_deriv) {
                best = j;
                best_deriv = d;
            }
        }
        return best;
    }

    // Sign of sigma(candidate) - sigma(active) after running the active
    // control for time s; shared normalizer drops out.
    static double diff_numerator(const WeightMeasure& w, const WeakHypothesis& ha,
                                 const WeakHypothesis& hc, double s,
                                 const TrainingSet& ts) {
        double shift = neg_inf;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (w[k] > 0.0) {
                shift = std::max(shift, -s * ts.labels[k] * ha.values[k]);
            }
        }
        double num = 0.0;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (w[k] == 0.0) continue;
            const double yk = ts.labels[k];
            num += yk * (hc.values[k] - ha.values[k]) * w[k] *
                   std::exp(-s * yk * ha.values[k] - shift);
        }
        return num;
    }

    std::optional<double> first_crossing(const WeightMeasure& w,
                                         const WeakHypothesis& ha,
                                         const WeakHypothesis& hc, double limit,
                                         const TrainingSet& ts) const {
        double prev_s = 0.0;
        double prev_n = diff_numerator(w, ha, hc, 0.0, ts);
        for (double s = scan_dt_; prev_s < limit; s += scan_dt_) {
            const double cur_s = std::min(s, limit);
            const double cur_n = diff_numerator(w, ha, hc, cur_s, ts);
            if (prev_n < 0.0 && cur_n >= 0.0) {
                double lo = prev_s, hi = cur_s;
                while (hi - lo > event_tol_) {
                    const double mid = 0.5 * (lo + hi);
                    (diff_numerator(w, ha, hc, mid, ts) < 0.0 ? lo : hi) = mid;
                }
                const double root = 0.5 * (lo + hi);
                if (root > event_tol_) {
                    // Switch only onto a faster-rising edge.
                    const WeightMeasure at = reweighted(w, ha, root, ts);
                    if (cross_derivative(hc, ha, at, ts) >
                        cross_derivative(ha, ha, at, ts)) {
                        return root;
                    }
                }
            }
            prev_s = cur_s;
            prev_n = cur_n;
        }
        return std::nullopt;
    }

    std::vector<WeakHypothesis> pool_;
    double horizon_;
    double scan_dt_;
    double event_tol_;
    double tie_tol_;
};

// --- flow runner ----------------------------------------------------------

struct FlowRunResult {
    FlowState state;
    Trajectory trajectory;
    StopReason stop = StopReason::max_rounds;
    int rounds = 0;
    std::vector<double> segment_betas;  // 1/2 - W-(control) at segment start
    std::optional<std::string> error;   // numeric failure; trajectory is partial
};

/// Runs a policy with exact per-segment propagation until it stops or the
/// round budget is exhausted. A numeric-range failure ends the run with the
/// partial trajectory intact and the message in `error`.
inline FlowRunResult run_flow(ControlPolicy& policy, const TrainingSet& ts,
                              const WeightMeasure& w0, int max_rounds,
                              const RecordOptions& rec = {}) {
    FlowState state = FlowState::initial(w0);
    TrajectoryRecorder recorder(ts, state, rec);
    FlowRunResult result{state, {}, StopReason::max_rounds, 0, {}, {}};
    while (result.rounds < max_rounds) {
        const ControlDecision d = policy.next(state, ts);
        if (!d.step) {
            result.stop = d.stop;
            break;
        }
        if (!(d.step->duration > 0.0)) {
            throw std::logic_error("run_flow: policy returned a zero switch time");
        }
        try {
            PropagationResult prop = propagate_closed_form(
                state, d.step->control, d.step->hyp_id, d.step->duration, ts);
            result.segment_betas.push_back(
                edge_stats(d.step->control, state.w, ts).beta);
            recorder.add_segment(prop, d.step->control, d.step->hyp_id);
            state = std::move(prop.state);
        } catch (const std::range_error& e) {
            result.error = e.what();
            break;
        }
        ++result.rounds;
    }
    result.state = std::move(state);
    result.trajectory = recorder.finish();
    return result;
}

}  // namespace ctboost

#endif  // CTBOOST_CONTROLS_HPP
