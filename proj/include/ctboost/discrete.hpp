#ifndef CTBOOST_DISCRETE_HPP
#define CTBOOST_DISCRETE_HPP

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctboost/controls.hpp"
#include "ctboost/core.hpp"

namespace ctboost {

/// One discrete boosting round. mu_before is NaN outside arc-gv;
/// crp_values is empty outside confidence-rated runs.
struct RoundRecord {
    int round = 0;
    int hyp = -1;
    double t_weight = 0.0;
    double z_value = 1.0;
    WeightMeasure w_after;
    double beta = 0.0;
    double mu_before = std::numeric_limits<double>::quiet_NaN();
    Vec crp_values;
};

struct DiscreteRun {
    std::vector<RoundRecord> rounds;
    StopReason stop = StopReason::max_rounds;
    Ensemble ensemble;
};

namespace detail {

// One exponential reweighting step in log space. Returns log Z.
inline double reweight_round(Vec& logw, const WeakHypothesis& h, double t,
                             const TrainingSet& ts) {
    for (std::size_t i = 0; i < logw.size(); ++i) {
        if (logw[i] != neg_inf) {
            logw[i] -= t * ts.labels[i] * h.values[i];
        }
    }
    return log_sum_exp(logw);
}

inline Vec log_weights(const WeightMeasure& w) {
    Vec logw(w.size(), neg_inf);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) logw[i] = std::log(w[i]);
    }
    return logw;
}

inline WeightMeasure exp_normalized(Vec logw) {
    softmax_inplace(logw);
    return WeightMeasure(std::move(logw));
}

}  // namespace detail

/// Reference discrete rounds: argmin-W- selection, t_n = (1/2c) log(W+/W-),
/// exponential reweighting. Stops unfinished when no hypothesis beats
/// chance, or early when a chosen hypothesis is already perfect.
inline DiscreteRun run_discrete_adaboost(const TrainingSet& ts,
                                         const std::vector<WeakHypothesis>& pool,
                                         const WeightMeasure& w0,
                                         int max_rounds) {
    if (pool.empty()) {
        throw std::invalid_argument("run_discrete_adaboost: empty pool");
    }
    for (const WeakHypothesis& h : pool) {
        if (h.kind != HypKind::binary) {
            throw std::invalid_argument(
                "run_discrete_adaboost: pool must be two-valued hypotheses");
        }
    }

    DiscreteRun run;
    run.ensemble = Ensemble(ts.size());
    Vec logw = detail::log_weights(w0);
    WeightMeasure w = w0;
    for (int n = 0; n < max_rounds; ++n) {
        std::size_t best = 0;
        EdgeStats best_stats;
        double best_wm = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool.size(); ++j) {
            const EdgeStats s = edge_stats(pool[j], w, ts);
            if (s.w_minus < best_wm) {
                best_wm = s.w_minus;
                best = j;
                best_stats = s;
            }
        }
        if (!round_makes_progress(best_stats)) {
            run.stop = StopReason::stopped_unfinished;
            return run;
        }
        if (best_stats.w_minus <= 0.0) {
            run.stop = StopReason::perfect_hypothesis;
            return run;
        }
        const double c = pool[best].level;
        const double t =
            std::log(best_stats.w_plus / best_stats.w_minus) / (2.0 * c);
        const double log_z = detail::reweight_round(logw, pool[best], t, ts);
        for (double& x : logw) {
            if (x != neg_inf) x -= log_z;
        }
        w = detail::exp_normalized(logw);
        run.ensemble.add_term(t, static_cast<int>(best), pool[best]);
        run.rounds.push_back({n, static_cast<int>(best), t, std::exp(log_z), w,
                              best_stats.beta,
                              std::numeric_limits<double>::quiet_NaN(),
                              {}});
    }
    return run;
}

/// The margin-regularized variant: the optimal weight is shortened by the
/// current minimal margin and capped at a fixed interval; a nonpositive
/// weight stops the run.
inline DiscreteRun run_discrete_arcgv(const TrainingSet& ts,
                                      const std::vector<WeakHypothesis>& pool,
                                      const WeightMeasure& w0, double cap,
                                      int max_rounds) {
    if (pool.empty()) {
        throw std::invalid_argument("run_discrete_arcgv: empty pool");
    }
    DiscreteRun run;
    run.ensemble = Ensemble(ts.size());
    Vec logw = detail::log_weights(w0);
    WeightMeasure w = w0;
    for (int n = 0; n < max_rounds; ++n) {
        std::size_t best = 0;
        EdgeStats best_stats;
        double best_wm = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool.size(); ++j) {
            const EdgeStats s = edge_stats(pool[j], w, ts);
            if (s.w_minus < best_wm) {
                best_wm = s.w_minus;
                best = j;
                best_stats = s;
            }
        }
        if (best_stats.w_minus > 0.0 && !round_makes_progress(best_stats)) {
            run.stop = StopReason::stopped_unfinished;
            return run;
        }
        if (best_stats.w_minus <= 0.0) {
            run.stop = StopReason::perfect_hypothesis;
            return run;
        }
        const double mu = margin(run.ensemble, ts);
        const ArcgvTime at = arcgv_switch_time(best_stats, mu, cap);
        if (at.kind == ArcgvTime::Kind::stop) {
            run.stop = StopReason::margin_stop;
            return run;
        }
        const double log_z =
            detail::reweight_round(logw, pool[best], at.delta, ts);
        for (double& x : logw) {
            if (x != neg_inf) x -= log_z;
        }
        w = detail::exp_normalized(logw);
        run.ensemble.add_term(at.delta, static_cast<int>(best), pool[best]);
        run.rounds.push_back({n, static_cast<int>(best), at.delta,
                              std::exp(log_z), w, best_stats.beta, mu,
                              {}});
    }
    return run;
}

/// Confidence-rated rounds of unit length over partition hypotheses,
/// mirroring the flow policy exactly: min-z_sum selection, optimal leaf
/// values, reweighting with the realized real-valued control.
inline DiscreteRun run_discrete_crp(const TrainingSet& ts,
                                    const std::vector<PartitionHypothesis>& pool,
                                    const WeightMeasure& w0, int max_rounds,
                                    double epsilon_cap = 1e-3) {
    if (pool.empty()) {
        throw std::invalid_argument("run_discrete_crp: empty pool");
    }
    DiscreteRun run;
    run.ensemble = Ensemble(ts.size());
    Vec logw = detail::log_weights(w0);
    WeightMeasure w = w0;
    for (int n = 0; n < max_rounds; ++n) {
        std::size_t best = 0;
        CrpValueAssignment best_assign;
        double best_z = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool.size(); ++j) {
            CrpValueAssignment a = crp_assign_values(pool[j], w, ts, 1.0,
                                                     epsilon_cap);
            if (a.z_sum < best_z) {
                best_z = a.z_sum;
                best = j;
                best_assign = std::move(a);
            }
        }
        if (best_z >= 1.0 - min_z_progress) {
            run.stop = StopReason::stopped_unfinished;
            return run;
        }
        if (best_z == 0.0) {
            const CombinedError err = combined_error(run.ensemble, w, ts);
            if (err.w_minus + err.w_zero == 0.0) {
                run.stop = StopReason::perfect_hypothesis;
                return run;
            }
        }
        const WeakHypothesis control = realize_partition(pool[best], best_assign);
        const double beta = edge_stats(control, w, ts).beta;
        const double log_z = detail::reweight_round(logw, control, 1.0, ts);
        for (double& x : logw) {
            if (x != neg_inf) x -= log_z;
        }
        w = detail::exp_normalized(logw);
        run.ensemble.add_term(1.0, static_cast<int>(best), control);
        run.rounds.push_back({n, static_cast<int>(best), 1.0, std::exp(log_z),
                              w, beta,
                              std::numeric_limits<double>::quiet_NaN(),
                              best_assign.values});
    }
    return run;
}

/// Brute-force check that one boosting round is the entropy projection of
/// the old measure onto the zero-edge hyperplane: the reweighted measure
/// satisfies the constraint and no sampled feasible measure has smaller
/// divergence from the old one.
struct EntropyProjectionReport {
    double constraint_residual = 0.0;  // sum y h w_after
    double kl_projection = 0.0;        // KL(w_after || w_before)
    double best_alternative_kl = 0.0;  // min over sampled feasible measures
    int samples = 0;
};

inline EntropyProjectionReport verify_entropy_projection(
    const WeightMeasure& before, const WeightMeasure& after,
    const WeakHypothesis& h, const TrainingSet& ts, std::uint64_t seed,
    int random_samples = 1000, int grid_per_dim = 21) {
    check_lengths(before.size(), ts.size(), "verify_entropy_projection");
    check_lengths(after.size(), ts.size(), "verify_entropy_projection");
    check_lengths(h.size(), ts.size(), "verify_entropy_projection");
    if (grid_per_dim < 2) {
        throw std::invalid_argument("verify_entropy_projection: grid too coarse");
    }

    const std::size_t m = ts.size();
    EntropyProjectionReport rep;
    rep.kl_projection = kl_divergence(after.weights(), before.weights());
    if (!std::isfinite(rep.kl_projection)) {
        throw std::invalid_argument(
            "verify_entropy_projection: projected measure charges a point of "
            "zero prior mass");
    }
    for (std::size_t i = 0; i < m; ++i) {
        rep.constraint_residual += ts.labels[i] * h.values[i] * after[i];
    }

    // Orthonormal basis of directions preserving both the total mass and
    // the edge constraint.
    std::vector<Vec> rows;
    rows.push_back(Vec(m, 1.0));
    Vec yh(m);
    for (std::size_t i = 0; i < m; ++i) yh[i] = ts.labels[i] * h.values[i];
    rows.push_back(yh);
    std::vector<Vec> basis;
    auto orthonormalize = [&](Vec v) {
        for (const Vec& b : basis) {
            const double c = dot(v, b);
            for (std::size_t i = 0; i < m; ++i) v[i] -= c * b[i];
        }
        const double n = std::sqrt(dot(v, v));
        if (n > 1e-10) {
            for (double& x : v) x /= n;
            basis.push_back(std::move(v));
            return true;
        }
        return false;
    };
    for (Vec& r : rows) orthonormalize(std::move(r));
    const std::size_t constraint_rank = basis.size();
    for (std::size_t i = 0; i < m; ++i) {
        Vec e(m, 0.0);
        e[i] = 1.0;
        orthonormalize(std::move(e));
    }
    std::vector<Vec> dirs(basis.begin() + constraint_rank, basis.end());

    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& v) {
        for (double x : v) {
            if (x < 0.0) return;
        }
        best = std::min(best, kl_divergence(v, before.weights()));
        ++rep.samples;
    };

    if (!dirs.empty()) {
        // Deterministic grid around the projection point; the exhaustive
        // lattice is only tractable at the small m this check targets.
        const std::size_t grid_dims = std::min<std::size_t>(dirs.size(), 4);
        std::vector<int> idx(grid_dims, 0);
        const double radius = 1.0;
        for (;;) {
            Vec v = after.weights();
            for (std::size_t l = 0; l < grid_dims; ++l) {
                const double z =
                    radius * (2.0 * idx[l] / (grid_per_dim - 1.0) - 1.0);
                for (std::size_t i = 0; i < m; ++i) v[i] += z * dirs[l][i];
            }
            consider(v);
            std::size_t carry = 0;
            while (carry < idx.size() && ++idx[carry] == grid_per_dim) {
                idx[carry++] = 0;
            }
            if (carry == idx.size()) break;
        }

        // Hit-and-run walk through the feasible polytope.
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Vec cur = after.weights();
        for (int s = 0; s < random_samples; ++s) {
            Vec dir(m, 0.0);
            for (const Vec& b : dirs) {
                const double g = gauss(rng);
                for (std::size_t i = 0; i < m; ++i) dir[i] += g * b[i];
            }
            const double n = std::sqrt(dot(dir, dir));
            if (n < 1e-14) continue;
            for (double& x : dir) x /= n;
            double s_plus = std::numeric_limits<double>::infinity();
            double s_minus = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (dir[i] < -1e-14) s_plus = std::min(s_plus, cur[i] / -dir[i]);
                if (dir[i] > 1e-14) s_minus = std::min(s_minus, cur[i] / dir[i]);
            }
            if (!std::isfinite(s_plus) || !std::isfinite(s_minus)) continue;
            const double step = -s_minus + (s_plus + s_minus) * unif(rng);
            Vec v = cur;
            for (std::size_t i = 0; i < m; ++i) {
                v[i] = std::max(0.0, v[i] + step * dir[i]);
            }
            consider(v);
            cur = std::move(v);
        }
    }
    rep.best_alternative_kl = best;
    return rep;
}

}  // namespace ctboost

#endif  // CTBOOST_DISCRETE_HPP
