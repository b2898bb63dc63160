#ifndef CTBOOST_INSTANCES_HPP
#define CTBOOST_INSTANCES_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "ctboost/controls.hpp"
#include "ctboost/core.hpp"
#include "ctboost/dataset.hpp"

namespace ctboost {

/// Seeded random instances for the self-test suite and the property tests.
struct RandomInstance {
    TrainingSet ts;
    WeightMeasure w0;
    std::vector<WeakHypothesis> pool;
};

namespace gen {

using Rng = std::mt19937_64;

inline std::vector<int> labels(Rng& rng, std::size_t m) {
    std::bernoulli_distribution coin(0.5);
    std::vector<int> y(m);
    bool saw_pos = false, saw_neg = false;
    for (std::size_t i = 0; i < m; ++i) {
        y[i] = coin(rng) ? 1 : -1;
        (y[i] > 0 ? saw_pos : saw_neg) = true;
    }
    if (!saw_pos) y[0] = 1;
    if (!saw_neg) y[m - 1] = -1;
    return y;
}

inline WeightMeasure positive_measure(Rng& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Vec w(m);
    double total = 0.0;
    for (double& x : w) total += (x = u(rng));
    for (double& x : w) x /= total;
    return WeightMeasure(std::move(w));
}

inline WeakHypothesis binary_hypothesis(Rng& rng, std::size_t m) {
    std::bernoulli_distribution coin(0.5);
    Vec v(m);
    for (double& x : v) x = coin(rng) ? 1.0 : -1.0;
    return WeakHypothesis::binary(std::move(v));
}

inline WeakHypothesis ternary_hypothesis(Rng& rng, std::size_t m) {
    std::uniform_int_distribution<int> tri(-1, 1);
    Vec v(m);
    for (double& x : v) x = tri(rng);
    return WeakHypothesis::ternary(std::move(v));
}

inline WeakHypothesis real_hypothesis(Rng& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(m);
    for (double& x : v) x = u(rng);
    return WeakHypothesis::real(std::move(v));
}

/// Labels and a pool of random two-valued hypotheses; no feature geometry.
inline RandomInstance binary_instance(Rng& rng, std::size_t max_m,
                                      std::size_t max_pool,
                                      bool uniform_w0 = true) {
    std::uniform_int_distribution<std::size_t> md(4, max_m);
    std::uniform_int_distribution<std::size_t> pd(2, max_pool);
    const std::size_t m = md(rng);
    TrainingSet ts = TrainingSet::from_labels(labels(rng, m));
    std::vector<WeakHypothesis> pool;
    const std::size_t p = pd(rng);
    for (std::size_t j = 0; j < p; ++j) pool.push_back(binary_hypothesis(rng, m));
    WeightMeasure w0 = uniform_w0 ? WeightMeasure::uniform(m)
                                  : positive_measure(rng, m);
    return {std::move(ts), std::move(w0), std::move(pool)};
}

/// Random points on the line with a deterministic stump pool, subsampled
/// to at most max_pool stumps. When noisy_threshold is set, the labels are
/// a threshold rule with a couple of flips, which boosting can usually
/// drive to zero training error.
inline RandomInstance stump_instance(Rng& rng, std::size_t max_m,
                                     std::size_t max_pool,
                                     bool noisy_threshold = false) {
    std::uniform_int_distribution<std::size_t> md(4, max_m);
    const std::size_t m = md(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec> points(m);
    for (Vec& p : points) p = {u(rng)};

    std::vector<int> y;
    if (noisy_threshold) {
        const double theta = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
        y.resize(m);
        for (std::size_t i = 0; i < m; ++i) y[i] = points[i][0] > theta ? 1 : -1;
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        y[pick(rng)] *= -1;
    } else {
        y = labels(rng, m);
    }
    TrainingSet ts(std::move(points), std::move(y));

    StumpPool stumps = build_stumps(ts);
    std::vector<WeakHypothesis> pool = std::move(stumps.hypotheses);
    while (pool.size() > max_pool) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
    }
    WeightMeasure w0 = WeightMeasure::uniform(ts.size());
    return {std::move(ts), std::move(w0), std::move(pool)};
}

/// Pool of real-valued hypotheses for edge-crossing runs.
inline RandomInstance real_instance(Rng& rng, std::size_t max_m,
                                    std::size_t pool_size) {
    std::uniform_int_distribution<std::size_t> md(4, max_m);
    const std::size_t m = md(rng);
    TrainingSet ts = TrainingSet::from_labels(labels(rng, m));
    std::vector<WeakHypothesis> pool;
    for (std::size_t j = 0; j < pool_size; ++j) {
        pool.push_back(real_hypothesis(rng, m));
    }
    return {std::move(ts), WeightMeasure::uniform(m), std::move(pool)};
}

/// Two real-valued hypotheses whose edge curves tend to cross
/// transversally: the second is a damped copy of the first plus noise, so
/// its edge moves on a slower scale and takes over as the first decays.
inline RandomInstance crossing_pair_instance(Rng& rng, std::size_t max_m) {
    std::uniform_int_distribution<std::size_t> md(5, max_m);
    const std::size_t m = md(rng);
    TrainingSet ts = TrainingSet::from_labels(labels(rng, m));
    WeakHypothesis first = real_hypothesis(rng, m);
    std::uniform_real_distribution<double> ad(0.3, 0.7);
    std::uniform_real_distribution<double> nd(-0.15, 0.15);
    const double damp = ad(rng);
    Vec v(m);
    for (std::size_t k = 0; k < m; ++k) {
        v[k] = damp * first.values[k] + nd(rng);
    }
    std::vector<WeakHypothesis> pool{std::move(first),
                                     WeakHypothesis::real(std::move(v))};
    return {std::move(ts), WeightMeasure::uniform(m), std::move(pool)};
}

inline std::vector<PartitionHypothesis> partitions(Rng& rng, std::size_t m,
                                                   std::size_t pool_size,
                                                   int max_leaves) {
    std::uniform_int_distribution<int> ld(2, max_leaves);
    std::vector<PartitionHypothesis> pool;
    for (std::size_t j = 0; j < pool_size; ++j) {
        const int p = ld(rng);
        std::uniform_int_distribution<int> leaf(0, p - 1);
        std::vector<int> assign(m);
        for (int& l : assign) l = leaf(rng);
        pool.push_back(PartitionHypothesis::from_leaves(std::move(assign)));
    }
    return pool;
}

/// Instance symmetric under a label-flipping involution, with a pool of odd
/// two-valued hypotheses closed under negation. On such instances the
/// per-leaf optimal values reduce to the symmetric +-t of the argmin-W-
/// rounds, so confidence-rated and plain runs coincide. The symmetric but
/// non-uniform initial measure keeps distinct partitions from tying
/// exactly in their error masses.
inline RandomInstance mirror_instance(Rng& rng, std::size_t max_half,
                                      std::size_t half_pool) {
    std::uniform_int_distribution<std::size_t> md(2, max_half);
    const std::size_t q = md(rng);
    std::vector<int> y = labels(rng, q);
    y.resize(2 * q);
    for (std::size_t i = 0; i < q; ++i) y[q + i] = -y[i];
    TrainingSet ts = TrainingSet::from_labels(std::move(y));

    std::vector<WeakHypothesis> pool;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < half_pool; ++j) {
        Vec v(2 * q);
        for (std::size_t i = 0; i < q; ++i) {
            v[i] = coin(rng) ? 1.0 : -1.0;
            v[q + i] = -v[i];
        }
        WeakHypothesis h = WeakHypothesis::binary(std::move(v));
        pool.push_back(h.negated());
        pool.push_back(std::move(h));
    }

    std::uniform_real_distribution<double> u(0.05, 1.0);
    Vec w(2 * q);
    double total = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
        w[i] = w[q + i] = u(rng);
        total += 2.0 * w[i];
    }
    for (double& x : w) x /= total;
    return {std::move(ts), WeightMeasure(std::move(w)), std::move(pool)};
}

}  // namespace gen
}  // namespace ctboost

#endif  // CTBOOST_INSTANCES_HPP
