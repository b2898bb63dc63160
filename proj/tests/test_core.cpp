#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ctboost/core.hpp"
#include "ctboost/instances.hpp"

using namespace ctboost;

namespace {

TrainingSet four_points() {
    // canonical fixture: labels +,+,+,-; stumps act through value vectors
    return TrainingSet::from_labels({1, 1, 1, -1});
}

// h correct on the first three points, wrong on the last
WeakHypothesis three_of_four() {
    return WeakHypothesis::binary({1.0, 1.0, 1.0, 1.0});
}

}  // namespace

TEST_CASE("training set validation") {
    CHECK_THROWS_AS(TrainingSet::from_labels({}), std::invalid_argument);
    CHECK_THROWS_AS(TrainingSet::from_labels({1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(TrainingSet({{1.0}, {2.0, 3.0}}, {1, -1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(TrainingSet({{1.0}}, {1, -1}), std::invalid_argument);
    const TrainingSet ts({{1.0}, {2.0}}, {1, -1});
    CHECK(ts.size() == 2);
    CHECK(ts.dim() == 1);
}

TEST_CASE("weak hypothesis kinds") {
    CHECK_THROWS_AS(WeakHypothesis::binary({1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(WeakHypothesis::binary({1.0, -1.0}, -2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(WeakHypothesis::ternary({0.5}), std::invalid_argument);
    const WeakHypothesis b = WeakHypothesis::binary({2.0, -2.0}, 2.0);
    CHECK(b.kind == HypKind::binary);
    CHECK(b.level == 2.0);
    CHECK(WeakHypothesis::ternary({1, 0, -1}).kind == HypKind::ternary);
    const WeakHypothesis n = b.negated();
    CHECK(n.values[0] == -2.0);
}

TEST_CASE("weight measure validation") {
    CHECK_THROWS_AS(WeightMeasure({0.5, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(WeightMeasure({1.5, -0.5}), std::invalid_argument);
    const WeightMeasure u = WeightMeasure::uniform(4);
    CHECK(u[0] == 0.25);
    CHECK(u.size() == 4);
}

TEST_CASE("classification error masses and edge") {
    const TrainingSet ts = four_points();
    const WeightMeasure u = WeightMeasure::uniform(4);

    SECTION("all-correct case") {
        const WeakHypothesis h = WeakHypothesis::binary({1, 1, 1, -1});
        const EdgeStats s = edge_stats(h, u, ts);
        CHECK(s.w_minus == 0.0);
        CHECK(s.sigma == 1.0);
    }

    SECTION("three of four correct") {
        const EdgeStats s = edge_stats(three_of_four(), u, ts);
        CHECK(s.w_plus == 0.75);
        CHECK(s.w_minus == 0.25);
        CHECK(s.sigma == 0.5);
        CHECK(s.beta == 0.25);
    }

    SECTION("weighted two-point case") {
        const TrainingSet two = TrainingSet::from_labels({1, 1});
        const WeakHypothesis h = WeakHypothesis::binary({1.0, -1.0});
        const EdgeStats s = edge_stats(h, WeightMeasure({0.1, 0.9}), two);
        CHECK(s.w_minus == 0.9);
        CHECK(s.sigma == Catch::Approx(-0.8).margin(1e-15));
    }

    SECTION("dimension mismatch") {
        const WeakHypothesis h = WeakHypothesis::binary({1.0, -1.0});
        CHECK_THROWS_AS(edge_stats(h, u, ts), std::invalid_argument);
    }

    SECTION("ternary masses sum to one") {
        const WeakHypothesis h = WeakHypothesis::ternary({1, 0, -1, 0});
        const EdgeStats s = edge_stats(h, u, ts);
        CHECK(s.w_plus + s.w_minus + s.w_zero == 1.0);
        CHECK(s.w_zero == 0.5);
    }

    SECTION("per-value table aggregates exactly") {
        gen::Rng rng(7);
        for (int i = 0; i < 50; ++i) {
            const std::size_t m = 5 + i % 7;
            TrainingSet rts = TrainingSet::from_labels(gen::labels(rng, m));
            const WeakHypothesis h = gen::ternary_hypothesis(rng, m);
            const WeightMeasure w = gen::positive_measure(rng, m);
            const EdgeStats s = edge_stats(h, w, rts);
            double total = 0.0, sigma = 0.0;
            for (const auto& [value, lm] : s.per_value) {
                total += lm.pos + lm.neg;
                sigma += value * (lm.pos - lm.neg);
            }
            CHECK(total == Catch::Approx(1.0).margin(1e-12));
            CHECK(sigma == Catch::Approx(s.sigma).margin(1e-12));
        }
    }

    SECTION("binary edge identity sigma = c (W+ - W-)") {
        gen::Rng rng(8);
        for (int i = 0; i < 50; ++i) {
            const std::size_t m = 4 + i % 9;
            TrainingSet rts = TrainingSet::from_labels(gen::labels(rng, m));
            const WeightMeasure w = gen::positive_measure(rng, m);
            WeakHypothesis h = gen::binary_hypothesis(rng, m);
            const double c = 0.5 + (i % 4);
            for (double& v : h.values) v *= c;
            h.level = c;
            const EdgeStats s = edge_stats(h, w, rts);
            CHECK(s.sigma ==
                  Catch::Approx(c * (s.w_plus - s.w_minus)).margin(1e-12));
        }
    }

    SECTION("linearity in the measure") {
        gen::Rng rng(9);
        for (int i = 0; i < 50; ++i) {
            const std::size_t m = 4 + i % 9;
            TrainingSet rts = TrainingSet::from_labels(gen::labels(rng, m));
            const WeakHypothesis h = gen::ternary_hypothesis(rng, m);
            const WeightMeasure w1 = gen::positive_measure(rng, m);
            const WeightMeasure w2 = gen::positive_measure(rng, m);
            const double lam = std::uniform_real_distribution<>(0.0, 1.0)(rng);
            Vec mixv(m);
            for (std::size_t k = 0; k < m; ++k) {
                mixv[k] = lam * w1[k] + (1.0 - lam) * w2[k];
            }
            const EdgeStats mixed = edge_stats(h, WeightMeasure(mixv), rts);
            const EdgeStats a = edge_stats(h, w1, rts);
            const EdgeStats b = edge_stats(h, w2, rts);
            CHECK(mixed.w_minus ==
                  Catch::Approx(lam * a.w_minus + (1 - lam) * b.w_minus)
                      .margin(1e-12));
            CHECK(mixed.sigma ==
                  Catch::Approx(lam * a.sigma + (1 - lam) * b.sigma)
                      .margin(1e-12));
        }
    }
}

TEST_CASE("combined classifier error masses") {
    const TrainingSet ts = four_points();
    const WeightMeasure u = WeightMeasure::uniform(4);

    SECTION("zero ensemble is all-undecided") {
        const Ensemble zero(4);
        const CombinedError e = combined_error(zero, u, ts);
        CHECK(e.w_zero == 1.0);
        CHECK(e.w_minus == 0.0);
    }

    SECTION("single term") {
        Ensemble H(4);
        H.add_term(1.0, 0, three_of_four());
        const CombinedError e = combined_error(H, u, ts);
        CHECK(e.w_minus == 0.25);
        CHECK(e.w_zero == 0.0);
    }

    SECTION("exact cancellation is undecided") {
        Ensemble H(4);
        H.add_term(1.0, 0, WeakHypothesis::binary({1, 1, 1, -1}));
        H.add_term(1.0, 1, WeakHypothesis::binary({-1, 1, 1, -1}));
        const CombinedError e = combined_error(H, u, ts);
        CHECK(e.w_zero == 0.25);
    }
}

TEST_CASE("minimal margin") {
    const TrainingSet ts = four_points();

    SECTION("zero ensemble has margin -1") {
        CHECK(margin(Ensemble(4), ts) == -1.0);
    }

    SECTION("perfect single hypothesis") {
        Ensemble H(4);
        H.add_term(1.0, 0, WeakHypothesis::binary({1, 1, 1, -1}));
        CHECK(margin(H, ts) == 1.0);
    }

    SECTION("one imperfect round pins the margin at -1") {
        Ensemble H(4);
        H.add_term(0.5 * std::log(3.0), 0, three_of_four());
        CHECK(margin(H, ts) == -1.0);
    }

    SECTION("scale invariance") {
        gen::Rng rng(11);
        for (int i = 0; i < 100; ++i) {
            RandomInstance inst = gen::binary_instance(rng, 12, 4);
            Ensemble H(inst.ts.size());
            std::uniform_real_distribution<double> td(0.1, 2.0);
            for (std::size_t j = 0; j < inst.pool.size(); ++j) {
                H.add_term(td(rng), static_cast<int>(j), inst.pool[j]);
            }
            const double c = std::uniform_real_distribution<>(0.01, 50.0)(rng);
            Vec scaled = H.h_values();
            for (double& x : scaled) x *= c;
            CHECK(margin(scaled, c * H.norm(), inst.ts) ==
                  Catch::Approx(margin(H, inst.ts)).margin(1e-12));
        }
    }
}

TEST_CASE("lyapunov function") {
    const TrainingSet ts = four_points();
    const WeightMeasure u = WeightMeasure::uniform(4);

    SECTION("zero ensemble") {
        CHECK(lyapunov_e(Ensemble(4), u, ts) == 1.0);
    }

    SECTION("one optimal round reaches the round normalizer") {
        Ensemble H(4);
        H.add_term(0.5 * std::log(3.0), 0, three_of_four());
        CHECK(lyapunov_e(H, u, ts) ==
              Catch::Approx(std::sqrt(3.0) / 2.0).margin(1e-12));
    }

    SECTION("strict convexity in H") {
        gen::Rng rng(13);
        int checked = 0;
        for (int i = 0; i < 100; ++i) {
            RandomInstance inst = gen::binary_instance(rng, 10, 2, false);
            Ensemble h1(inst.ts.size()), h2(inst.ts.size());
            h1.add_term(0.7, 0, inst.pool[0]);
            h2.add_term(1.3, 1, inst.pool[1]);
            if (h1.h_values() == h2.h_values()) continue;
            ++checked;
            const double lam = 0.3;
            Vec mix(inst.ts.size());
            for (std::size_t k = 0; k < mix.size(); ++k) {
                mix[k] = lam * h1.h_values()[k] + (1 - lam) * h2.h_values()[k];
            }
            CHECK(lyapunov_e(mix, inst.w0, inst.ts) <
                  lam * lyapunov_e(h1, inst.w0, inst.ts) +
                      (1 - lam) * lyapunov_e(h2, inst.w0, inst.ts));
        }
        CHECK(checked > 50);
    }

    SECTION("overestimates the training error") {
        gen::Rng rng(17);
        for (int i = 0; i < 1000; ++i) {
            RandomInstance inst = gen::binary_instance(rng, 12, 3, false);
            Ensemble H(inst.ts.size());
            std::uniform_real_distribution<double> td(0.0, 2.0);
            for (std::size_t j = 0; j < inst.pool.size(); ++j) {
                H.add_term(td(rng), static_cast<int>(j), inst.pool[j]);
            }
            const CombinedError e = combined_error(H, inst.w0, inst.ts);
            CHECK(e.w_minus + e.w_zero <=
                  lyapunov_e(H, inst.w0, inst.ts) + 1e-12);
        }
    }
}

TEST_CASE("ensemble bookkeeping") {
    const TrainingSet ts = four_points();
    Ensemble H(4);
    const WeakHypothesis h = three_of_four();
    H.add_term(0.5, 3, h);
    H.add_term(0.25, 3, h);  // same control merges
    CHECK(H.terms().size() == 1);
    CHECK(H.terms()[0].weight == 0.75);
    H.add_term(1.0, 1, WeakHypothesis::binary({-1, -1, -1, 1}));
    CHECK(H.terms().size() == 2);
    CHECK(H.norm() == 1.75);

    std::vector<WeakHypothesis> pool{
        WeakHypothesis::binary({1, 1, 1, -1}),
        WeakHypothesis::binary({-1, -1, -1, 1}), WeakHypothesis::binary({1, -1, 1, -1}),
        three_of_four()};
    CHECK(max_abs_diff(H.recompute(pool), H.h_values()) <= 1e-12);

    CHECK_THROWS_AS(H.add_term(-0.1, 0, pool[0]), std::invalid_argument);
}
