#include <cstdio>
#include "ctboost/checks.hpp"

using namespace ctboost;

int main() {
    gen::Rng rng(42 + 15);
    for (int i = 0; i < 150; ++i) {
        RandomInstance inst = gen::mirror_instance(rng, 8, 4);
        bool has_perfect = false;
        for (const WeakHypothesis& h : inst.pool) {
            if (edge_stats(h, inst.w0, inst.ts).w_minus == 0.0) has_perfect = true;
        }
        if (has_perfect) continue;
        std::vector<PartitionHypothesis> parts;
        for (const WeakHypothesis& h : inst.pool) {
            parts.push_back(PartitionHypothesis::from_binary(h));
        }
        const DiscreteRun ada = run_discrete_adaboost(inst.ts, inst.pool, inst.w0, 40);
        const DiscreteRun crp = run_discrete_crp(inst.ts, parts, inst.w0, 40, 1e-3);
        if (ada.rounds.size() == crp.rounds.size()) continue;
        std::printf("instance %d m=%zu pool=%zu: ada rounds=%zu stop=%s | crp rounds=%zu stop=%s\n",
                    i, inst.ts.size(), inst.pool.size(), ada.rounds.size(),
                    to_string(ada.stop), crp.rounds.size(), to_string(crp.stop));
        const std::size_t n = std::max(ada.rounds.size(), crp.rounds.size());
        for (std::size_t k = 0; k < n; ++k) {
            if (k < ada.rounds.size())
                std::printf("  ada k=%zu hyp=%d t=%.17g Z=%.17g beta=%.3e\n", k,
                            ada.rounds[k].hyp, ada.rounds[k].t_weight,
                            ada.rounds[k].z_value, ada.rounds[k].beta);
            if (k < crp.rounds.size())
                std::printf("  crp k=%zu hyp=%d t=%.17g Z=%.17g beta=%.3e\n", k,
                            crp.rounds[k].hyp, crp.rounds[k].t_weight,
                            crp.rounds[k].z_value, crp.rounds[k].beta);
        }
        // per-pool stats at the divergence round
        const std::size_t kd = std::min(ada.rounds.size(), crp.rounds.size());
        WeightMeasure w = kd == 0 ? inst.w0 : ada.rounds[kd - 1].w_after;
        for (std::size_t j = 0; j < inst.pool.size(); ++j) {
            const EdgeStats s = edge_stats(inst.pool[j], w, inst.ts);
            const CrpValueAssignment a = crp_assign_values(parts[j], w, inst.ts, 1.0, 1e-3);
            std::printf("    j=%zu W-=%.17g z_sum=%.17g\n", j, s.w_minus, a.z_sum);
        }
        break;
    }
    return 0;
}
