#ifndef CTBOOST_TRAJECTORY_HPP
#define CTBOOST_TRAJECTORY_HPP

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctboost/core.hpp"
#include "ctboost/flow.hpp"

namespace ctboost {

struct TrajectorySample {
    double time = 0.0;
    int segment_index = 0;
    int hyp_id = -1;
    double sigma = 0.0;
    double lyapunov_e = 1.0;
    double margin = -1.0;
    Vec w;
};

struct TrajectorySegment {
    int hyp_id = -1;
    double start_time = 0.0;
    double duration = 0.0;
    double log_z = 0.0;  // exact integral of sigma over the segment is -log_z
    double sigma_start = 0.0;
    double sigma_end = 0.0;
};

struct RecordOptions {
    double sample_dt = 0.0;  // > 0 adds dense interior samples for plots
};

/// Recorded run: per-segment normalizers (which carry the exact sigma
/// integrals), boundary states, and plot-ready samples. Samples sit at
/// segment starts plus one final row; sigma in a row is the edge of the
/// control active from that time on (the final row reports the outgoing
/// control's edge).
struct Trajectory {
    Vec w0;
    std::vector<TrajectorySegment> segments;
    std::vector<TrajectorySample> samples;
    std::vector<FlowState> boundaries;  // segments.size() + 1 states

    double integral_sigma() const {
        double s = 0.0;
        for (const TrajectorySegment& seg : segments) s -= seg.log_z;
        return s;
    }
    double total_time() const {
        return boundaries.empty() ? 0.0 : boundaries.back().time;
    }
};

class TrajectoryRecorder {
public:
    TrajectoryRecorder(const TrainingSet& ts, const FlowState& s0,
                       RecordOptions opt = {})
        : ts_(ts), opt_(opt) {
        traj_.w0 = s0.w.weights();
        traj_.boundaries.push_back(s0);
    }

    void add_segment(const PropagationResult& prop, const WeakHypothesis& control,
                     int hyp_id) {
        const FlowState& before = traj_.boundaries.back();
        const int seg_index = static_cast<int>(traj_.segments.size());
        traj_.samples.push_back(make_sample(before, seg_index, hyp_id,
                                            edge(control, before.w, ts_)));
        if (opt_.sample_dt > 0.0) {
            for (double dt = opt_.sample_dt; dt < prop.state.time - before.time;
                 dt += opt_.sample_dt) {
                const FlowState mid =
                    propagate_closed_form(before, control, hyp_id, dt, ts_).state;
                traj_.samples.push_back(
                    make_sample(mid, seg_index, hyp_id, edge(control, mid.w, ts_)));
            }
        }
        traj_.segments.push_back({hyp_id, before.time,
                                  prop.state.time - before.time, prop.log_z,
                                  edge(control, before.w, ts_),
                                  edge(control, prop.state.w, ts_)});
        traj_.boundaries.push_back(prop.state);
    }

    Trajectory finish() {
        const FlowState& last = traj_.boundaries.back();
        double sig = 0.0;
        if (!traj_.segments.empty()) sig = traj_.segments.back().sigma_end;
        traj_.samples.push_back(make_sample(
            last, static_cast<int>(traj_.segments.size()), -1, sig));
        return std::move(traj_);
    }

private:
    TrajectorySample make_sample(const FlowState& s, int seg, int hyp,
                                 double sigma) const {
        const WeightMeasure w0{Vec(traj_.w0)};
        return {s.time,  seg,
                hyp,     sigma,
                lyapunov_e(s.h_values, w0, ts_),
                margin(s.h_values, s.ensemble.norm(), ts_),
                s.w.weights()};
    }

    const TrainingSet& ts_;
    RecordOptions opt_;
    Trajectory traj_;
};

struct LyapunovCheck {
    double lhs = 0.0;  // log E(H_T, w0)
    double rhs = 0.0;  // -integral of sigma over [0,T]
    double max_segment_residual = 0.0;
};

/// Checks log E(H_T, w0) = -int sigma ds, with the integral taken from the
/// exact per-segment normalizers, plus the per-segment multiplicative form
/// E(H_{k+1}, w0) = Z_k E(H_k, w0).
inline LyapunovCheck lyapunov_identity_check(const Trajectory& traj,
                                             const TrainingSet& ts) {
    const WeightMeasure w0{Vec(traj.w0)};
    LyapunovCheck c;
    c.lhs = log_lyapunov_e(traj.boundaries.back().h_values, w0, ts);
    c.rhs = -traj.integral_sigma();
    for (std::size_t k = 0; k < traj.segments.size(); ++k) {
        const double before =
            log_lyapunov_e(traj.boundaries[k].h_values, w0, ts);
        const double after =
            log_lyapunov_e(traj.boundaries[k + 1].h_values, w0, ts);
        c.max_segment_residual = std::max(
            c.max_segment_residual,
            std::abs(after - before - traj.segments[k].log_z));
    }
    return c;
}

/// Residual of the two-time identity
///   log E(H_t, w_p) - log E(H_p, w_t) = -int_p^t sigma ds
/// between two recorded boundary indices p < t.
inline double two_time_residual(const Trajectory& traj, const TrainingSet& ts,
                                std::size_t p, std::size_t t) {
    if (p >= t || t >= traj.boundaries.size()) {
        throw std::invalid_argument("two_time_residual: need p < t within range");
    }
    const FlowState& sp = traj.boundaries[p];
    const FlowState& st = traj.boundaries[t];
    double integral = 0.0;
    for (std::size_t k = p; k < t; ++k) integral -= traj.segments[k].log_z;
    const double lhs = log_lyapunov_e(st.h_values, sp.w, ts) -
                       log_lyapunov_e(sp.h_values, st.w, ts);
    return std::abs(lhs + integral);
}

// --- export -----------------------------------------------------------

namespace detail {
inline std::string fmt_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const std::size_t m = traj.w0.size();
    os << "time,segment_index,hyp_id,sigma,lyapunov_E,margin";
    for (std::size_t i = 1; i <= m; ++i) os << ",w_" << i;
    os << "\n";
    for (const TrajectorySample& s : traj.samples) {
        os << detail::fmt_full(s.time) << ',' << s.segment_index << ','
           << s.hyp_id << ',' << detail::fmt_full(s.sigma) << ','
           << detail::fmt_full(s.lyapunov_e) << ',' << detail::fmt_full(s.margin);
        for (double x : s.w) os << ',' << detail::fmt_full(x);
        os << "\n";
    }
}

inline std::vector<TrajectorySample> parse_trajectory_csv(std::istream& is) {
    std::vector<TrajectorySample> out;
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("trajectory csv: missing header");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 6) {
            throw std::runtime_error("trajectory csv: short row");
        }
        TrajectorySample s;
        s.time = std::stod(cells[0]);
        s.segment_index = std::stoi(cells[1]);
        s.hyp_id = std::stoi(cells[2]);
        s.sigma = std::stod(cells[3]);
        s.lyapunov_e = std::stod(cells[4]);
        s.margin = std::stod(cells[5]);
        for (std::size_t i = 6; i < cells.size(); ++i) {
            s.w.push_back(std::stod(cells[i]));
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline nlohmann::json trajectory_to_json(const Trajectory& traj) {
    nlohmann::json rows = nlohmann::json::array();
    for (const TrajectorySample& s : traj.samples) {
        rows.push_back({{"time", s.time},
                        {"segment_index", s.segment_index},
                        {"hyp_id", s.hyp_id},
                        {"sigma", s.sigma},
                        {"lyapunov_E", s.lyapunov_e},
                        {"margin", s.margin},
                        {"w", s.w}});
    }
    return nlohmann::json{{"samples", rows}};
}

}  // namespace ctboost

#endif  // CTBOOST_TRAJECTORY_HPP
