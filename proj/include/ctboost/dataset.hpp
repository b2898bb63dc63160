#ifndef CTBOOST_DATASET_HPP
#define CTBOOST_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctboost/core.hpp"

namespace ctboost {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Dataset {
    TrainingSet ts;
    std::vector<std::string> feature_names;
    std::optional<Vec> weights;  // raw weight column, when requested
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
            cell.pop_back();
        }
        std::size_t start = 0;
        while (start < cell.size() && cell[start] == ' ') ++start;
        cells.push_back(cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_number(const std::string& cell, std::size_t line_no) {
    double out = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw CsvError("line " + std::to_string(line_no) +
                       ": not a number: '" + cell + "'");
    }
    return out;
}

}  // namespace detail

/// Reads a header CSV whose last column is the label, in {-1,+1} or {0,1}
/// (0 maps to -1). Remaining columns are numeric features; weight_column,
/// when named, is pulled out as the initial measure instead of a feature.
inline Dataset ingest_csv(const std::string& path,
                          const std::string& weight_column = "") {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw CsvError("'" + path + "': empty file");
    const std::vector<std::string> header = detail::split_csv_row(line);
    if (header.size() < 2) {
        throw CsvError("'" + path + "': need at least one feature and a label");
    }

    std::size_t weight_idx = header.size();
    if (!weight_column.empty()) {
        for (std::size_t j = 0; j + 1 < header.size(); ++j) {
            if (header[j] == weight_column) weight_idx = j;
        }
        if (weight_idx == header.size()) {
            throw CsvError("'" + path + "': no weight column named '" +
                           weight_column + "'");
        }
    }

    std::vector<Vec> points;
    std::vector<double> raw_labels;
    Vec weights;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = detail::split_csv_row(line);
        if (cells.size() != header.size()) {
            throw CsvError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
        }
        Vec row;
        for (std::size_t j = 0; j + 1 < cells.size(); ++j) {
            const double v = detail::parse_number(cells[j], line_no);
            if (j == weight_idx) {
                weights.push_back(v);
            } else {
                row.push_back(v);
            }
        }
        raw_labels.push_back(detail::parse_number(cells.back(), line_no));
        points.push_back(std::move(row));
    }
    if (raw_labels.empty()) {
        throw CsvError("'" + path + "': no data rows");
    }

    bool zero_one = true, plus_minus = true;
    for (double v : raw_labels) {
        if (v != 0.0 && v != 1.0) zero_one = false;
        if (v != -1.0 && v != 1.0) plus_minus = false;
    }
    if (!zero_one && !plus_minus) {
        for (std::size_t i = 0; i < raw_labels.size(); ++i) {
            const double v = raw_labels[i];
            if (v != 0.0 && v != 1.0 && v != -1.0) {
                std::ostringstream os;
                os << "row " << (i + 2) << ": label " << v
                   << " is not in {-1,+1} or {0,1}";
                throw CsvError(os.str());
            }
        }
        throw CsvError("labels mix the {-1,+1} and {0,1} conventions");
    }
    std::vector<int> labels(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        labels[i] = plus_minus ? static_cast<int>(raw_labels[i])
                               : (raw_labels[i] == 0.0 ? -1 : 1);
    }

    Dataset d{TrainingSet(std::move(points), std::move(labels)), {}, {}};
    for (std::size_t j = 0; j + 1 < header.size(); ++j) {
        if (j != weight_idx) d.feature_names.push_back(header[j]);
    }
    if (weight_idx != header.size()) d.weights = std::move(weights);
    return d;
}

/// Initial measure from a dataset: the normalized weight column when one
/// was ingested, otherwise uniform.
inline WeightMeasure initial_measure(const Dataset& d) {
    if (!d.weights) return WeightMeasure::uniform(d.ts.size());
    Vec w = *d.weights;
    double total = 0.0;
    for (double x : w) {
        if (x < 0.0) throw CsvError("weight column has a negative entry");
        total += x;
    }
    if (!(total > 0.0)) throw CsvError("weight column sums to zero");
    for (double& x : w) x /= total;
    return WeightMeasure(std::move(w));
}

struct StumpDescriptor {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1: predict +1 above the threshold
};

struct StumpPool {
    std::vector<WeakHypothesis> hypotheses;
    std::vector<StumpDescriptor> descriptors;
    std::vector<int> constant_features;  // skipped, nothing to split on
};

/// Deterministic axis-aligned threshold stumps: thresholds are midpoints
/// between consecutive distinct sorted feature values, both polarities.
/// resolution > 0 subsamples to that many evenly spaced thresholds per
/// feature.
inline StumpPool build_stumps(const TrainingSet& ts, int resolution = 0) {
    if (ts.dim() == 0) {
        throw std::invalid_argument("build_stumps: training set has no features");
    }
    StumpPool pool;
    const std::size_t m = ts.size();
    for (std::size_t f = 0; f < ts.dim(); ++f) {
        Vec vals(m);
        for (std::size_t i = 0; i < m; ++i) vals[i] = ts.points[i][f];
        Vec sorted = vals;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        if (sorted.size() < 2) {
            pool.constant_features.push_back(static_cast<int>(f));
            continue;
        }
        Vec thresholds;
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            thresholds.push_back(0.5 * (sorted[k] + sorted[k + 1]));
        }
        if (resolution > 0 &&
            static_cast<std::size_t>(resolution) < thresholds.size()) {
            Vec picked;
            for (int j = 0; j < resolution; ++j) {
                const auto idx = static_cast<std::size_t>(
                    (j + 0.5) * static_cast<double>(thresholds.size()) /
                    resolution);
                picked.push_back(thresholds[std::min(idx, thresholds.size() - 1)]);
            }
            picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
            thresholds = std::move(picked);
        }
        for (double theta : thresholds) {
            for (int polarity : {1, -1}) {
                Vec hv(m);
                for (std::size_t i = 0; i < m; ++i) {
                    hv[i] = (vals[i] > theta ? 1.0 : -1.0) * polarity;
                }
                pool.hypotheses.push_back(WeakHypothesis::binary(std::move(hv)));
                pool.descriptors.push_back(
                    {static_cast<int>(f), theta, polarity});
            }
        }
    }
    return pool;
}

}  // namespace ctboost

#endif  // CTBOOST_DATASET_HPP
