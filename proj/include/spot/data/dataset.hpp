#pragma once

#include "spot/graph/graph.hpp"
#include "spot/numerics/tensor.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spot::data {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using TimePoint = std::chrono::sys_seconds;

/// Node signals sampled on a fixed grid: values[t * N + i] is the flow at
/// step t for node i (one input channel).
struct STGDataset {
    std::size_t n_steps = 0;
    std::size_t n_nodes = 0;
    std::vector<double> values;
    TimePoint start_time{};
    int interval_minutes = 5;
    graph::Graph graph;

    double at(std::size_t t, std::size_t node) const { return values[t * n_nodes + node]; }
    std::size_t steps_per_day() const;
};

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]` (space separator also accepted).
TimePoint parse_timestamp(const std::string& s);
std::string format_timestamp(TimePoint t);

/// signals CSV: one row per step, one column per node, optional header.
/// meta JSON: {"start_time": ISO-8601, "interval_minutes": int}, optionally
/// "n_nodes" when trailing nodes have no edges.
STGDataset load_dataset(const std::filesystem::path& signals, const std::filesystem::path& edges,
                        const std::filesystem::path& meta);
/// Loads signals.csv, edges.csv and meta.json from `dir`.
STGDataset load_dataset_dir(const std::filesystem::path& dir);
/// Writes signals.csv, edges.csv and meta.json with round-trip precision.
void save_dataset(const STGDataset& ds, const std::filesystem::path& dir);

/// Rejects datasets too short for one (T, T_out) window.
void require_window_fit(const STGDataset& ds, std::size_t T, std::size_t T_out);

/// FNV-1a over the dataset content (values, edges, calendar).
std::uint64_t fingerprint(const STGDataset& ds);

/// Ring graph, 5-minute steps from Monday 00:00, node i carries
///   50 + 20 sin(2 pi (t + 12 i) / 288) + 5 sin(4 pi (t + 12 i) / 288) + N(0, 1).
STGDataset generate_synthetic(std::size_t n_nodes, std::size_t n_steps, std::uint64_t seed);

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

struct Splits {
    Range train, val, test;
};

/// train = [0, 0.6 tau), val = next floor(0.2 tau) steps, test = remainder.
Splits split_622(std::size_t n_steps);

/// Anchors t (index of the last input step) with [t-T+1, t] and
/// [t+1, t+T_out] both inside `r`.
std::vector<std::size_t> make_windows(Range r, std::size_t T, std::size_t T_out);

/// Z-score statistics from one range (the training split).
struct Normalizer {
    double mean = 0.0;
    double std = 1.0;

    static Normalizer fit(const STGDataset& ds, Range train);
    double normalize(double x) const { return (x - mean) / std; }
    double denormalize(double z) const { return z * std + mean; }
};

struct Calendar {
    std::size_t tod = 0; ///< slot within the day
    std::size_t dow = 0; ///< Monday = 0
};
Calendar calendar_indices(const STGDataset& ds, std::size_t t);

/// Batched windows. inputs/targets are normalized, targets_raw is not.
struct WindowBatch {
    std::vector<std::size_t> anchors;
    num::Tensor inputs;      // [B, T, N, 1]
    num::Tensor targets;     // [B, T_out, N, 1]
    num::Tensor targets_raw; // [B, T_out, N, 1]
    std::vector<std::size_t> tod, dow;               // B * T
    std::vector<std::size_t> target_tod, target_dow; // B * T_out
};
WindowBatch make_batch(const STGDataset& ds, const Normalizer& norm, std::span<const std::size_t> anchors,
                       std::size_t T, std::size_t T_out);

/// Copies the last T_out raw input steps of each window: [B, T_out, N, 1].
num::Tensor naive_predict(const STGDataset& ds, std::span<const std::size_t> anchors, std::size_t T_out);

double metric_mae(std::span<const double> pred, std::span<const double> truth);
double metric_rmse(std::span<const double> pred, std::span<const double> truth);
/// Percent; entries with zero truth are excluded.
double metric_mape(std::span<const double> pred, std::span<const double> truth);

} // namespace spot::data
