#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepen/dataset.hpp"
#include "deepen/training.hpp"

namespace deepen {

/// Where the experiment's data comes from. When file is set it is the single
/// source all arms and seeds read; the generator block describes how that
/// file is (re)produced.
struct DatasetConfig {
    std::string file;  // CSV with role column; empty = generate in memory
    bool has_generator = false;
    int n_total = 600;
    double noise_std = 0.0;
    double turns = 0.0;
    std::uint64_t data_seed = 0;
    int n_train = 450;
    std::uint64_t split_seed = 0;
};

struct ArmConfig {
    std::string name;
    NetworkSpec spec;
    double learning_rate = 0.1;
    std::optional<double> post_insertion_learning_rate;
    std::optional<InsertionConfig> insertion;
    std::optional<int> iterations;  // overrides the experiment-level count
    OptimizerConfig optimizer;
};

/// A named set of arms sharing one dataset, one split, and one seed list.
struct ExperimentSpec {
    std::string name;
    DatasetConfig dataset;
    int iterations = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<ArmConfig> arms;
    std::string out_dir;
    bool write_checkpoints = false;
};

/// Parses the JSON experiment config; file and out_dir paths are resolved
/// relative to the config file's directory.
ExperimentSpec load_experiment_config(const std::string& path);

/// Loads dataset.file when present (generating and writing it first if the
/// file is missing but a generator block exists), otherwise generates and
/// splits in memory.
TrainTestSplit prepare_dataset(const DatasetConfig& cfg);

struct RunOutcome {
    std::string arm;
    std::uint64_t seed = 0;
    bool ok = false;
    bool diverged = false;
    std::string error;
    double final_train_loss = 0.0;
    double final_test_error = 0.0;
};

struct ExperimentResult {
    std::string out_dir;
    std::vector<RunOutcome> runs;
    int failures = 0;
};

/// Runs every arm x seed (work pool across runs, each run sequential),
/// writes one history CSV per run, a merged event log, and the aggregate
/// CSV of per-iteration means across seeds. Failed runs are recorded in
/// failures.json and do not stop the remaining runs. threads == 0 picks the
/// hardware concurrency.
ExperimentResult run_experiment(const ExperimentSpec& spec, const TrainTestSplit& data,
                                int threads = 0);
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 0);

/// Recomputes aggregate.csv from the per-run CSVs already in spec.out_dir.
void aggregate_experiment(const ExperimentSpec& spec);

/// Emits plot-ready series files (one whitespace-delimited file per curve:
/// iteration value) plus a manifest of curves and insertion markers, from
/// aggregate.csv and events.csv. Throws if the aggregate is missing.
void emit_plot_data(const ExperimentSpec& spec);

// --- pieces shared by the CLI and the test suites ---

/// %.17g, enough digits to round-trip a double.
std::string format_double(double v);

/// Header run_id,arm,iteration,train_loss,test_error.
void write_history_csv(const std::string& path, const std::string& run_id,
                       const std::string& arm, const TrainingHistory& history);

struct HistoryRows {
    std::vector<TrainingRecord> records;
};
HistoryRows read_history_csv(const std::string& path);

std::string run_id_for_seed(std::uint64_t seed);
std::string history_csv_path(const ExperimentSpec& spec, const ArmConfig& arm,
                             std::uint64_t seed);

}  // namespace deepen
