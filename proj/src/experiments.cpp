#include "deepen/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "deepen/checkpoint.hpp"

namespace deepen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string run_id_for_seed(std::uint64_t seed) { return "s" + std::to_string(seed); }

std::string history_csv_path(const ExperimentSpec& spec, const ArmConfig& arm,
                             std::uint64_t seed) {
    return (fs::path(spec.out_dir) / (arm.name + "_" + run_id_for_seed(seed) + ".csv")).string();
}

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path path(p);
    return path.is_absolute() ? path.string() : (base / path).lexically_normal().string();
}

InsertionStrategy parse_strategy(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "max_merit") return InsertionStrategy::max_merit();
        if (s == "min_merit") return InsertionStrategy::min_merit();
        throw std::runtime_error("config: unknown strategy '" + s + "'");
    }
    if (j.is_object() && j.contains("fixed")) {
        return InsertionStrategy::fixed(j.at("fixed").get<int>());
    }
    throw std::runtime_error("config: strategy must be \"max_merit\", \"min_merit\" or {\"fixed\": k}");
}

NetworkKind parse_kind(const std::string& s) {
    if (s == "fnn") return NetworkKind::Fnn;
    if (s == "resnet") return NetworkKind::ResNet;
    throw std::runtime_error("config: unknown network kind '" + s + "'");
}

}  // namespace

ExperimentSpec load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error("config: " + path + ": " + e.what());
    }
    const fs::path base = fs::path(path).parent_path();

    ExperimentSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.iterations = j.at("iterations").get<int>();
    spec.out_dir = resolve(base, j.at("out_dir").get<std::string>());
    spec.write_checkpoints = j.value("write_checkpoints", false);

    const json& seeds = j.at("seeds");
    if (seeds.is_array()) {
        for (const auto& s : seeds) spec.seeds.push_back(s.get<std::uint64_t>());
    } else {
        const std::uint64_t from = seeds.value("from", 0ull);
        const std::uint64_t count = seeds.at("count").get<std::uint64_t>();
        for (std::uint64_t s = 0; s < count; ++s) spec.seeds.push_back(from + s);
    }
    if (spec.seeds.empty()) throw std::runtime_error("config: empty seed list");

    const json& d = j.at("dataset");
    spec.dataset.file = resolve(base, d.value("file", std::string{}));
    spec.dataset.n_train = d.at("n_train").get<int>();
    spec.dataset.split_seed = d.at("split_seed").get<std::uint64_t>();
    if (d.contains("generator")) {
        const json& g = d.at("generator");
        spec.dataset.has_generator = true;
        spec.dataset.n_total = g.at("n_total").get<int>();
        spec.dataset.noise_std = g.at("noise_std").get<double>();
        spec.dataset.turns = g.at("turns").get<double>();
        spec.dataset.data_seed = g.at("seed").get<std::uint64_t>();
    }

    for (const json& a : j.at("arms")) {
        ArmConfig arm;
        arm.name = a.at("name").get<std::string>();
        arm.spec.kind = parse_kind(a.at("kind").get<std::string>());
        arm.spec.widths = a.at("widths").get<std::vector<int>>();
        arm.spec.validate();
        arm.learning_rate = a.at("learning_rate").get<double>();
        if (a.contains("post_insertion_learning_rate")) {
            arm.post_insertion_learning_rate = a.at("post_insertion_learning_rate").get<double>();
        }
        if (a.contains("iterations")) arm.iterations = a.at("iterations").get<int>();
        if (a.contains("insertion")) {
            const json& ins = a.at("insertion");
            InsertionConfig cfg;
            cfg.iteration = ins.at("iteration").get<int>();
            cfg.strategy = parse_strategy(ins.at("strategy"));
            cfg.resnet_inner_scale = ins.value("inner_scale", 0.8);
            arm.insertion = cfg;
        }
        if (a.contains("optimizer")) {
            const json& opt = a.at("optimizer");
            const std::string kind = opt.at("kind").get<std::string>();
            if (kind == "minibatch") {
                arm.optimizer.kind = OptimizerConfig::Kind::MiniBatchSgd;
                arm.optimizer.batch_size = opt.at("batch_size").get<int>();
            } else if (kind != "full_batch") {
                throw std::runtime_error("config: unknown optimizer '" + kind + "'");
            }
        }
        spec.arms.push_back(std::move(arm));
    }
    if (spec.arms.empty()) throw std::runtime_error("config: no arms");
    return spec;
}

TrainTestSplit prepare_dataset(const DatasetConfig& cfg) {
    if (!cfg.file.empty() && fs::exists(cfg.file)) {
        const LoadedDataset loaded = load_dataset_csv(cfg.file);
        return apply_roles(loaded.full, loaded.roles);
    }
    if (!cfg.has_generator) {
        throw std::runtime_error("dataset: file '" + cfg.file +
                                 "' not found and no generator configured");
    }
    const Dataset full = generate_spirals(cfg.n_total, cfg.noise_std, cfg.turns, cfg.data_seed);
    TrainTestSplit split = split_train_test(full, cfg.n_train, cfg.split_seed);
    if (!cfg.file.empty()) {
        const fs::path parent = fs::path(cfg.file).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        write_dataset_csv(cfg.file, full, split.roles);
    }
    return split;
}

void write_history_csv(const std::string& path, const std::string& run_id,
                       const std::string& arm, const TrainingHistory& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "run_id,arm,iteration,train_loss,test_error\n";
    for (const auto& r : history.records) {
        out << run_id << "," << arm << "," << r.iteration << "," << format_double(r.train_loss)
            << "," << format_double(r.test_error) << "\n";
    }
}

HistoryRows read_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_history_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_history_csv: empty " + path);
    HistoryRows rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        TrainingRecord r{};
        std::getline(ss, cell, ',');  // run_id
        std::getline(ss, cell, ',');  // arm
        std::getline(ss, cell, ',');
        r.iteration = std::stoi(cell);
        std::getline(ss, cell, ',');
        r.train_loss = std::stod(cell);
        std::getline(ss, cell, ',');
        r.test_error = std::stod(cell);
        rows.records.push_back(r);
    }
    return rows;
}

namespace {

struct RunSlot {
    RunOutcome outcome;
    TrainingHistory history;
};

TrainConfig arm_train_config(const ExperimentSpec& spec, const ArmConfig& arm,
                             std::uint64_t seed) {
    TrainConfig cfg;
    cfg.spec = arm.spec;
    cfg.learning_rate = arm.learning_rate;
    cfg.post_insertion_learning_rate = arm.post_insertion_learning_rate;
    cfg.total_iterations = arm.iterations.value_or(spec.iterations);
    cfg.insertion = arm.insertion;
    cfg.seed = seed;
    cfg.optimizer = arm.optimizer;
    return cfg;
}

void write_events_csv(const std::string& path, const ExperimentSpec& spec,
                      const std::vector<RunSlot>& slots) {
    std::size_t max_merits = 0;
    for (const auto& slot : slots) {
        for (const auto& e : slot.history.events) max_merits = std::max(max_merits, e.merits.size());
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_events_csv: cannot open " + path);
    out << "run_id,arm,iteration,event,position";
    for (std::size_t m = 0; m < max_merits; ++m) out << ",merit_" << m;
    out << ",param_count\n";

    std::size_t idx = 0;
    for (const auto& arm : spec.arms) {
        for (std::uint64_t seed : spec.seeds) {
            const RunSlot& slot = slots[idx++];
            if (!slot.outcome.ok) continue;
            for (const auto& e : slot.history.events) {
                out << run_id_for_seed(seed) << "," << arm.name << "," << e.iteration << ","
                    << e.kind;
                if (e.kind == "lr_change") out << "=" << format_double(e.learning_rate);
                out << ",";
                if (e.position >= 0) out << e.position;
                for (std::size_t m = 0; m < max_merits; ++m) {
                    out << ",";
                    if (m < e.merits.size()) out << format_double(e.merits[m]);
                }
                out << "," << e.param_count << "\n";
            }
        }
    }
}

void write_aggregate_csv(const std::string& path, const ExperimentSpec& spec,
                         const std::vector<RunSlot>& slots) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_aggregate_csv: cannot open " + path);
    out << "arm,iteration,mean_train_loss,mean_test_error\n";
    std::size_t idx = 0;
    for (const auto& arm : spec.arms) {
        std::vector<const TrainingHistory*> ok_runs;
        for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
            const RunSlot& slot = slots[idx++];
            if (slot.outcome.ok) ok_runs.push_back(&slot.history);
        }
        if (ok_runs.empty()) continue;
        const int iterations = arm.iterations.value_or(spec.iterations);
        for (int t = 0; t <= iterations; ++t) {
            double loss_sum = 0.0, err_sum = 0.0;
            for (const TrainingHistory* h : ok_runs) {
                loss_sum += h->records[static_cast<std::size_t>(t)].train_loss;
                err_sum += h->records[static_cast<std::size_t>(t)].test_error;
            }
            const double n = static_cast<double>(ok_runs.size());
            out << arm.name << "," << t << "," << format_double(loss_sum / n) << ","
                << format_double(err_sum / n) << "\n";
        }
    }
}

void write_failures_json(const std::string& path, const std::vector<RunSlot>& slots) {
    json failures = json::array();
    for (const auto& slot : slots) {
        if (slot.outcome.ok) continue;
        failures.push_back({{"arm", slot.outcome.arm},
                            {"seed", slot.outcome.seed},
                            {"diverged", slot.outcome.diverged},
                            {"error", slot.outcome.error}});
    }
    json j{{"failed_runs", std::move(failures)}};
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const TrainTestSplit& data,
                                int threads) {
    if (spec.out_dir.empty()) throw std::invalid_argument("run_experiment: empty out_dir");
    fs::create_directories(spec.out_dir);

    const std::size_t total = spec.arms.size() * spec.seeds.size();
    std::vector<RunSlot> slots(total);

    unsigned worker_count = threads > 0 ? static_cast<unsigned>(threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
    worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(total));

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= total) return;
            const ArmConfig& arm = spec.arms[job / spec.seeds.size()];
            const std::uint64_t seed = spec.seeds[job % spec.seeds.size()];
            RunSlot& slot = slots[job];
            slot.outcome.arm = arm.name;
            slot.outcome.seed = seed;
            try {
                slot.history = train(arm_train_config(spec, arm, seed), data.train, data.test);
                if (slot.history.diverged) {
                    slot.outcome.diverged = true;
                    slot.outcome.error = "non-finite loss at iteration " +
                                         std::to_string(slot.history.diverged_at);
                } else {
                    slot.outcome.ok = true;
                    slot.outcome.final_train_loss = slot.history.records.back().train_loss;
                    slot.outcome.final_test_error = slot.history.records.back().test_error;
                }
                // per-run file, distinct path per job; safe to write concurrently
                write_history_csv(history_csv_path(spec, arm, seed), run_id_for_seed(seed),
                                  arm.name, slot.history);
                if (spec.write_checkpoints && slot.outcome.ok) {
                    const fs::path dir = fs::path(spec.out_dir) / "checkpoints";
                    fs::create_directories(dir);
                    save_checkpoint((dir / (arm.name + "_" + run_id_for_seed(seed) + ".json"))
                                        .string(),
                                    slot.history.final_params);
                }
            } catch (const std::exception& e) {
                slot.outcome.ok = false;
                slot.outcome.error = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (unsigned w = 1; w < worker_count; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    write_events_csv((fs::path(spec.out_dir) / "events.csv").string(), spec, slots);
    write_aggregate_csv((fs::path(spec.out_dir) / "aggregate.csv").string(), spec, slots);

    ExperimentResult result;
    result.out_dir = spec.out_dir;
    for (const auto& slot : slots) {
        result.runs.push_back(slot.outcome);
        result.failures += slot.outcome.ok ? 0 : 1;
    }
    if (result.failures > 0) {
        write_failures_json((fs::path(spec.out_dir) / "failures.json").string(), slots);
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads) {
    return run_experiment(spec, prepare_dataset(spec.dataset), threads);
}

void aggregate_experiment(const ExperimentSpec& spec) {
    std::ofstream out((fs::path(spec.out_dir) / "aggregate.csv").string());
    if (!out) throw std::runtime_error("aggregate: cannot write into " + spec.out_dir);
    out << "arm,iteration,mean_train_loss,mean_test_error\n";
    for (const auto& arm : spec.arms) {
        std::vector<HistoryRows> runs;
        for (std::uint64_t seed : spec.seeds) {
            const std::string path = history_csv_path(spec, arm, seed);
            if (fs::exists(path)) runs.push_back(read_history_csv(path));
        }
        if (runs.empty()) {
            throw std::runtime_error("aggregate: no per-run files for arm " + arm.name + " in " +
                                     spec.out_dir);
        }
        const int iterations = arm.iterations.value_or(spec.iterations);
        for (int t = 0; t <= iterations; ++t) {
            double loss_sum = 0.0, err_sum = 0.0;
            for (const auto& r : runs) {
                loss_sum += r.records[static_cast<std::size_t>(t)].train_loss;
                err_sum += r.records[static_cast<std::size_t>(t)].test_error;
            }
            const double n = static_cast<double>(runs.size());
            out << arm.name << "," << t << "," << format_double(loss_sum / n) << ","
                << format_double(err_sum / n) << "\n";
        }
    }
}

void emit_plot_data(const ExperimentSpec& spec) {
    const fs::path aggregate_path = fs::path(spec.out_dir) / "aggregate.csv";
    if (!fs::exists(aggregate_path)) {
        throw std::runtime_error("plot-data: missing aggregate " + aggregate_path.string() +
                                 " (run or aggregate the experiment first)");
    }

    struct Curve {
        std::vector<std::pair<int, double>> loss;
        std::vector<std::pair<int, double>> error;
    };
    std::vector<std::string> arm_order;
    std::map<std::string, Curve> curves;
    {
        std::ifstream in(aggregate_path);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string arm, cell;
            std::getline(ss, arm, ',');
            std::getline(ss, cell, ',');
            const int t = std::stoi(cell);
            std::getline(ss, cell, ',');
            const double loss = std::stod(cell);
            std::getline(ss, cell, ',');
            const double err = std::stod(cell);
            if (curves.find(arm) == curves.end()) arm_order.push_back(arm);
            curves[arm].loss.push_back({t, loss});
            curves[arm].error.push_back({t, err});
        }
    }

    // insertion markers: unique (arm, iteration) from the event log
    std::vector<std::pair<std::string, int>> markers;
    const fs::path events_path = fs::path(spec.out_dir) / "events.csv";
    if (fs::exists(events_path)) {
        std::ifstream in(events_path);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cell, arm, event;
            std::getline(ss, cell, ',');  // run_id
            std::getline(ss, arm, ',');
            std::getline(ss, cell, ',');
            const int iteration = cell.empty() ? -1 : std::stoi(cell);
            std::getline(ss, event, ',');
            if (event != "insertion") continue;
            const std::pair<std::string, int> marker{arm, iteration};
            bool seen = false;
            for (const auto& m : markers) seen = seen || m == marker;
            if (!seen) markers.push_back(marker);
        }
    }

    const fs::path plot_dir = fs::path(spec.out_dir) / "plots";
    fs::create_directories(plot_dir);
    json manifest;
    manifest["experiment"] = spec.name;
    manifest["series"] = json::array();
    for (const std::string& arm : arm_order) {
        for (const char* metric : {"train_loss", "test_error"}) {
            const std::string file = arm + "_" + metric + ".dat";
            std::ofstream out((plot_dir / file).string());
            const auto& series =
                std::string(metric) == "train_loss" ? curves[arm].loss : curves[arm].error;
            for (const auto& [t, v] : series) out << t << " " << format_double(v) << "\n";
            manifest["series"].push_back({{"arm", arm}, {"metric", metric}, {"file", file}});
        }
    }
    manifest["markers"] = json::array();
    for (const auto& [arm, iteration] : markers) {
        manifest["markers"].push_back({{"arm", arm}, {"iteration", iteration}});
    }
    std::ofstream mf((plot_dir / "manifest.json").string());
    mf << manifest.dump(2) << "\n";
}

}  // namespace deepen
