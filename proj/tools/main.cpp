// deepen command line: spiral data generation, experiment runs, aggregation,
// and plot-data emission. All outputs are deterministic given the config.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepen/dataset.hpp"
#include "deepen/experiments.hpp"

namespace fs = std::filesystem;

namespace {

// --out-dir beats DEEPEN_OUT_DIR beats the config value.
void apply_out_dir_override(deepen::ExperimentSpec& spec, const std::string& flag_value) {
    if (!flag_value.empty()) {
        spec.out_dir = flag_value;
        return;
    }
    if (const char* env = std::getenv("DEEPEN_OUT_DIR")) {
        if (*env) spec.out_dir = env;
    }
}

int report_failures(const deepen::ExperimentResult& result) {
    if (result.failures == 0) return 0;
    nlohmann::ordered_json summary{
        {"failed_runs", result.failures},
        {"detail", (fs::path(result.out_dir) / "failures.json").string()},
    };
    std::cerr << summary.dump() << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deepen: trains small dense networks and grows them mid-training"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir_flag;
    int threads = 0;
    std::int64_t only_seed = -1;

    // generate-data
    auto* gen = app.add_subcommand("generate-data", "Generate the spiral dataset CSV");
    std::string gen_out;
    int gen_n = 600, gen_n_train = 450;
    double gen_noise = 0.0, gen_turns = 1.5;
    std::uint64_t gen_seed = 0, gen_split_seed = 0;
    gen->add_option("--config", config_path, "Experiment config supplying the dataset block");
    gen->add_option("--out", gen_out, "Output CSV path (without --config)");
    gen->add_option("--n", gen_n, "Total number of points (even)");
    gen->add_option("--noise", gen_noise, "Gaussian coordinate noise std");
    gen->add_option("--turns", gen_turns, "Spiral turns");
    gen->add_option("--seed", gen_seed, "Data stream seed");
    gen->add_option("--n-train", gen_n_train, "Training rows in the split");
    gen->add_option("--split-seed", gen_split_seed, "Split stream seed");

    // run
    auto* run = app.add_subcommand("run", "Run every arm x seed of an experiment");
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--seed", only_seed, "Run only this seed");
    run->add_option("--out-dir", out_dir_flag, "Override the config's out_dir");
    run->add_option("--threads", threads, "Worker threads (0 = hardware)");

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Recompute aggregate.csv from per-run CSVs");
    agg->add_option("--config", config_path, "Experiment config JSON")->required();
    agg->add_option("--out-dir", out_dir_flag, "Override the config's out_dir");

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "Emit per-curve series files and a manifest");
    plot->add_option("--config", config_path, "Experiment config JSON")->required();
    plot->add_option("--out-dir", out_dir_flag, "Override the config's out_dir");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (!config_path.empty()) {
                deepen::ExperimentSpec spec = deepen::load_experiment_config(config_path);
                if (spec.dataset.file.empty() || !spec.dataset.has_generator) {
                    std::cerr << "generate-data: config needs dataset.file and dataset.generator\n";
                    return 1;
                }
                const deepen::Dataset full =
                    deepen::generate_spirals(spec.dataset.n_total, spec.dataset.noise_std,
                                             spec.dataset.turns, spec.dataset.data_seed);
                const deepen::TrainTestSplit split =
                    deepen::split_train_test(full, spec.dataset.n_train, spec.dataset.split_seed);
                const fs::path parent = fs::path(spec.dataset.file).parent_path();
                if (!parent.empty()) fs::create_directories(parent);
                deepen::write_dataset_csv(spec.dataset.file, full, split.roles);
                std::cout << "wrote " << spec.dataset.file << " (" << full.size() << " points, "
                          << split.train.size() << " train / " << split.test.size() << " test)\n";
                return 0;
            }
            if (gen_out.empty()) {
                std::cerr << "generate-data: need --out or --config\n";
                return 1;
            }
            const deepen::Dataset full =
                deepen::generate_spirals(gen_n, gen_noise, gen_turns, gen_seed);
            const deepen::TrainTestSplit split =
                deepen::split_train_test(full, gen_n_train, gen_split_seed);
            if (fs::path(gen_out).has_parent_path()) {
                fs::create_directories(fs::path(gen_out).parent_path());
            }
            deepen::write_dataset_csv(gen_out, full, split.roles);
            std::cout << "wrote " << gen_out << " (" << full.size() << " points, "
                      << split.train.size() << " train / " << split.test.size() << " test)\n";
            return 0;
        }

        deepen::ExperimentSpec spec = deepen::load_experiment_config(config_path);
        apply_out_dir_override(spec, out_dir_flag);

        if (run->parsed()) {
            if (only_seed >= 0) spec.seeds = {static_cast<std::uint64_t>(only_seed)};
            const deepen::ExperimentResult result = deepen::run_experiment(spec, threads);
            std::cout << spec.name << ": " << result.runs.size() - result.failures << "/"
                      << result.runs.size() << " runs ok, results in " << result.out_dir << "\n";
            return report_failures(result);
        }
        if (agg->parsed()) {
            deepen::aggregate_experiment(spec);
            std::cout << "wrote " << (fs::path(spec.out_dir) / "aggregate.csv").string() << "\n";
            return 0;
        }
        if (plot->parsed()) {
            deepen::emit_plot_data(spec);
            std::cout << "wrote " << (fs::path(spec.out_dir) / "plots").string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
