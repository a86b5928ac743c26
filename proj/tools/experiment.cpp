// Channel-shift experiment: trains each model on each train set and reports
// median top-1 per test tag over seeds.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "charrnet/config.hpp"
#include "charrnet/errors.hpp"
#include "charrnet/io.hpp"
#include "charrnet/training.hpp"

using namespace charrnet;

int main(int argc, char** argv) {
    CLI::App app{"Train on pristine and multipath data, test across channel conditions"};
    std::string config, out = "channel_shift.csv", raw;
    ExperimentConfig defaults;
    std::vector<std::uint64_t> seeds = defaults.seeds;
    std::vector<std::string> train_sets = defaults.train_sets, test_tags = defaults.test_tags, models{"baseline", "charrnet"};
    std::optional<std::size_t> workers;
    app.add_option("--config", config, "Run configuration (JSON): dataset, model and train sections");
    app.add_option("--out", out, "Median top-1 CSV, one row per test tag");
    app.add_option("--raw", raw, "Optional per-seed CSV");
    app.add_option("--seeds", seeds, "Master seeds")->delimiter(',');
    app.add_option("--train-sets", train_sets, "Training channel tags")->delimiter(',');
    app.add_option("--test-tags", test_tags, "Test channel tags")->delimiter(',');
    app.add_option("--models", models, "Model kinds")->delimiter(',');
    app.add_option("--workers", workers, "Worker threads (default: hardware concurrency)")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 3;
    }

    try {
        const RunConfig run = config.empty() ? RunConfig{} : load_run_config(config);
        ExperimentConfig cfg;
        cfg.dataset = run.dataset;
        cfg.model = run.model;
        cfg.train = run.train;
        cfg.train.workers = workers.value_or(std::max(1u, std::thread::hardware_concurrency()));
        cfg.seeds = seeds;
        cfg.train_sets = train_sets;
        cfg.test_tags = test_tags;
        cfg.models.clear();
        for (const std::string& m : models) cfg.models.push_back(parse_model_kind(m));

        const ExperimentReport rep = channel_shift_experiment(cfg, [](const std::string& line) {
            std::cerr << line << "\n";
        });
        const std::string csv = rep.to_csv();
        write_file_atomic(out, csv);
        std::cout << csv;
        if (!raw.empty()) {
            std::string text = "model,train_set,test_tag,seed,top1\n";
            for (std::size_t m = 0; m < rep.models.size(); ++m)
                for (std::size_t t = 0; t < rep.train_sets.size(); ++t)
                    for (std::size_t k = 0; k < rep.test_tags.size(); ++k)
                        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
                            char buf[64];
                            std::snprintf(buf, sizeof buf, "%.6f", rep.accuracy[m][t][k][s]);
                            text += to_string(rep.models[m]) + "," + rep.train_sets[t] + "," + rep.test_tags[k] + "," +
                                    std::to_string(cfg.seeds[s]) + "," + buf + "\n";
                        }
            write_file_atomic(raw, text);
        }
        return 0;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
