// charrnet: dataset generation, training, evaluation and property checks.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "charrnet/checkpoint.hpp"
#include "charrnet/config.hpp"
#include "charrnet/errors.hpp"
#include "charrnet/io.hpp"
#include "charrnet/training.hpp"
#include "charrnet/verify.hpp"

namespace fs = std::filesystem;
using namespace charrnet;

namespace {

enum Exit { kOk = 0, kPropertyFailure = 1, kIo = 2, kConfig = 3 };

struct SeedChoice {
    std::uint64_t value;
    const char* source;
};

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) throw ConfigError(what + ": not an unsigned 64-bit integer: \"" + s + "\"");
    return v;
}

// CHARRNET_SEED wins over --seed; otherwise the fallback applies.
SeedChoice resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& fallback) {
    if (const char* env = std::getenv("CHARRNET_SEED"); env && *env) return {parse_u64(env, "CHARRNET_SEED"), "CHARRNET_SEED"};
    if (flag) return {*flag, "--seed"};
    if (fallback) return {*fallback, "config"};
    std::random_device rd;
    const std::uint64_t hi = rd(), lo = rd();
    return {(hi << 32) ^ lo, "entropy"};
}

void announce(const SeedChoice& s) { std::cout << "seed: " << s.value << " (" << s.source << ")\n"; }

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

RunConfig load_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

Dataset select_split(const Dataset& d, const std::string& split) {
    if (split == "all") return d;
    return d.subset(parse_split(split));
}

// ---------------------------------------------------------------- gen-dataset

struct GenArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
};

int gen_dataset(const GenArgs& a) {
    const RunConfig cfg = load_or_default(a.config);
    cfg.dataset.validate();
    const SeedChoice seed = resolve_seed(a.seed, std::nullopt);
    announce(seed);
    const Dataset ds = build_dataset(cfg.dataset, seed.value, a.workers.value_or(default_workers()));
    write_dataset(ds, a.out);
    std::cout << "population_seed: " << ds.population_seed << "\n";
    for (const RecordBlock& b : ds.blocks) std::cout << to_string(b.split) << " " << b.tag << ": " << b.count << " records\n";
    std::size_t train = 0, test = 0;
    for (const RecordBlock& b : ds.blocks) (b.split == Split::train ? train : test) += b.count;
    std::cout << "total: " << ds.records.size() << " records (" << train << " train, " << test << " test) -> " << a.out << "\n";
    return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string config, data, out, model;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
};

fs::path loss_csv_path(const fs::path& ckpt) { return fs::path(ckpt.string() + ".loss.csv"); }
fs::path run_config_path(const fs::path& ckpt) { return fs::path(ckpt.string() + ".run.json"); }

int train_cmd(const TrainArgs& a) {
    RunConfig cfg = load_or_default(a.config);
    if (!a.model.empty()) cfg.model.kind = parse_model_kind(a.model);
    const Dataset all = read_dataset(a.data);
    const Dataset data = all.subset(Split::train);
    if (data.records.empty()) throw ConfigError("dataset " + a.data + " has no training records");

    const SeedChoice seed = resolve_seed(a.seed, std::nullopt);
    announce(seed);
    cfg.model.init_seed = init_seed_for(seed.value, cfg.model.kind);
    cfg.train.seed = train_seed_for(seed.value);
    cfg.train.workers = a.workers.value_or(default_workers());

    std::cout << "model: " << to_string(cfg.model.kind) << ", " << data.records.size() << " training records, "
              << cfg.train.epochs << " epochs\n";
    const TrainResult r = train(data, cfg.model, cfg.train, [](const EpochStats& s) {
        std::printf("epoch %zu loss %.6f train_top1 %.4f\n", s.epoch, s.loss, s.train_top1);
        std::fflush(stdout);
    });
    const fs::path out(a.out);
    save_checkpoint(*r.model, out);
    write_file_atomic(loss_csv_path(out), loss_curve_csv(r.curve));
    write_file_atomic(run_config_path(out), dump_run_config(cfg));
    std::cout << "checkpoint: " << out.string() << " (" << r.model->num_parameters() << " parameters)\n"
              << "loss curve: " << loss_csv_path(out).string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string ckpt, data, out, config, split;
    std::optional<std::size_t> workers;
};

int eval_cmd(const EvalArgs& a) {
    const RunConfig cfg = load_or_default(a.config);
    const std::string split = a.split.empty() ? cfg.eval.split : a.split;
    if (split != "train" && split != "test" && split != "all") throw ConfigError("split must be train, test or all");
    const auto model = load_checkpoint(a.ckpt);
    const Dataset data = select_split(read_dataset(a.data), split);
    if (data.records.empty()) throw ConfigError("dataset " + a.data + " has no " + split + " records");
    const EvalReport rep = evaluate(*model, data, a.workers.value_or(default_workers()));
    const std::string csv = rep.to_csv();
    write_file_atomic(a.out, csv);
    std::cout << csv;
    return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::string suite = "all", config, out;
    std::optional<std::uint64_t> seed;
};

void report(const SuiteResult& r) {
    std::printf("%s: %s cases=%zu checked=%zu max_error=%.3e tolerance=%.1e", r.suite.c_str(), r.passed ? "PASS" : "FAIL",
                r.cases, r.checked, r.max_error, r.tolerance);
    if (r.skipped_degenerate) std::printf(" skipped_degenerate=%zu", r.skipped_degenerate);
    std::printf("\n");
    if (!r.passed) std::printf("  first failure: %s\n", r.failure.c_str());
    std::fflush(stdout);
}

int verify_cmd(const VerifyArgs& a) {
    RunConfig cfg = load_or_default(a.config);
    const SeedChoice seed = resolve_seed(a.seed, cfg.verify.seed);
    announce(seed);
    cfg.verify.seed = seed.value;

    bool ok = true;
    const bool all = a.suite == "all";
    if (all || a.suite == "equivariance") {
        const SuiteResult r = verify_equivariance(cfg.verify);
        report(r);
        ok &= r.passed;
    }
    if (all || a.suite == "invariance") {
        const SuiteResult r = verify_invariance(cfg.verify);
        report(r);
        ok &= r.passed;
    }
    if (all || a.suite == "gradients") {
        const SuiteResult r = verify_gradients(cfg.verify);
        report(r);
        ok &= r.passed;
    }
    if (all || a.suite == "fig2") {
        const Fig2Result f = run_fig2(cfg.verify);
        std::cout << f.csv();
        if (!a.out.empty()) write_file_atomic(a.out, f.csv());
        std::printf("fig2: %s invariant(beta=8.6)=%.6g invariant(beta=0)=%.6g baseline(physical)=%.6g\n",
                    f.ordering_holds ? "PASS" : "FAIL", f.invariant_windowed, f.invariant_rect, f.baseline_physical);
        if (!f.ordering_holds) std::printf("  first failure: stability ordering violated (seed %llu)\n",
                                           static_cast<unsigned long long>(seed.value));
        ok &= f.ordering_holds;
    }
    return ok ? kOk : kPropertyFailure;
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::length_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel-robust RF fingerprinting: datasets, training, evaluation and property checks"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-dataset", "Generate a synthetic fingerprint dataset");
    g->add_option("--config", gen.config, "Run configuration (JSON)");
    g->add_option("--out", gen.out, "Output dataset directory")->required();
    g->add_option("--seed", gen.seed, "Master seed (default: drawn from entropy)");
    g->add_option("--workers", gen.workers, "Worker threads (default: hardware concurrency)")->check(CLI::PositiveNumber);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a model on the train split of a dataset");
    t->add_option("--config", tr.config, "Run configuration (JSON)");
    t->add_option("--data", tr.data, "Dataset directory")->required();
    t->add_option("--out", tr.out, "Checkpoint path")->required();
    t->add_option("--model", tr.model, "Model kind, overrides the config")->check(CLI::IsMember({"charrnet", "baseline"}));
    t->add_option("--seed", tr.seed, "Master seed (default: drawn from entropy)");
    t->add_option("--workers", tr.workers, "Worker threads (default: hardware concurrency)")->check(CLI::PositiveNumber);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint, writing tag,count,top1 CSV");
    e->add_option("--ckpt", ev.ckpt, "Checkpoint path")->required();
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--out", ev.out, "Output CSV")->required();
    e->add_option("--config", ev.config, "Run configuration (JSON); only eval.split is used");
    e->add_option("--split", ev.split, "train, test or all (default: eval.split)")->check(CLI::IsMember({"train", "test", "all"}));
    e->add_option("--workers", ev.workers, "Worker threads (default: hardware concurrency)")->check(CLI::PositiveNumber);

    VerifyArgs ve;
    auto* v = app.add_subcommand("verify", "Run property suites; exit 1 on the first failing property");
    v->add_option("--suite", ve.suite, "equivariance, invariance, gradients, fig2 or all")
        ->check(CLI::IsMember({"equivariance", "invariance", "gradients", "fig2", "all"}));
    v->add_option("--config", ve.config, "Run configuration (JSON); the verify section is used");
    v->add_option("--seed", ve.seed, "Seed (default: verify.seed)");
    v->add_option("--out", ve.out, "Write the fig2 deviation CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kConfig;
    }

    if (*g) return guarded([&] { return gen_dataset(gen); });
    if (*t) return guarded([&] { return train_cmd(tr); });
    if (*e) return guarded([&] { return eval_cmd(ev); });
    return guarded([&] { return verify_cmd(ve); });
}
