#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "charrnet/channel.hpp"
#include "charrnet/dataset.hpp"
#include "charrnet/model.hpp"

namespace charrnet {

struct AugmentationConfig {
    bool awgn = true;
    std::array<double, 2> awgn_snr_range{5.0, 25.0};
    bool cfo = true;
    CfoSpec cfo_spec{};
    // Each augmented burst picks one spec uniformly, applied with fading_probability.
    std::vector<FadingSpec> fading_specs{};
    double fading_probability = 0.5;
    // Fresh draws every epoch; otherwise each record keeps one fixed augmentation.
    bool fresh_draws = true;

    void validate() const;
    static AugmentationConfig disabled();
};

// Channel, then CFO, then noise.
ComplexSignal augment(const ComplexSignal& burst, const AugmentationConfig& cfg, Rng& rng);

enum class OptimizerKind { adam, sgd };
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    AugmentationConfig augmentation{};
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate() const;
};

/// First-order optimizer over a fixed parameter list.
class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, std::vector<Param*> params);
    // Applies one update from the accumulated gradients.
    void step();

private:
    TrainConfig cfg_;
    std::vector<Param*> params_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;       // mean cross entropy over the epoch
    double train_top1 = 0.0; // on the augmented inputs seen during the epoch
};

struct TrainResult {
    std::unique_ptr<Model> model;
    std::vector<EpochStats> curve;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch cross-entropy training. model_cfg.num_classes must equal the
// dataset's device count (ConfigError otherwise). model_cfg.init_seed is used as given.
TrainResult train(const Dataset& data, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Loss curve CSV: epoch,loss,train_top1.
std::string loss_curve_csv(const std::vector<EpochStats>& curve);

struct TagAccuracy {
    std::string tag;
    std::size_t count = 0;
    std::size_t correct = 0;
    double top1() const noexcept { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

struct EvalReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::vector<TagAccuracy> per_tag;             // first-appearance order
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

    double top1() const noexcept { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
    double top1(const std::string& tag) const;
    // Header tag,count,top1; one row per tag, then an "overall" row.
    std::string to_csv() const;
};

using Predictor = std::function<std::vector<double>(const ComplexSignal&)>;

// Side-effect free: the model is cloned, never mutated.
EvalReport evaluate(const Model& model, const Dataset& data, std::size_t workers = 1);
EvalReport evaluate(const Predictor& predict, std::size_t num_classes, const Dataset& data);

// Train/test protocol behind the generalization-gap comparison.
struct ExperimentConfig {
    DatasetConfig dataset{};  // population, burst and per-device counts; tags are overridden
    std::vector<std::string> train_sets{"pristine", "nLOS200"};
    std::vector<std::string> test_tags{"pristine", "nLOS10", "LOS10", "nLOS30", "LOS100", "nLOS400", "LOS400"};
    std::vector<ModelKind> models{ModelKind::baseline, ModelKind::charrnet};
    ModelConfig model{};
    TrainConfig train{};
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct ExperimentReport {
    std::vector<std::string> test_tags;
    std::vector<std::string> train_sets;
    std::vector<ModelKind> models;
    // [model][train_set][test_tag] -> top-1 per seed
    std::vector<std::vector<std::vector<std::vector<double>>>> accuracy;

    double median(std::size_t model, std::size_t train_set, std::size_t tag) const;
    std::size_t tag_index(const std::string& tag) const;
    // Rows: test tags. Columns: <model>_<train_set>, median top-1 in percent.
    std::string to_csv() const;
};

// Seeds of one training run derived from a single master seed.
std::uint64_t init_seed_for(std::uint64_t master, ModelKind kind);
std::uint64_t train_seed_for(std::uint64_t master);

using ProgressCallback = std::function<void(const std::string&)>;

ExperimentReport channel_shift_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress = {});

double median(std::vector<double> v);

}  // namespace charrnet
