#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "charrnet/dsp.hpp"
#include "charrnet/layers.hpp"

namespace charrnet {

enum class ModelKind { charrnet, baseline };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);  // ConfigError on unknown tags

struct ComplexStackConfig {
    std::vector<std::size_t> channels{16, 32, 64, 64};
    std::size_t kernel = 9;
    std::size_t stride = 2;
};

struct ModelConfig {
    ModelKind kind = ModelKind::charrnet;
    std::size_t num_classes = 10;
    std::size_t input_length = 800;
    StftParams stft{};
    WfmLayerConfig equivariant{8, 4, 2};
    WfmLayerConfig invariant{8, 4, 2};
    ComplexStackConfig complex_stack{};
    BackboneConfig backbone{};
    std::uint64_t init_seed = 0;
};

/// A classifier mapping one burst to class logits, with cached activations for
/// a single backward pass. Not thread-safe; clone() per worker.
class Model {
public:
    explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {}
    virtual ~Model() = default;

    const ModelConfig& config() const noexcept { return cfg_; }

    // Throws SizeError if the burst length differs from config().input_length.
    virtual std::vector<double> forward(const ComplexSignal& x) = 0;
    // Accumulates parameter gradients for the most recent forward().
    virtual void backward(std::span<const double> grad_logits) = 0;
    virtual std::vector<Param*> params() = 0;
    virtual std::unique_ptr<Model> clone() const = 0;

    std::vector<const Param*> params() const;
    void zero_grad();
    std::size_t num_parameters() const;

protected:
    void check_length(const ComplexSignal& x) const;
    ModelConfig cfg_;
};

class ChaRRNet final : public Model {
public:
    explicit ChaRRNet(ModelConfig cfg);

    std::vector<double> forward(const ComplexSignal& x) override;
    void backward(std::span<const double> grad_logits) override;
    std::vector<Param*> params() override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<ChaRRNet>(*this); }

    // Forward from a precomputed spectrogram (e.g. one under an ideal channel action).
    std::vector<double> forward_spectrogram(const Spectrogram& s);

    // Stages of the forward pass, exposed for property checks.
    ManifoldTensor manifold_input(const ComplexSignal& x) const;
    EquivariantLayer& equivariant() noexcept { return equivariant_; }
    InvariantLayer& invariant() noexcept { return invariant_; }
    // Invariant-layer output for `x` (runs stft, equivariant and invariant layers).
    RealTensor invariant_features(const ComplexSignal& x);

    std::size_t feature_windows() const noexcept { return feature_windows_; }

private:
    EquivariantLayer equivariant_;
    InvariantLayer invariant_;
    std::size_t feature_windows_;
    Backbone backbone_;
    RealTensor features_;
};

class BaselineNet final : public Model {
public:
    explicit BaselineNet(ModelConfig cfg);

    std::vector<double> forward(const ComplexSignal& x) override;
    void backward(std::span<const double> grad_logits) override;
    std::vector<Param*> params() override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<BaselineNet>(*this); }

    std::vector<ComplexConvStage>& stages() noexcept { return stages_; }
    // Magnitudes after the first complex stage ([channels x len]); the feature
    // compared against the invariant layer under channel actions.
    std::vector<double> first_stage_features(const ComplexSignal& x);

private:
    std::vector<ComplexConvStage> stages_;
    std::size_t feature_len_ = 0;
    Backbone backbone_;
    std::vector<cplx> last_;
};

inline constexpr double kMagnitudeEps = 1e-12;

// Builds and initializes from cfg.init_seed.
std::unique_ptr<Model> make_model(const ModelConfig& cfg);

// Flattened copy of every parameter value, in params() order.
std::vector<double> flatten_values(const Model& m);

}  // namespace charrnet
