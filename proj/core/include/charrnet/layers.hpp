#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "charrnet/dsp.hpp"
#include "charrnet/liegroup.hpp"
#include "charrnet/rng.hpp"

namespace charrnet {

/// Named trainable tensor with its gradient accumulator.
struct Param {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;

    Param() = default;
    Param(std::string n, std::vector<std::size_t> s);
    std::size_t size() const noexcept { return value.size(); }
    void zero_grad() noexcept;
};

/// windows x bins x channels grid of manifold points, held in log coordinates
/// (ln r, theta). The same layout carries gradients with respect to those
/// coordinates.
class ManifoldTensor {
public:
    ManifoldTensor() = default;
    ManifoldTensor(std::size_t windows, std::size_t bins, std::size_t channels);

    // One channel, one point per STFT coefficient (from_complex per bin).
    static ManifoldTensor from_spectrogram(const Spectrogram& spec);

    std::size_t windows() const noexcept { return windows_; }
    std::size_t bins() const noexcept { return bins_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t index(std::size_t w, std::size_t n, std::size_t c) const noexcept {
        return (w * bins_ + n) * channels_ + c;
    }

    double& log_r(std::size_t w, std::size_t n, std::size_t c) noexcept { return log_r_[index(w, n, c)]; }
    double log_r(std::size_t w, std::size_t n, std::size_t c) const noexcept { return log_r_[index(w, n, c)]; }
    double& theta(std::size_t w, std::size_t n, std::size_t c) noexcept { return theta_[index(w, n, c)]; }
    double theta(std::size_t w, std::size_t n, std::size_t c) const noexcept { return theta_[index(w, n, c)]; }

    ManifoldPoint point(std::size_t w, std::size_t n, std::size_t c) const noexcept;
    void set(std::size_t w, std::size_t n, std::size_t c, const ManifoldPoint& p) noexcept;

    std::span<double> log_r_data() noexcept { return log_r_; }
    std::span<const double> log_r_data() const noexcept { return log_r_; }
    std::span<double> theta_data() noexcept { return theta_; }
    std::span<const double> theta_data() const noexcept { return theta_; }

    // Applies g[n] to every point in bin n (all windows, all channels).
    ManifoldTensor act_per_bin(std::span<const GroupElement> g) const;

private:
    std::size_t windows_ = 0;
    std::size_t bins_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> log_r_;
    std::vector<double> theta_;
};

/// Dense real tensor, row-major.
struct RealTensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    RealTensor() = default;
    explicit RealTensor(std::vector<std::size_t> s);
    std::size_t size() const noexcept { return data.size(); }
};

struct WfmLayerConfig {
    std::size_t filters = 8;
    std::size_t kernel = 4;
    std::size_t stride = 2;
};

// Output window count of a strided layer without padding.
std::size_t strided_output_len(std::size_t in_len, std::size_t kernel, std::size_t stride);

// Shared wFM convolution: per filter f, softmax(logits[f]) weights the receptive
// field {x[w' * stride + k, n, c]} over (k, c). Weights are shared across bins.
class WfmConvolution {
public:
    WfmConvolution(std::string name, std::size_t in_channels, const WfmLayerConfig& cfg);

    void init(Rng& rng, double stddev = 0.5);
    std::size_t in_channels() const noexcept { return in_channels_; }
    const WfmLayerConfig& config() const noexcept { return cfg_; }
    Param& logits() noexcept { return logits_; }
    const Param& logits() const noexcept { return logits_; }
    // softmax(logits[f]) for every filter, concatenated.
    std::vector<double> filter_weights() const;

protected:
    struct Means {
        std::size_t out_windows = 0;
        std::vector<double> log_r;  // [W' x N x F]
        std::vector<double> theta;
        std::vector<double> sin_sum;
        std::vector<double> cos_sum;
        std::vector<unsigned char> degenerate;
    };

    void check_input(const ManifoldTensor& x) const;
    Means compute_means(const ManifoldTensor& x, std::span<const double> weights) const;
    // Backpropagates (g_log_r, g_theta) on the means into logits_.grad and, when
    // `dx` is non-null, into the input gradient.
    void backprop_means(const ManifoldTensor& x, std::span<const double> weights, const Means& m,
                        std::span<const double> g_log_r, std::span<const double> g_theta,
                        ManifoldTensor* dx);

    std::size_t in_channels_;
    WfmLayerConfig cfg_;
    Param logits_;
};

/// Equivariant layer: outputs the per-filter weighted Frechet means.
class EquivariantLayer : public WfmConvolution {
public:
    EquivariantLayer(std::string name, std::size_t in_channels, const WfmLayerConfig& cfg)
        : WfmConvolution(std::move(name), in_channels, cfg) {}

    ManifoldTensor forward(const ManifoldTensor& x);
    // `upstream` carries dL/d(ln r) and dL/dtheta of the output. Returns the input gradient.
    ManifoldTensor backward(const ManifoldTensor& upstream, bool need_input_grad = true);
    // Number of degenerate circular means in the last forward.
    std::size_t degenerate_count() const noexcept;

private:
    ManifoldTensor input_;
    std::vector<double> weights_;
    Means means_;
};

/// Invariant layer: mean smoothed distance from each receptive-field point to
/// the layer's own wFM. Output is a real [W' x N x F] tensor.
class InvariantLayer : public WfmConvolution {
public:
    InvariantLayer(std::string name, std::size_t in_channels, const WfmLayerConfig& cfg)
        : WfmConvolution(std::move(name), in_channels, cfg) {}

    RealTensor forward(const ManifoldTensor& x);
    ManifoldTensor backward(const RealTensor& upstream, bool need_input_grad = true);

private:
    ManifoldTensor input_;
    std::vector<double> weights_;
    Means means_;
};

/// Real 1-D convolution over a [channels x length] input, zero padding kernel/2.
class Conv1d {
public:
    Conv1d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride);

    void init(Rng& rng);
    std::size_t output_len(std::size_t in_len) const noexcept;
    std::vector<double> forward(std::span<const double> x, std::size_t len);
    std::vector<double> backward(std::span<const double> dy, bool need_input_grad = true);

    Param& weight() noexcept { return weight_; }
    Param& bias() noexcept { return bias_; }
    std::size_t in_channels() const noexcept { return in_ch_; }
    std::size_t out_channels() const noexcept { return out_ch_; }

private:
    std::size_t in_ch_, out_ch_, kernel_, stride_, pad_;
    Param weight_;  // [out x in x kernel]
    Param bias_;    // [out]
    std::size_t in_len_ = 0;
    std::size_t out_len_ = 0;
    std::vector<double> cols_;  // [in*kernel x out_len]
};

class Dense {
public:
    Dense(std::string name, std::size_t in, std::size_t out);
    void init(Rng& rng, double gain = 1.0);
    std::vector<double> forward(std::span<const double> x);
    std::vector<double> backward(std::span<const double> dy);
    Param& weight() noexcept { return weight_; }
    Param& bias() noexcept { return bias_; }

private:
    std::size_t in_, out_;
    Param weight_;  // [out x in]
    Param bias_;
    std::vector<double> input_;
};

struct BackboneConfig {
    std::vector<std::size_t> channels{32, 64, 64};
    std::size_t kernel = 5;
    std::size_t stride = 2;
};

/// Real 1-D CNN: conv + ReLU stages, global average pool, dense head.
class Backbone {
public:
    Backbone(std::size_t in_channels, std::size_t num_classes, const BackboneConfig& cfg);

    void init(Rng& rng);
    std::vector<double> forward(std::span<const double> x, std::size_t len);
    // Returns the gradient with respect to the backbone input.
    std::vector<double> backward(std::span<const double> grad_logits, bool need_input_grad = true);
    std::vector<Param*> params();

private:
    std::vector<Conv1d> convs_;
    Dense head_;
    std::vector<std::vector<unsigned char>> relu_masks_;
    std::vector<std::size_t> lens_;
};

/// Complex 1-D convolution with complex bias followed by modReLU:
/// z -> relu(|z| + b) z / |z|. Complex parameters are stored interleaved (re, im).
class ComplexConvStage {
public:
    ComplexConvStage(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                     std::size_t stride);

    void init(Rng& rng);
    std::size_t output_len(std::size_t in_len) const noexcept;
    // Convolution plus complex bias, before the activation. Does not cache.
    std::vector<cplx> linear(std::span<const cplx> x, std::size_t len) const;
    std::vector<cplx> forward(std::span<const cplx> x, std::size_t len);
    std::vector<cplx> backward(std::span<const cplx> dy, bool need_input_grad = true);

    Param& weight() noexcept { return weight_; }
    Param& bias() noexcept { return bias_; }
    Param& act_bias() noexcept { return act_bias_; }
    std::vector<Param*> params() { return {&weight_, &bias_, &act_bias_}; }
    std::size_t out_channels() const noexcept { return out_ch_; }

private:
    std::vector<cplx> im2col(std::span<const cplx> x, std::size_t len, std::size_t out_len) const;
    std::vector<cplx> apply(const std::vector<cplx>& cols, std::size_t out_len) const;

    std::size_t in_ch_, out_ch_, kernel_, stride_, pad_;
    Param weight_;    // [out x in x kernel x 2]
    Param bias_;      // [out x 2]
    Param act_bias_;  // [out]
    std::size_t in_len_ = 0;
    std::size_t out_len_ = 0;
    std::vector<cplx> cols_;
    std::vector<cplx> pre_;
};

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;  // dL/dlogits
};

// Log-sum-exp cross entropy. Throws ArgumentError if label >= logits.size().
LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t label);

}  // namespace charrnet
