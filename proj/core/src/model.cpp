#include "charrnet/model.hpp"

#include <cmath>

#include "charrnet/errors.hpp"

namespace charrnet {

std::string to_string(ModelKind kind) { return kind == ModelKind::charrnet ? "charrnet" : "baseline"; }

ModelKind parse_model_kind(const std::string& s) {
    if (s == "charrnet") return ModelKind::charrnet;
    if (s == "baseline") return ModelKind::baseline;
    throw ConfigError("unknown model '" + s + "' (expected charrnet or baseline)");
}

std::vector<const Param*> Model::params() const {
    auto* self = const_cast<Model*>(this);
    std::vector<const Param*> out;
    for (Param* p : self->params()) out.push_back(p);
    return out;
}

void Model::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

std::size_t Model::num_parameters() const {
    std::size_t n = 0;
    for (const Param* p : params()) n += p->size();
    return n;
}

void Model::check_length(const ComplexSignal& x) const {
    if (x.size() != cfg_.input_length)
        throw SizeError("model expects bursts of " + std::to_string(cfg_.input_length) + " samples, got " +
                        std::to_string(x.size()));
}

// ---------------------------------------------------------------- ChaRRNet

namespace {

std::size_t charrnet_feature_windows(const ModelConfig& cfg) {
    const std::size_t w0 = stft_window_count(cfg.input_length, cfg.stft.window_len, cfg.stft.hop);
    const std::size_t w1 = strided_output_len(w0, cfg.equivariant.kernel, cfg.equivariant.stride);
    const std::size_t w2 = strided_output_len(w1, cfg.invariant.kernel, cfg.invariant.stride);
    if (w2 == 0)
        throw ConfigError("charrnet: input_length " + std::to_string(cfg.input_length) +
                          " leaves no windows after the wFM layers");
    return w2;
}

}  // namespace

ChaRRNet::ChaRRNet(ModelConfig cfg)
    : Model(std::move(cfg)),
      equivariant_("equivariant.logits", 1, cfg_.equivariant),
      invariant_("invariant.logits", cfg_.equivariant.filters, cfg_.invariant),
      feature_windows_(charrnet_feature_windows(cfg_)),
      backbone_(cfg_.stft.window_len * cfg_.invariant.filters, cfg_.num_classes, cfg_.backbone) {
    Rng rng(cfg_.init_seed);
    equivariant_.init(rng);
    invariant_.init(rng);
    backbone_.init(rng);
}

ManifoldTensor ChaRRNet::manifold_input(const ComplexSignal& x) const {
    return ManifoldTensor::from_spectrogram(stft(x, cfg_.stft));
}

RealTensor ChaRRNet::invariant_features(const ComplexSignal& x) {
    return invariant_.forward(equivariant_.forward(manifold_input(x)));
}

std::vector<double> ChaRRNet::forward(const ComplexSignal& x) {
    check_length(x);
    return forward_spectrogram(stft(x, cfg_.stft));
}

std::vector<double> ChaRRNet::forward_spectrogram(const Spectrogram& s) {
    features_ = invariant_.forward(equivariant_.forward(ManifoldTensor::from_spectrogram(s)));
    if (features_.shape[0] != feature_windows_) throw SizeError("charrnet: spectrogram window count mismatch");
    // [W'' x N x F] -> backbone channels (n * F + f), length W''
    const std::size_t len = features_.shape[0];
    const std::size_t bins = features_.shape[1];
    const std::size_t filters = features_.shape[2];
    std::vector<double> bb_in(features_.size());
    for (std::size_t w = 0; w < len; ++w)
        for (std::size_t n = 0; n < bins; ++n)
            for (std::size_t f = 0; f < filters; ++f)
                bb_in[(n * filters + f) * len + w] = features_.data[(w * bins + n) * filters + f];
    return backbone_.forward(bb_in, len);
}

void ChaRRNet::backward(std::span<const double> grad_logits) {
    const std::vector<double> g_in = backbone_.backward(grad_logits, true);
    const std::size_t len = features_.shape[0];
    const std::size_t bins = features_.shape[1];
    const std::size_t filters = features_.shape[2];
    RealTensor upstream(features_.shape);
    for (std::size_t w = 0; w < len; ++w)
        for (std::size_t n = 0; n < bins; ++n)
            for (std::size_t f = 0; f < filters; ++f)
                upstream.data[(w * bins + n) * filters + f] = g_in[(n * filters + f) * len + w];
    const ManifoldTensor g_eq = invariant_.backward(upstream, true);
    equivariant_.backward(g_eq, false);
}

std::vector<Param*> ChaRRNet::params() {
    std::vector<Param*> out{&equivariant_.logits(), &invariant_.logits()};
    for (Param* p : backbone_.params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------- Baseline

namespace {

std::vector<ComplexConvStage> make_complex_stages(const ComplexStackConfig& cfg) {
    std::vector<ComplexConvStage> out;
    std::size_t c = 1;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        out.emplace_back("complex.conv" + std::to_string(i), c, cfg.channels[i], cfg.kernel, cfg.stride);
        c = cfg.channels[i];
    }
    return out;
}

}  // namespace

BaselineNet::BaselineNet(ModelConfig cfg)
    : Model(std::move(cfg)),
      stages_(make_complex_stages(cfg_.complex_stack)),
      backbone_(cfg_.complex_stack.channels.empty() ? 1 : cfg_.complex_stack.channels.back(), cfg_.num_classes,
                cfg_.backbone) {
    if (stages_.empty()) throw ConfigError("baseline: at least one complex stage required");
    Rng rng(cfg_.init_seed);
    for (ComplexConvStage& s : stages_) s.init(rng);
    backbone_.init(rng);
}

std::vector<double> BaselineNet::forward(const ComplexSignal& x) {
    check_length(x);
    std::vector<cplx> h(x.samples().begin(), x.samples().end());
    std::size_t len = x.size();
    for (ComplexConvStage& s : stages_) {
        h = s.forward(h, len);
        len = s.output_len(len);
    }
    feature_len_ = len;
    last_ = std::move(h);
    std::vector<double> mag(last_.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::sqrt(std::norm(last_[i]) + kMagnitudeEps);
    return backbone_.forward(mag, len);
}

void BaselineNet::backward(std::span<const double> grad_logits) {
    const std::vector<double> g_mag = backbone_.backward(grad_logits, true);
    std::vector<cplx> g(last_.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = g_mag[i] * last_[i] / std::sqrt(std::norm(last_[i]) + kMagnitudeEps);
    for (std::size_t i = stages_.size(); i-- > 0;) g = stages_[i].backward(g, i > 0);
}

std::vector<Param*> BaselineNet::params() {
    std::vector<Param*> out;
    for (ComplexConvStage& s : stages_)
        for (Param* p : s.params()) out.push_back(p);
    for (Param* p : backbone_.params()) out.push_back(p);
    return out;
}

std::vector<double> BaselineNet::first_stage_features(const ComplexSignal& x) {
    const std::vector<cplx> y = stages_.front().forward(x.samples(), x.size());
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::abs(y[i]);
    return out;
}

std::unique_ptr<Model> make_model(const ModelConfig& cfg) {
    if (cfg.num_classes == 0) throw ConfigError("model: num_classes must be >= 1");
    if (cfg.kind == ModelKind::charrnet) return std::make_unique<ChaRRNet>(cfg);
    return std::make_unique<BaselineNet>(cfg);
}

std::vector<double> flatten_values(const Model& m) {
    std::vector<double> out;
    for (const Param* p : m.params()) out.insert(out.end(), p->value.begin(), p->value.end());
    return out;
}

}  // namespace charrnet
