#include "charrnet/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "charrnet/errors.hpp"

namespace charrnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CRowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<CRowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstCMapMat = Eigen::Map<const CRowMat>;

cplx* as_complex(std::vector<double>& v) { return reinterpret_cast<cplx*>(v.data()); }
const cplx* as_complex(const std::vector<double>& v) { return reinterpret_cast<const cplx*>(v.data()); }

std::size_t product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

void fill_normal(std::vector<double>& v, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& x : v) x = dist(rng);
}

}  // namespace

Param::Param(std::string n, std::vector<std::size_t> s)
    : name(std::move(n)), shape(std::move(s)), value(product(shape), 0.0), grad(value.size(), 0.0) {}

void Param::zero_grad() noexcept { std::fill(grad.begin(), grad.end(), 0.0); }

// ---------------------------------------------------------------- ManifoldTensor

ManifoldTensor::ManifoldTensor(std::size_t windows, std::size_t bins, std::size_t channels)
    : windows_(windows),
      bins_(bins),
      channels_(channels),
      log_r_(windows * bins * channels, 0.0),
      theta_(windows * bins * channels, 0.0) {}

ManifoldTensor ManifoldTensor::from_spectrogram(const Spectrogram& spec) {
    ManifoldTensor out(spec.windows(), spec.window_len(), 1);
    for (std::size_t w = 0; w < spec.windows(); ++w)
        for (std::size_t n = 0; n < spec.window_len(); ++n) out.set(w, n, 0, from_complex(spec.at(w, n)));
    return out;
}

ManifoldPoint ManifoldTensor::point(std::size_t w, std::size_t n, std::size_t c) const noexcept {
    const std::size_t i = index(w, n, c);
    return {std::exp(log_r_[i]), theta_[i]};
}

void ManifoldTensor::set(std::size_t w, std::size_t n, std::size_t c, const ManifoldPoint& p) noexcept {
    const std::size_t i = index(w, n, c);
    log_r_[i] = std::log(p.r);
    theta_[i] = p.theta;
}

ManifoldTensor ManifoldTensor::act_per_bin(std::span<const GroupElement> g) const {
    if (g.size() != bins_) throw SizeError("act_per_bin: one group element per bin required");
    ManifoldTensor out = *this;
    for (std::size_t w = 0; w < windows_; ++w)
        for (std::size_t n = 0; n < bins_; ++n) {
            const double lr = std::log(g[n].rho);
            for (std::size_t c = 0; c < channels_; ++c) {
                const std::size_t i = index(w, n, c);
                out.log_r_[i] += lr;
                out.theta_[i] = wrap_angle(out.theta_[i] + g[n].phi);
            }
        }
    return out;
}

RealTensor::RealTensor(std::vector<std::size_t> s) : shape(std::move(s)), data(product(shape), 0.0) {}

std::size_t strided_output_len(std::size_t in_len, std::size_t kernel, std::size_t stride) {
    if (in_len < kernel || stride == 0) return 0;
    return (in_len - kernel) / stride + 1;
}

// ---------------------------------------------------------------- wFM convolution

WfmConvolution::WfmConvolution(std::string name, std::size_t in_channels, const WfmLayerConfig& cfg)
    : in_channels_(in_channels), cfg_(cfg), logits_(std::move(name), {cfg.filters, in_channels * cfg.kernel}) {
    if (cfg.filters == 0 || cfg.kernel == 0 || cfg.stride == 0 || in_channels == 0)
        throw ArgumentError("wFM layer: filters, kernel, stride and channels must be >= 1");
}

void WfmConvolution::init(Rng& rng, double stddev) { fill_normal(logits_.value, rng, stddev); }

std::vector<double> WfmConvolution::filter_weights() const {
    const std::size_t j = in_channels_ * cfg_.kernel;
    std::vector<double> out;
    out.reserve(logits_.size());
    for (std::size_t f = 0; f < cfg_.filters; ++f) {
        const ConvexWeights w = ConvexWeights::softmax(std::span(logits_.value).subspan(f * j, j));
        out.insert(out.end(), w.values().begin(), w.values().end());
    }
    return out;
}

void WfmConvolution::check_input(const ManifoldTensor& x) const {
    if (x.channels() != in_channels_)
        throw SizeError(logits_.name + ": expected " + std::to_string(in_channels_) + " channels, got " +
                        std::to_string(x.channels()));
    if (x.windows() < cfg_.kernel)
        throw SizeError(logits_.name + ": " + std::to_string(x.windows()) + " windows < kernel " +
                        std::to_string(cfg_.kernel));
}

WfmConvolution::Means WfmConvolution::compute_means(const ManifoldTensor& x, std::span<const double> weights) const {
    const std::size_t n_bins = x.bins();
    const std::size_t c_in = in_channels_;
    const std::size_t k_len = cfg_.kernel;
    const std::size_t n_f = cfg_.filters;
    const std::size_t j_len = c_in * k_len;

    Means m;
    m.out_windows = strided_output_len(x.windows(), k_len, cfg_.stride);
    const std::size_t total = m.out_windows * n_bins * n_f;
    m.log_r.assign(total, 0.0);
    m.theta.assign(total, 0.0);
    m.sin_sum.assign(total, 0.0);
    m.cos_sum.assign(total, 0.0);
    m.degenerate.assign(total, 0);

    const auto lr_in = x.log_r_data();
    const auto th_in = x.theta_data();
    std::vector<double> sin_in(th_in.size()), cos_in(th_in.size());
    for (std::size_t i = 0; i < th_in.size(); ++i) {
        sin_in[i] = std::sin(th_in[i]);
        cos_in[i] = std::cos(th_in[i]);
    }

    for (std::size_t wo = 0; wo < m.out_windows; ++wo) {
        for (std::size_t n = 0; n < n_bins; ++n) {
            for (std::size_t f = 0; f < n_f; ++f) {
                const double* a = weights.data() + f * j_len;
                double lr = 0.0, s = 0.0, c = 0.0;
                for (std::size_t k = 0; k < k_len; ++k) {
                    const std::size_t base = x.index(wo * cfg_.stride + k, n, 0);
                    for (std::size_t ch = 0; ch < c_in; ++ch) {
                        const double wj = a[k * c_in + ch];
                        lr += wj * lr_in[base + ch];
                        s += wj * sin_in[base + ch];
                        c += wj * cos_in[base + ch];
                    }
                }
                const std::size_t o = (wo * n_bins + n) * n_f + f;
                m.log_r[o] = lr;
                m.sin_sum[o] = s;
                m.cos_sum[o] = c;
                const bool degenerate = std::hypot(s, c) < kEpsRes;
                m.degenerate[o] = degenerate ? 1 : 0;
                m.theta[o] = degenerate ? 0.0 : wrap_angle(std::atan2(s, c));
            }
        }
    }
    return m;
}

void WfmConvolution::backprop_means(const ManifoldTensor& x, std::span<const double> weights, const Means& m,
                                    std::span<const double> g_log_r, std::span<const double> g_theta,
                                    ManifoldTensor* dx) {
    const std::size_t n_bins = x.bins();
    const std::size_t c_in = in_channels_;
    const std::size_t k_len = cfg_.kernel;
    const std::size_t n_f = cfg_.filters;
    const std::size_t j_len = c_in * k_len;

    const auto lr_in = x.log_r_data();
    const auto th_in = x.theta_data();
    std::vector<double> g_weights(weights.size(), 0.0);

    for (std::size_t wo = 0; wo < m.out_windows; ++wo) {
        for (std::size_t n = 0; n < n_bins; ++n) {
            for (std::size_t f = 0; f < n_f; ++f) {
                const std::size_t o = (wo * n_bins + n) * n_f + f;
                const double glr = g_log_r[o];
                const double gth = m.degenerate[o] ? 0.0 : g_theta[o];
                if (glr == 0.0 && gth == 0.0) continue;
                // theta = atan2(S, C)
                const double s = m.sin_sum[o];
                const double c = m.cos_sum[o];
                const double r2 = s * s + c * c;
                const double gs = gth != 0.0 ? gth * c / r2 : 0.0;
                const double gc = gth != 0.0 ? -gth * s / r2 : 0.0;
                const double* a = weights.data() + f * j_len;
                double* ga = g_weights.data() + f * j_len;
                for (std::size_t k = 0; k < k_len; ++k) {
                    const std::size_t base = x.index(wo * cfg_.stride + k, n, 0);
                    for (std::size_t ch = 0; ch < c_in; ++ch) {
                        const std::size_t i = base + ch;
                        const std::size_t j = k * c_in + ch;
                        const double si = std::sin(th_in[i]);
                        const double ci = std::cos(th_in[i]);
                        ga[j] += glr * lr_in[i] + gs * si + gc * ci;
                        if (dx != nullptr) {
                            dx->log_r_data()[i] += a[j] * glr;
                            dx->theta_data()[i] += a[j] * (gs * ci - gc * si);
                        }
                    }
                }
            }
        }
    }

    // softmax backward, per filter
    for (std::size_t f = 0; f < n_f; ++f) {
        const double* a = weights.data() + f * j_len;
        const double* ga = g_weights.data() + f * j_len;
        double dot = 0.0;
        for (std::size_t j = 0; j < j_len; ++j) dot += a[j] * ga[j];
        for (std::size_t j = 0; j < j_len; ++j) logits_.grad[f * j_len + j] += a[j] * (ga[j] - dot);
    }
}

ManifoldTensor EquivariantLayer::forward(const ManifoldTensor& x) {
    check_input(x);
    input_ = x;
    weights_ = filter_weights();
    means_ = compute_means(x, weights_);
    ManifoldTensor out(means_.out_windows, x.bins(), cfg_.filters);
    std::copy(means_.log_r.begin(), means_.log_r.end(), out.log_r_data().begin());
    std::copy(means_.theta.begin(), means_.theta.end(), out.theta_data().begin());
    return out;
}

ManifoldTensor EquivariantLayer::backward(const ManifoldTensor& upstream, bool need_input_grad) {
    ManifoldTensor dx;
    if (need_input_grad) dx = ManifoldTensor(input_.windows(), input_.bins(), input_.channels());
    backprop_means(input_, weights_, means_, upstream.log_r_data(), upstream.theta_data(),
                   need_input_grad ? &dx : nullptr);
    return dx;
}

std::size_t EquivariantLayer::degenerate_count() const noexcept {
    return static_cast<std::size_t>(std::count(means_.degenerate.begin(), means_.degenerate.end(), 1));
}

RealTensor InvariantLayer::forward(const ManifoldTensor& x) {
    check_input(x);
    input_ = x;
    weights_ = filter_weights();
    means_ = compute_means(x, weights_);

    const std::size_t n_bins = x.bins();
    const std::size_t c_in = in_channels_;
    const std::size_t n_f = cfg_.filters;
    const double inv_j = 1.0 / static_cast<double>(c_in * cfg_.kernel);
    RealTensor out({means_.out_windows, n_bins, n_f});
    const auto lr_in = x.log_r_data();
    const auto th_in = x.theta_data();
    for (std::size_t wo = 0; wo < means_.out_windows; ++wo)
        for (std::size_t n = 0; n < n_bins; ++n)
            for (std::size_t f = 0; f < n_f; ++f) {
                const std::size_t o = (wo * n_bins + n) * n_f + f;
                double acc = 0.0;
                for (std::size_t k = 0; k < cfg_.kernel; ++k) {
                    const std::size_t base = x.index(wo * cfg_.stride + k, n, 0);
                    for (std::size_t ch = 0; ch < c_in; ++ch) {
                        const double dl = lr_in[base + ch] - means_.log_r[o];
                        const double dt = wrap_angle(th_in[base + ch] - means_.theta[o]);
                        acc += std::sqrt(dl * dl + dt * dt + kEpsDist);
                    }
                }
                out.data[o] = acc * inv_j;
            }
    return out;
}

ManifoldTensor InvariantLayer::backward(const RealTensor& upstream, bool need_input_grad) {
    const ManifoldTensor& x = input_;
    const std::size_t n_bins = x.bins();
    const std::size_t c_in = in_channels_;
    const std::size_t n_f = cfg_.filters;
    const double inv_j = 1.0 / static_cast<double>(c_in * cfg_.kernel);

    ManifoldTensor dx;
    if (need_input_grad) dx = ManifoldTensor(x.windows(), x.bins(), x.channels());
    std::vector<double> g_mlr(means_.log_r.size(), 0.0);
    std::vector<double> g_mth(means_.theta.size(), 0.0);
    const auto lr_in = x.log_r_data();
    const auto th_in = x.theta_data();

    for (std::size_t wo = 0; wo < means_.out_windows; ++wo)
        for (std::size_t n = 0; n < n_bins; ++n)
            for (std::size_t f = 0; f < n_f; ++f) {
                const std::size_t o = (wo * n_bins + n) * n_f + f;
                const double g = upstream.data[o] * inv_j;
                if (g == 0.0) continue;
                for (std::size_t k = 0; k < cfg_.kernel; ++k) {
                    const std::size_t base = x.index(wo * cfg_.stride + k, n, 0);
                    for (std::size_t ch = 0; ch < c_in; ++ch) {
                        const std::size_t i = base + ch;
                        const double dl = lr_in[i] - means_.log_r[o];
                        const double dt = wrap_angle(th_in[i] - means_.theta[o]);
                        const double d = std::sqrt(dl * dl + dt * dt + kEpsDist);
                        const double cl = g * dl / d;
                        const double ct = g * dt / d;
                        g_mlr[o] -= cl;
                        g_mth[o] -= ct;
                        if (need_input_grad) {
                            dx.log_r_data()[i] += cl;
                            dx.theta_data()[i] += ct;
                        }
                    }
                }
            }

    backprop_means(x, weights_, means_, g_mlr, g_mth, need_input_grad ? &dx : nullptr);
    return dx;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(kernel / 2),
      weight_(name + ".weight", {out_ch, in_ch, kernel}),
      bias_(name + ".bias", {out_ch}) {
    if (kernel == 0 || stride == 0) throw ArgumentError("Conv1d: kernel and stride must be >= 1");
}

void Conv1d::init(Rng& rng) {
    fill_normal(weight_.value, rng, std::sqrt(2.0 / static_cast<double>(in_ch_ * kernel_)));
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

std::size_t Conv1d::output_len(std::size_t in_len) const noexcept {
    return (in_len + 2 * pad_ - kernel_) / stride_ + 1;
}

std::vector<double> Conv1d::forward(std::span<const double> x, std::size_t len) {
    if (x.size() != in_ch_ * len) throw SizeError(weight_.name + ": input size mismatch");
    in_len_ = len;
    out_len_ = output_len(len);
    const std::size_t rows = in_ch_ * kernel_;
    cols_.assign(rows * out_len_, 0.0);
    for (std::size_t c = 0; c < in_ch_; ++c)
        for (std::size_t t = 0; t < kernel_; ++t) {
            double* row = cols_.data() + (c * kernel_ + t) * out_len_;
            for (std::size_t o = 0; o < out_len_; ++o) {
                const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride_ + t) - static_cast<std::ptrdiff_t>(pad_);
                if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) row[o] = x[c * len + static_cast<std::size_t>(pos)];
            }
        }
    std::vector<double> y(out_ch_ * out_len_);
    MapMat ym(y.data(), out_ch_, out_len_);
    ym.noalias() = ConstMapMat(weight_.value.data(), out_ch_, rows) * ConstMapMat(cols_.data(), rows, out_len_);
    for (std::size_t oc = 0; oc < out_ch_; ++oc) ym.row(oc).array() += bias_.value[oc];
    return y;
}

std::vector<double> Conv1d::backward(std::span<const double> dy, bool need_input_grad) {
    const std::size_t rows = in_ch_ * kernel_;
    ConstMapMat dym(dy.data(), out_ch_, out_len_);
    ConstMapMat cols(cols_.data(), rows, out_len_);
    MapMat(weight_.grad.data(), out_ch_, rows).noalias() += dym * cols.transpose();
    // Plain loops: vectorized reductions would round differently with buffer alignment.
    for (std::size_t oc = 0; oc < out_ch_; ++oc)
        for (std::size_t o = 0; o < out_len_; ++o) bias_.grad[oc] += dy[oc * out_len_ + o];
    if (!need_input_grad) return {};

    RowMat dcols = ConstMapMat(weight_.value.data(), out_ch_, rows).transpose() * dym;
    std::vector<double> dx(in_ch_ * in_len_, 0.0);
    for (std::size_t c = 0; c < in_ch_; ++c)
        for (std::size_t t = 0; t < kernel_; ++t)
            for (std::size_t o = 0; o < out_len_; ++o) {
                const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride_ + t) - static_cast<std::ptrdiff_t>(pad_);
                if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(in_len_))
                    dx[c * in_len_ + static_cast<std::size_t>(pos)] += dcols(c * kernel_ + t, o);
            }
    return dx;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}) {}

void Dense::init(Rng& rng, double gain) {
    fill_normal(weight_.value, rng, gain / std::sqrt(static_cast<double>(in_)));
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

std::vector<double> Dense::forward(std::span<const double> x) {
    if (x.size() != in_) throw SizeError(weight_.name + ": input size mismatch");
    input_.assign(x.begin(), x.end());
    std::vector<double> y(bias_.value);
    Eigen::Map<Eigen::VectorXd>(y.data(), out_).noalias() +=
        ConstMapMat(weight_.value.data(), out_, in_) * Eigen::Map<const Eigen::VectorXd>(x.data(), in_);
    return y;
}

std::vector<double> Dense::backward(std::span<const double> dy) {
    Eigen::Map<const Eigen::VectorXd> g(dy.data(), out_);
    Eigen::Map<const Eigen::VectorXd> xin(input_.data(), in_);
    MapMat(weight_.grad.data(), out_, in_).noalias() += g * xin.transpose();
    for (std::size_t i = 0; i < out_; ++i) bias_.grad[i] += dy[i];
    std::vector<double> dx(in_);
    Eigen::Map<Eigen::VectorXd>(dx.data(), in_).noalias() =
        ConstMapMat(weight_.value.data(), out_, in_).transpose() * g;
    return dx;
}

// ---------------------------------------------------------------- Backbone

namespace {
std::vector<Conv1d> make_stages(std::size_t in_channels, const BackboneConfig& cfg) {
    std::vector<Conv1d> out;
    std::size_t c = in_channels;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        out.emplace_back("backbone.conv" + std::to_string(i), c, cfg.channels[i], cfg.kernel, cfg.stride);
        c = cfg.channels[i];
    }
    return out;
}
}  // namespace

Backbone::Backbone(std::size_t in_channels, std::size_t num_classes, const BackboneConfig& cfg)
    : convs_(make_stages(in_channels, cfg)),
      head_("backbone.head", cfg.channels.empty() ? in_channels : cfg.channels.back(), num_classes) {}

void Backbone::init(Rng& rng) {
    for (Conv1d& c : convs_) c.init(rng);
    head_.init(rng, 0.1);
}

std::vector<double> Backbone::forward(std::span<const double> x, std::size_t len) {
    std::vector<double> h(x.begin(), x.end());
    relu_masks_.assign(convs_.size(), {});
    lens_.assign(convs_.size() + 1, 0);
    lens_[0] = len;
    std::size_t cur = len;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        h = convs_[i].forward(h, cur);
        cur = convs_[i].output_len(cur);
        lens_[i + 1] = cur;
        auto& mask = relu_masks_[i];
        mask.resize(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) {
            mask[j] = h[j] > 0.0 ? 1 : 0;
            if (!mask[j]) h[j] = 0.0;
        }
    }
    const std::size_t ch = h.size() / cur;
    std::vector<double> pooled(ch, 0.0);
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t t = 0; t < cur; ++t) pooled[c] += h[c * cur + t];
        pooled[c] /= static_cast<double>(cur);
    }
    return head_.forward(pooled);
}

std::vector<double> Backbone::backward(std::span<const double> grad_logits, bool need_input_grad) {
    const std::vector<double> dpool = head_.backward(grad_logits);
    const std::size_t cur = lens_.back();
    std::vector<double> g(dpool.size() * cur);
    for (std::size_t c = 0; c < dpool.size(); ++c)
        for (std::size_t t = 0; t < cur; ++t) g[c * cur + t] = dpool[c] / static_cast<double>(cur);
    for (std::size_t i = convs_.size(); i-- > 0;) {
        const auto& mask = relu_masks_[i];
        for (std::size_t j = 0; j < g.size(); ++j)
            if (!mask[j]) g[j] = 0.0;
        g = convs_[i].backward(g, need_input_grad || i > 0);
    }
    return g;
}

std::vector<Param*> Backbone::params() {
    std::vector<Param*> out;
    for (Conv1d& c : convs_) {
        out.push_back(&c.weight());
        out.push_back(&c.bias());
    }
    out.push_back(&head_.weight());
    out.push_back(&head_.bias());
    return out;
}

// ---------------------------------------------------------------- ComplexConvStage

ComplexConvStage::ComplexConvStage(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                                   std::size_t stride)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(kernel / 2),
      weight_(name + ".weight", {out_ch, in_ch, kernel, 2}),
      bias_(name + ".bias", {out_ch, 2}),
      act_bias_(name + ".modrelu_bias", {out_ch}) {
    if (kernel == 0 || stride == 0) throw ArgumentError("ComplexConvStage: kernel and stride must be >= 1");
}

void ComplexConvStage::init(Rng& rng) {
    fill_normal(weight_.value, rng, std::sqrt(1.0 / static_cast<double>(2 * in_ch_ * kernel_)));
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
    std::fill(act_bias_.value.begin(), act_bias_.value.end(), 0.0);
}

std::size_t ComplexConvStage::output_len(std::size_t in_len) const noexcept {
    return (in_len + 2 * pad_ - kernel_) / stride_ + 1;
}

std::vector<cplx> ComplexConvStage::im2col(std::span<const cplx> x, std::size_t len, std::size_t out_len) const {
    std::vector<cplx> cols(in_ch_ * kernel_ * out_len);
    for (std::size_t c = 0; c < in_ch_; ++c)
        for (std::size_t t = 0; t < kernel_; ++t) {
            cplx* row = cols.data() + (c * kernel_ + t) * out_len;
            for (std::size_t o = 0; o < out_len; ++o) {
                const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride_ + t) - static_cast<std::ptrdiff_t>(pad_);
                if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) row[o] = x[c * len + static_cast<std::size_t>(pos)];
            }
        }
    return cols;
}

std::vector<cplx> ComplexConvStage::apply(const std::vector<cplx>& cols, std::size_t out_len) const {
    const std::size_t rows = in_ch_ * kernel_;
    std::vector<cplx> y(out_ch_ * out_len);
    CMapMat ym(y.data(), out_ch_, out_len);
    ym.noalias() = ConstCMapMat(as_complex(weight_.value), out_ch_, rows) * ConstCMapMat(cols.data(), rows, out_len);
    const cplx* b = as_complex(bias_.value);
    for (std::size_t oc = 0; oc < out_ch_; ++oc) ym.row(oc).array() += b[oc];
    return y;
}

std::vector<cplx> ComplexConvStage::linear(std::span<const cplx> x, std::size_t len) const {
    if (x.size() != in_ch_ * len) throw SizeError(weight_.name + ": input size mismatch");
    const std::size_t out_len = output_len(len);
    return apply(im2col(x, len, out_len), out_len);
}

std::vector<cplx> ComplexConvStage::forward(std::span<const cplx> x, std::size_t len) {
    if (x.size() != in_ch_ * len) throw SizeError(weight_.name + ": input size mismatch");
    in_len_ = len;
    out_len_ = output_len(len);
    cols_ = im2col(x, len, out_len_);
    pre_ = apply(cols_, out_len_);
    std::vector<cplx> y(pre_.size());
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
        const double b = act_bias_.value[oc];
        for (std::size_t o = 0; o < out_len_; ++o) {
            const std::size_t i = oc * out_len_ + o;
            const double m = std::abs(pre_[i]);
            y[i] = (m > 0.0 && m + b > 0.0) ? pre_[i] * ((m + b) / m) : cplx{};
        }
    }
    return y;
}

std::vector<cplx> ComplexConvStage::backward(std::span<const cplx> dy, bool need_input_grad) {
    // Gradients use the convention g = dL/dRe + i dL/dIm.
    std::vector<cplx> gz(pre_.size());
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
        const double b = act_bias_.value[oc];
        for (std::size_t o = 0; o < out_len_; ++o) {
            const std::size_t i = oc * out_len_ + o;
            const double m = std::abs(pre_[i]);
            if (!(m > 0.0 && m + b > 0.0)) continue;
            const cplx u = pre_[i] / m;
            const cplx g = dy[i];
            const double proj = (std::conj(u) * g).real();
            gz[i] = g + (b / m) * (g - u * proj);
            act_bias_.grad[oc] += proj;
        }
    }
    const std::size_t rows = in_ch_ * kernel_;
    ConstCMapMat gzm(gz.data(), out_ch_, out_len_);
    ConstCMapMat cols(cols_.data(), rows, out_len_);
    CMapMat(as_complex(weight_.grad), out_ch_, rows).noalias() += gzm * cols.adjoint();
    cplx* gb = as_complex(bias_.grad);
    for (std::size_t oc = 0; oc < out_ch_; ++oc)
        for (std::size_t o = 0; o < out_len_; ++o) gb[oc] += gz[oc * out_len_ + o];
    if (!need_input_grad) return {};

    CRowMat dcols = ConstCMapMat(as_complex(weight_.value), out_ch_, rows).adjoint() * gzm;
    std::vector<cplx> dx(in_ch_ * in_len_);
    for (std::size_t c = 0; c < in_ch_; ++c)
        for (std::size_t t = 0; t < kernel_; ++t)
            for (std::size_t o = 0; o < out_len_; ++o) {
                const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride_ + t) - static_cast<std::ptrdiff_t>(pad_);
                if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(in_len_))
                    dx[c * in_len_ + static_cast<std::size_t>(pos)] += dcols(c * kernel_ + t, o);
            }
    return dx;
}

// ---------------------------------------------------------------- loss

LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size())
        throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                            std::to_string(logits.size()) + " classes");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const double lse = mx + std::log(sum);
    LossResult out;
    out.loss = lse - logits[label];
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - lse);
    out.grad[label] -= 1.0;
    return out;
}

}  // namespace charrnet
