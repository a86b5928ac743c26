#include "charrnet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "charrnet/channel.hpp"
#include "charrnet/errors.hpp"
#include "charrnet/fingerprint.hpp"
#include "charrnet/model.hpp"

namespace charrnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kEqStream = 0x6571;     // "eq"
constexpr std::uint64_t kInvStream = 0x696e76;  // "inv"
constexpr std::uint64_t kGradStream = 0x67726164;
constexpr std::uint64_t kFig2Stream = 0x66696732;
// Gradients smaller than this are compared on an absolute scale (floor * tolerance).
constexpr double kGradientFloor = 1e-6;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Spectrogram random_spectrogram(Rng& rng, std::size_t windows, std::size_t bins) {
    std::normal_distribution<double> g(0.0, 1.0);
    Spectrogram s(windows, bins, bins, 0.0);
    for (std::size_t w = 0; w < windows; ++w)
        for (cplx& z : s.window(w)) {
            const double re = g(rng);
            const double im = g(rng);
            z = {re, im};
        }
    return s;
}

// Per-bin response with log-magnitude in [-2, 2] and arbitrary phase.
Spectrum random_response(Rng& rng, std::size_t bins) {
    Spectrum h;
    for (std::size_t n = 0; n < bins; ++n) h.bins.push_back(std::polar(std::exp(uniform(rng, -2.0, 2.0)), uniform(rng, -kPi, kPi)));
    return h;
}

std::vector<GroupElement> to_group(const Spectrum& h) {
    std::vector<GroupElement> g;
    for (const cplx& z : h.bins) g.push_back(GroupElement::from_complex(z));
    return g;
}

struct LayerDraw {
    std::size_t windows, bins;
    WfmLayerConfig eq, inv;
};

LayerDraw draw_layers(Rng& rng) {
    LayerDraw d;
    d.windows = pick(rng, 8, 16);
    d.bins = std::size_t{1} << pick(rng, 3, 6);
    d.eq = {pick(rng, 1, 8), pick(rng, 1, 4), pick(rng, 1, 3)};
    const std::size_t w1 = strided_output_len(d.windows, d.eq.kernel, d.eq.stride);
    d.inv = {pick(rng, 1, 8), pick(rng, 1, std::min<std::size_t>(4, w1)), pick(rng, 1, 2)};
    return d;
}

std::string describe(const LayerDraw& d, std::uint64_t seed, std::size_t c) {
    return "case " + std::to_string(c) + " (seed " + std::to_string(seed) + "): windows=" + std::to_string(d.windows) +
           " bins=" + std::to_string(d.bins) + " eq{F=" + std::to_string(d.eq.filters) + ",K=" + std::to_string(d.eq.kernel) +
           ",stride=" + std::to_string(d.eq.stride) + "} inv{F=" + std::to_string(d.inv.filters) +
           ",K=" + std::to_string(d.inv.kernel) + ",stride=" + std::to_string(d.inv.stride) + "}";
}

void record(SuiteResult& r, double err, const std::string& where) {
    ++r.checked;
    if (!(err <= r.max_error)) r.max_error = std::isnan(err) ? INFINITY : std::max(r.max_error, err);
    if (!(err < r.tolerance) && r.passed) {
        r.passed = false;
        r.failure = where + ": error " + num(err) + " exceeds " + num(r.tolerance);
    }
}

}  // namespace

SuiteResult verify_equivariance(const VerifyConfig& cfg) {
    SuiteResult r;
    r.suite = "equivariance";
    r.tolerance = cfg.tolerance;
    for (std::size_t c = 0; c < cfg.cases; ++c) {
        Rng rng = make_rng(cfg.seed, {kEqStream, c});
        const LayerDraw d = draw_layers(rng);
        EquivariantLayer layer("equivariant", 1, d.eq);
        layer.init(rng);
        const Spectrogram s = random_spectrogram(rng, d.windows, d.bins);
        const Spectrum h = random_response(rng, d.bins);

        const ManifoldTensor a = layer.forward(ManifoldTensor::from_spectrogram(apply_ideal_channel(s, h)));
        const std::size_t degenerate_a = layer.degenerate_count();
        const ManifoldTensor b = layer.forward(ManifoldTensor::from_spectrogram(s)).act_per_bin(to_group(h));
        ++r.cases;
        if (degenerate_a + layer.degenerate_count() > 0) {
            ++r.skipped_degenerate;
            continue;
        }
        const std::string where = describe(d, cfg.seed, c);
        for (std::size_t i = 0; i < a.log_r_data().size(); ++i) {
            record(r, std::abs(a.log_r_data()[i] - b.log_r_data()[i]), where + " log_r[" + std::to_string(i) + "]");
            record(r, angular_distance(a.theta_data()[i], b.theta_data()[i]), where + " theta[" + std::to_string(i) + "]");
        }
    }
    return r;
}

SuiteResult verify_invariance(const VerifyConfig& cfg) {
    SuiteResult r;
    r.suite = "invariance";
    r.tolerance = cfg.tolerance;
    for (std::size_t c = 0; c < cfg.cases; ++c) {
        Rng rng = make_rng(cfg.seed, {kInvStream, c});
        const LayerDraw d = draw_layers(rng);
        InvariantLayer alone("invariant", 1, d.inv);
        EquivariantLayer eq("equivariant", 1, d.eq);
        InvariantLayer stacked("invariant", d.eq.filters, d.inv);
        alone.init(rng);
        eq.init(rng);
        stacked.init(rng);
        const Spectrogram s = random_spectrogram(rng, d.windows, d.bins);
        const Spectrum h = random_response(rng, d.bins);
        const ManifoldTensor x = ManifoldTensor::from_spectrogram(s);
        const ManifoldTensor gx = ManifoldTensor::from_spectrogram(apply_ideal_channel(s, h));
        ++r.cases;
        const std::string where = describe(d, cfg.seed, c);

        const RealTensor a = alone.forward(gx), b = alone.forward(x);
        for (std::size_t i = 0; i < a.size(); ++i) record(r, std::abs(a.data[i] - b.data[i]), where + " invariant[" + std::to_string(i) + "]");

        const RealTensor sa = stacked.forward(eq.forward(gx));
        const std::size_t degenerate = eq.degenerate_count();
        const RealTensor sb = stacked.forward(eq.forward(x));
        if (degenerate + eq.degenerate_count() > 0) {
            ++r.skipped_degenerate;
            continue;
        }
        for (std::size_t i = 0; i < sa.size(); ++i)
            record(r, std::abs(sa.data[i] - sb.data[i]), where + " stacked[" + std::to_string(i) + "]");
    }
    return r;
}

SuiteResult verify_gradients(const VerifyConfig& cfg) {
    SuiteResult r;
    r.suite = "gradients";
    r.tolerance = cfg.gradient_tolerance;
    const double h = cfg.gradient_step;
    for (std::size_t c = 0; c < cfg.gradient_configs; ++c) {
        Rng rng = make_rng(cfg.seed, {kGradStream, c});
        ModelConfig base;
        base.num_classes = pick(rng, 2, 5);
        base.stft.window_len = std::size_t{1} << pick(rng, 3, 4);
        base.stft.hop = pick(rng, 0, 1) ? base.stft.window_len : base.stft.window_len / 2;
        base.stft.beta = pick(rng, 0, 1) ? 8.6 : 0.0;
        base.equivariant = {pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 2)};
        base.invariant = {pick(rng, 1, 3), pick(rng, 2, 3), pick(rng, 1, 2)};
        base.backbone = {{pick(rng, 2, 4), pick(rng, 2, 4)}, pick(rng, 2, 3) * 2 - 1, pick(rng, 1, 2)};
        base.complex_stack = {{pick(rng, 2, 3), pick(rng, 2, 3)}, pick(rng, 1, 2) * 2 + 1, pick(rng, 1, 2)};
        // Enough windows for both wFM layers.
        const std::size_t w1 = base.invariant.kernel + 1;
        const std::size_t windows = (w1 - 1) * base.equivariant.stride + base.equivariant.kernel + pick(rng, 0, 3);
        base.input_length = (windows - 1) * base.stft.hop + base.stft.window_len;

        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<cplx> samples(base.input_length);
        for (cplx& z : samples) {
            const double re = g(rng);
            const double im = g(rng);
            z = {re, im};
        }
        const ComplexSignal x(std::move(samples));
        const std::size_t label = pick(rng, 0, base.num_classes - 1);

        for (ModelKind kind : {ModelKind::charrnet, ModelKind::baseline}) {
            ModelConfig mc = base;
            mc.kind = kind;
            mc.init_seed = rng();
            auto model = make_model(mc);
            for (Param* p : model->params())
                if (p->name.find("bias") != std::string::npos)
                    for (double& v : p->value) v = 0.1 * g(rng);  // exercise bias paths away from zero
            model->zero_grad();
            const LossResult lr = softmax_cross_entropy(model->forward(x), label);
            model->backward(lr.grad);
            ++r.cases;
            for (Param* p : model->params()) {
                const std::vector<double> analytic = p->grad;
                for (std::size_t i = 0; i < p->size(); ++i) {
                    const double keep = p->value[i];
                    p->value[i] = keep + h;
                    const double up = softmax_cross_entropy(model->forward(x), label).loss;
                    p->value[i] = keep - h;
                    const double down = softmax_cross_entropy(model->forward(x), label).loss;
                    p->value[i] = keep;
                    const double numeric = (up - down) / (2.0 * h);
                    const double a = analytic[i];
                    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradientFloor});
                    record(r, err,
                           "config " + std::to_string(c) + " (seed " + std::to_string(cfg.seed) + ") " + to_string(kind) + " " +
                               p->name + "[" + std::to_string(i) + "] analytic " + num(a) + " numeric " + num(numeric));
                }
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------- fig2

namespace {

double rel_dev(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

// Equivariant features as complex values, so deviation is measured after the
// expected action has been applied to the clean features.
double equivariant_dev(const ManifoldTensor& moved, const ManifoldTensor& clean, const Spectrum& h) {
    double num = 0.0, den = 0.0;
    for (std::size_t w = 0; w < clean.windows(); ++w)
        for (std::size_t n = 0; n < clean.bins(); ++n)
            for (std::size_t f = 0; f < clean.channels(); ++f) {
                const cplx want = h.bins[n] * clean.point(w, n, f).to_complex();
                const cplx got = moved.point(w, n, f).to_complex();
                num += std::norm(got - want);
                den += std::norm(want);
            }
    return std::sqrt(num / den);
}

// Per-block circular convolution: the time-domain form of the ideal per-window action.
ComplexSignal blockwise_circular(const ComplexSignal& x, const ImpulseResponse& h, std::size_t block) {
    std::vector<cplx> out;
    const auto s = x.samples();
    for (std::size_t start = 0; start < s.size(); start += block) {
        const std::size_t len = std::min(block, s.size() - start);
        const auto y = circular_convolve(s.subspan(start, len), h.taps);
        out.insert(out.end(), y.begin(), y.end());
    }
    return ComplexSignal(std::move(out), x.sample_rate_hz());
}

ComplexSignal blockwise_window(const ComplexSignal& x, std::size_t block, double beta) {
    std::vector<cplx> out(x.samples().begin(), x.samples().end());
    for (std::size_t start = 0; start < out.size(); start += block) {
        const std::size_t len = std::min(block, out.size() - start);
        const auto w = kaiser_window({len, beta});
        for (std::size_t i = 0; i < len; ++i) out[start + i] *= w[i];
    }
    return ComplexSignal(std::move(out), x.sample_rate_hz());
}

}  // namespace

std::string Fig2Result::csv() const {
    std::string out = "layer,action,mean_relative_deviation\n";
    for (const Fig2Row& row : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", row.deviation);
        out += row.layer + "," + row.action + "," + buf + "\n";
    }
    return out;
}

Fig2Result run_fig2(const VerifyConfig& cfg) {
    if (cfg.fig2_trials == 0) throw ConfigError("verify.fig2_trials must be >= 1");
    const BurstSpec burst{};
    ModelConfig mc;
    mc.input_length = burst.length();
    mc.init_seed = derive_seed(cfg.seed, {kFig2Stream, 1});
    mc.kind = ModelKind::charrnet;
    ChaRRNet charr(mc);
    mc.kind = ModelKind::baseline;
    BaselineNet base(mc);
    const DeviceFingerprint fp = make_population({}, derive_seed(cfg.seed, {kFig2Stream, 2}))[0];
    const std::size_t wl = mc.stft.window_len, hop = mc.stft.hop;
    const double beta = mc.stft.beta;

    // [layer][action] sums; actions: ideal, physical, physical_windowed
    double sum[3][3] = {};
    for (std::size_t t = 0; t < cfg.fig2_trials; ++t) {
        Rng rng = make_rng(cfg.seed, {kFig2Stream, 3, t});
        const ComplexSignal x = apply_fingerprint(generate_burst(burst, rng), fp);
        const ImpulseResponse h = sample_fading_channel({FadingModel::rayleigh, cfg.channel_taps, 0.5, {}}, rng);
        const Spectrum H = frequency_response(h, wl);
        const ComplexSignal y = convolve(x, h);

        // Baseline complex-conv layer.
        const auto fx = base.first_stage_features(x);
        sum[0][0] += rel_dev(base.first_stage_features(blockwise_circular(x, h, wl)), fx);
        sum[0][1] += rel_dev(base.first_stage_features(y), fx);
        sum[0][2] += rel_dev(base.first_stage_features(blockwise_window(y, wl, beta)),
                             base.first_stage_features(blockwise_window(x, wl, beta)));

        // wFM layers: ideal action on the tapered spectrogram, then physical with beta 0 and beta 8.6.
        const Spectrogram sx = stft(x, wl, hop, beta);
        const Spectrogram pairs[3][2] = {{sx, apply_ideal_channel(sx, H)},
                                         {stft(x, wl, hop, 0.0), stft(y, wl, hop, 0.0)},
                                         {sx, stft(y, wl, hop, beta)}};
        for (int a = 0; a < 3; ++a) {
            const ManifoldTensor ex = charr.equivariant().forward(ManifoldTensor::from_spectrogram(pairs[a][0]));
            const RealTensor ix = charr.invariant().forward(ex);
            const ManifoldTensor ey = charr.equivariant().forward(ManifoldTensor::from_spectrogram(pairs[a][1]));
            const RealTensor iy = charr.invariant().forward(ey);
            sum[1][a] += equivariant_dev(ey, ex, H);
            sum[2][a] += rel_dev(iy.data, ix.data);
        }
    }

    Fig2Result r;
    const char* layers[3] = {"baseline", "equivariant", "invariant"};
    const char* actions[3] = {"ideal", "physical", "physical_windowed"};
    const double n = static_cast<double>(cfg.fig2_trials);
    for (int l = 0; l < 3; ++l)
        for (int a = 0; a < 3; ++a) r.rows.push_back({layers[l], actions[a], sum[l][a] / n});
    r.invariant_rect = sum[2][1] / n;
    r.invariant_windowed = sum[2][2] / n;
    r.baseline_physical = sum[0][1] / n;
    r.ordering_holds = r.invariant_windowed < r.invariant_rect && r.invariant_windowed < r.baseline_physical &&
                       r.invariant_rect < r.baseline_physical;
    return r;
}

SuiteResult verify_fig2(const VerifyConfig& cfg) {
    const Fig2Result f = run_fig2(cfg);
    SuiteResult r;
    r.suite = "fig2";
    r.cases = cfg.fig2_trials;
    r.checked = f.rows.size();
    r.passed = f.ordering_holds;
    r.max_error = f.invariant_windowed;
    r.csv = f.csv();
    if (!f.ordering_holds)
        r.failure = "ordering violated (seed " + std::to_string(cfg.seed) + "): invariant beta=8.6 " + num(f.invariant_windowed) +
                    ", invariant beta=0 " + num(f.invariant_rect) + ", baseline physical " + num(f.baseline_physical);
    return r;
}

}  // namespace charrnet
