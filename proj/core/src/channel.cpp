#include "charrnet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "charrnet/errors.hpp"

namespace charrnet {

namespace {
constexpr double kPi = std::numbers::pi;

cplx complex_gaussian(Rng& rng, double variance) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}
}  // namespace

void GeometrySpec::validate() const {
    if (max_delay_samples < 1) throw ArgumentError("geometry: max_delay_samples must be >= 1");
    if (!(attn_db_range[0] <= attn_db_range[1]) || attn_db_range[1] > 0.0)
        throw ArgumentError("geometry: attenuation range must satisfy low <= high <= 0 dB");
    if (position_jitter < 0.0) throw ArgumentError("geometry: position_jitter must be >= 0");
}

ReflectorGeometry draw_geometry(const GeometrySpec& spec, Rng& rng) {
    spec.validate();
    if (spec.n_reflectors == 0 && !spec.line_of_sight)
        throw ArgumentError("geometry: empty channel (no line of sight and no reflectors)");
    ReflectorGeometry g{spec, {}};
    g.nominal_delays.reserve(spec.n_reflectors);
    for (std::size_t i = 0; i < spec.n_reflectors; ++i)
        g.nominal_delays.push_back(uniform(rng, 1.0, static_cast<double>(spec.max_delay_samples)));
    return g;
}

ImpulseResponse realize(const ReflectorGeometry& geometry, Rng& rng) {
    const GeometrySpec& spec = geometry.spec;
    ImpulseResponse ir;
    ir.taps.assign(spec.max_delay_samples + 1, cplx{});
    if (spec.line_of_sight) ir.taps[0] = 1.0;
    const double max_delay = static_cast<double>(spec.max_delay_samples);
    for (double nominal : geometry.nominal_delays) {
        const double jitter = spec.position_jitter > 0.0 ? uniform(rng, -spec.position_jitter, spec.position_jitter) : 0.0;
        const double delay = std::clamp(std::round(nominal + jitter), 1.0, max_delay);
        const double attn_db = spec.attn_db_range[0] == spec.attn_db_range[1]
                                   ? spec.attn_db_range[0]
                                   : uniform(rng, spec.attn_db_range[0], spec.attn_db_range[1]);
        const double phase = uniform(rng, -kPi, kPi);
        ir.taps[static_cast<std::size_t>(delay)] += std::polar(std::pow(10.0, attn_db / 20.0), phase);
    }
    // Trailing empty taps carry no information.
    while (ir.taps.size() > 1 && ir.taps.back() == cplx{}) ir.taps.pop_back();
    return ir;
}

ImpulseResponse sample_geometry_channel(const GeometrySpec& spec, Rng& rng) {
    const ReflectorGeometry g = draw_geometry(spec, rng);
    return realize(g, rng);
}

void FadingSpec::validate() const {
    if (n_taps < 1) throw ArgumentError("fading: n_taps must be >= 1");
    if (!(decay > 0.0)) throw ArgumentError("fading: decay must be > 0");
}

std::vector<double> power_delay_profile(std::size_t n_taps, double decay) {
    std::vector<double> p(n_taps);
    double z = 0.0;
    for (std::size_t k = 0; k < n_taps; ++k) {
        p[k] = std::exp(-decay * static_cast<double>(k));
        z += p[k];
    }
    for (double& v : p) v /= z;
    return p;
}

ImpulseResponse sample_fading_channel(const FadingSpec& spec, Rng& rng) {
    spec.validate();
    const std::vector<double> pdp = power_delay_profile(spec.n_taps, spec.decay);
    ImpulseResponse ir;
    ir.taps.resize(spec.n_taps);
    for (std::size_t k = 0; k < spec.n_taps; ++k) ir.taps[k] = complex_gaussian(rng, pdp[k]);
    if (spec.model == FadingModel::rayleigh) return ir;

    const double k_db = spec.k_factor_db ? *spec.k_factor_db : uniform(rng, 3.0, 10.0);
    if (std::isinf(k_db) && k_db > 0.0) {
        std::fill(ir.taps.begin(), ir.taps.end(), cplx{});
        ir.taps[0] = 1.0;
        return ir;
    }
    const double k_lin = std::pow(10.0, k_db / 10.0);
    const double diffuse = std::sqrt(1.0 / (k_lin + 1.0));
    for (cplx& t : ir.taps) t *= diffuse;
    ir.taps[0] += std::sqrt(k_lin / (k_lin + 1.0));
    return ir;
}

ComplexSignal add_awgn(const ComplexSignal& x, const AwgnSpec& spec, Rng& rng) {
    if (std::isinf(spec.snr_db) && spec.snr_db > 0.0) return x;
    const double noise_power = x.power() / std::pow(10.0, spec.snr_db / 10.0);
    std::normal_distribution<double> n(0.0, std::sqrt(noise_power / 2.0));
    std::vector<cplx> y(x.samples().begin(), x.samples().end());
    for (cplx& v : y) {
        const double re = n(rng);
        const double im = n(rng);
        v += cplx(re, im);
    }
    return ComplexSignal(std::move(y), x.sample_rate_hz());
}

ComplexSignal apply_cfo(const ComplexSignal& x, double delta_f_fraction) {
    if (!(std::abs(delta_f_fraction) < 0.5))
        throw ArgumentError("apply_cfo: |offset| must be < 0.5 of the sample rate, got " +
                            std::to_string(delta_f_fraction));
    std::vector<cplx> y(x.samples().begin(), x.samples().end());
    if (delta_f_fraction == 0.0) return ComplexSignal(std::move(y), x.sample_rate_hz());
    for (std::size_t n = 0; n < y.size(); ++n) {
        // Reduce the phase before sin/cos so long bursts keep full precision.
        const double cycles = std::fmod(delta_f_fraction * static_cast<double>(n), 1.0);
        const double ang = 2.0 * kPi * cycles;
        y[n] *= cplx(std::cos(ang), std::sin(ang));
    }
    return ComplexSignal(std::move(y), x.sample_rate_hz());
}

void CfoSpec::validate() const {
    if (!(max_offset_fraction >= 0.0 && max_offset_fraction < 0.5))
        throw ArgumentError("cfo: max_offset_fraction must lie in [0, 0.5)");
}

double draw_cfo(const CfoSpec& spec, Rng& rng) {
    spec.validate();
    if (spec.max_offset_fraction == 0.0) return 0.0;
    return uniform(rng, -spec.max_offset_fraction, spec.max_offset_fraction);
}

}  // namespace charrnet
