#include "charrnet/dsp.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "charrnet/errors.hpp"

namespace charrnet {

ComplexSignal::ComplexSignal(std::vector<cplx> samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (samples_.empty()) throw SizeError("ComplexSignal: no samples");
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
        throw ArgumentError("ComplexSignal: sample rate must be positive and finite");
    for (const cplx& z : samples_) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw ArgumentError("ComplexSignal: non-finite sample");
    }
}

double ComplexSignal::power() const noexcept {
    double acc = 0.0;
    for (const cplx& z : samples_) acc += std::norm(z);
    return acc / static_cast<double>(samples_.size());
}

double ImpulseResponse::power() const noexcept {
    double acc = 0.0;
    for (const cplx& z : taps) acc += std::norm(z);
    return acc;
}

Spectrogram::Spectrogram(std::size_t windows, std::size_t window_len, std::size_t hop, double kaiser_beta)
    : windows_(windows), window_len_(window_len), hop_(hop), beta_(kaiser_beta), data_(windows * window_len) {}

void fft_inplace(std::span<cplx> data, bool inverse) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n))
        throw SizeError("fft: length " + std::to_string(n) + " is not a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> twiddle;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        twiddle.resize(half);
        // Each twiddle evaluated directly; recurrences drift past 1e-12 at N=4096.
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            twiddle[k] = cplx(std::cos(ang), std::sin(ang));
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = data[i + k];
                const cplx v = data[i + k + half] * twiddle[k];
                data[i + k] = u + v;
                data[i + k + half] = u - v;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (cplx& z : data) z *= scale;
    }
}

std::vector<cplx> dft(std::span<const cplx> x) {
    std::vector<cplx> out(x.begin(), x.end());
    fft_inplace(out, false);
    return out;
}

Spectrum dft(const ComplexSignal& signal) { return Spectrum{dft(signal.samples())}; }

std::vector<cplx> idft(std::span<const cplx> X) {
    std::vector<cplx> out(X.begin(), X.end());
    fft_inplace(out, true);
    return out;
}

ComplexSignal idft(const Spectrum& spectrum, double sample_rate_hz) {
    return ComplexSignal(idft(spectrum.bins), sample_rate_hz);
}

double bessel_i0(double x) {
    // sum_k ((x/2)^k / k!)^2
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

std::vector<double> kaiser_window(const KaiserSpec& spec) {
    if (spec.length == 0) throw SizeError("kaiser_window: length must be >= 1");
    if (spec.beta < 0.0) throw ArgumentError("kaiser_window: beta must be nonnegative");
    const std::size_t len = spec.length;
    std::vector<double> w(len, 1.0);
    if (len == 1) return w;
    const double denom = bessel_i0(spec.beta);
    const double m = static_cast<double>(len - 1);
    for (std::size_t i = 0; i <= (len - 1) / 2; ++i) {
        const double t = (2.0 * static_cast<double>(i) - m) / m;
        const double v = bessel_i0(spec.beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / denom;
        w[i] = v;
        w[len - 1 - i] = v;
    }
    return w;
}

Spectrogram stft(const ComplexSignal& signal, std::size_t window_len, std::size_t hop, double beta) {
    if (!is_power_of_two(window_len))
        throw SizeError("stft: window_len " + std::to_string(window_len) + " is not a power of two");
    if (hop == 0) throw ArgumentError("stft: hop must be >= 1");
    if (signal.size() < window_len)
        throw SizeError("stft: signal of " + std::to_string(signal.size()) + " samples is shorter than window_len " +
                        std::to_string(window_len));

    const std::size_t count = stft_window_count(signal.size(), window_len, hop);
    const std::vector<double> win = kaiser_window({window_len, beta});
    Spectrogram out(count, window_len, hop, beta);
    const auto x = signal.samples();
    for (std::size_t w = 0; w < count; ++w) {
        auto frame = out.window(w);
        for (std::size_t i = 0; i < window_len; ++i) frame[i] = x[w * hop + i] * win[i];
        fft_inplace(frame, false);
    }
    return out;
}

ComplexSignal convolve(const ComplexSignal& signal, const ImpulseResponse& ir) {
    if (ir.taps.empty()) throw SizeError("convolve: impulse response has no taps");
    const auto x = signal.samples();
    const std::size_t n = x.size();
    std::vector<cplx> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        cplx acc{};
        const std::size_t kmax = std::min(ir.taps.size() - 1, t);
        for (std::size_t k = 0; k <= kmax; ++k) acc += ir.taps[k] * x[t - k];
        y[t] = acc;
    }
    return ComplexSignal(std::move(y), signal.sample_rate_hz());
}

std::vector<cplx> circular_convolve(std::span<const cplx> x, std::span<const cplx> h) {
    const std::size_t n = x.size();
    std::vector<cplx> hw(n);
    for (std::size_t k = 0; k < h.size(); ++k) hw[k % n] += h[k];
    std::vector<cplx> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        cplx acc{};
        for (std::size_t k = 0; k < n; ++k) acc += hw[k] * x[(t + n - k) % n];
        y[t] = acc;
    }
    return y;
}

Spectrum frequency_response(const ImpulseResponse& ir, std::size_t n_bins) {
    Spectrum out{std::vector<cplx>(n_bins)};
    for (std::size_t k = 0; k < n_bins; ++k) {
        cplx acc{};
        for (std::size_t t = 0; t < ir.taps.size(); ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n_bins) /
                               static_cast<double>(n_bins);
            acc += ir.taps[t] * cplx(std::cos(ang), std::sin(ang));
        }
        out.bins[k] = acc;
    }
    return out;
}

Spectrogram apply_ideal_channel(const Spectrogram& spec, const Spectrum& freq_response) {
    if (freq_response.size() != spec.window_len())
        throw SizeError("apply_ideal_channel: response has " + std::to_string(freq_response.size()) +
                        " bins, window_len is " + std::to_string(spec.window_len()));
    Spectrogram out = spec;
    for (std::size_t w = 0; w < out.windows(); ++w) {
        auto frame = out.window(w);
        for (std::size_t n = 0; n < frame.size(); ++n) frame[n] *= freq_response.bins[n];
    }
    return out;
}

}  // namespace charrnet
