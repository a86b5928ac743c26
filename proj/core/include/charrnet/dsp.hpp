#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace charrnet {

using cplx = std::complex<double>;

/// Finite complex baseband sequence with its sample rate.
///
/// Invariants: at least one sample, every sample finite, sample rate > 0.
/// The constructor enforces them (SizeError / ArgumentError).
class ComplexSignal {
public:
    explicit ComplexSignal(std::vector<cplx> samples, double sample_rate_hz = 1.0);

    std::span<const cplx> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double sample_rate_hz() const noexcept { return sample_rate_hz_; }
    const cplx& operator[](std::size_t i) const noexcept { return samples_[i]; }

    // Mean |x|^2.
    double power() const noexcept;

    std::vector<cplx> release() && { return std::move(samples_); }

private:
    std::vector<cplx> samples_;
    double sample_rate_hz_;
};

struct Spectrum {
    std::vector<cplx> bins;
    std::size_t size() const noexcept { return bins.size(); }
};

/// Finite complex FIR tap vector (a channel realization h_c).
struct ImpulseResponse {
    std::vector<cplx> taps;
    double power() const noexcept;
};

struct KaiserSpec {
    std::size_t length = 64;
    double beta = 8.6;
};

struct StftParams {
    std::size_t window_len = 64;
    std::size_t hop = 64;
    double beta = 8.6;
};

/// windows x bins grid of STFT coefficients, row-major by window.
class Spectrogram {
public:
    Spectrogram(std::size_t windows, std::size_t window_len, std::size_t hop, double kaiser_beta);

    std::size_t windows() const noexcept { return windows_; }
    std::size_t window_len() const noexcept { return window_len_; }
    std::size_t hop() const noexcept { return hop_; }
    double kaiser_beta() const noexcept { return beta_; }

    cplx& at(std::size_t w, std::size_t n) noexcept { return data_[w * window_len_ + n]; }
    const cplx& at(std::size_t w, std::size_t n) const noexcept { return data_[w * window_len_ + n]; }
    std::span<cplx> window(std::size_t w) noexcept { return {data_.data() + w * window_len_, window_len_}; }
    std::span<const cplx> window(std::size_t w) const noexcept {
        return {data_.data() + w * window_len_, window_len_};
    }
    std::span<const cplx> data() const noexcept { return data_; }

private:
    std::size_t windows_;
    std::size_t window_len_;
    std::size_t hop_;
    double beta_;
    std::vector<cplx> data_;
};

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform. Forward uses exp(-i...), unnormalized;
// inverse uses exp(+i...) and scales by 1/N. Throws SizeError unless the
// length is a power of two.
void fft_inplace(std::span<cplx> data, bool inverse = false);

Spectrum dft(const ComplexSignal& signal);
std::vector<cplx> dft(std::span<const cplx> x);
ComplexSignal idft(const Spectrum& spectrum, double sample_rate_hz = 1.0);
std::vector<cplx> idft(std::span<const cplx> X);

// Zeroth-order modified Bessel function of the first kind, by power series.
double bessel_i0(double x);

std::vector<double> kaiser_window(const KaiserSpec& spec);

// Window count for a signal of `signal_len` samples; 0 when it is shorter than one window.
constexpr std::size_t stft_window_count(std::size_t signal_len, std::size_t window_len, std::size_t hop) noexcept {
    return signal_len < window_len ? 0 : (signal_len - window_len) / hop + 1;
}

Spectrogram stft(const ComplexSignal& signal, std::size_t window_len, std::size_t hop, double beta);
inline Spectrogram stft(const ComplexSignal& signal, const StftParams& p) {
    return stft(signal, p.window_len, p.hop, p.beta);
}

// Linear convolution truncated to the input length, aligned to tap 0.
ComplexSignal convolve(const ComplexSignal& signal, const ImpulseResponse& ir);

// Length-N circular convolution; h is zero-padded (or wrapped) onto N points.
std::vector<cplx> circular_convolve(std::span<const cplx> x, std::span<const cplx> h);

// Frequency response of `ir` sampled on `n_bins` DFT bins.
Spectrum frequency_response(const ImpulseResponse& ir, std::size_t n_bins);

// Multiplies every window elementwise by `freq_response`.
Spectrogram apply_ideal_channel(const Spectrogram& spec, const Spectrum& freq_response);

}  // namespace charrnet
