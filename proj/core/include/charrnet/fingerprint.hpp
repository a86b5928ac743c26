#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "charrnet/dsp.hpp"
#include "charrnet/rng.hpp"

namespace charrnet {

/// Second-order section H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    static Biquad identity() noexcept { return {}; }
    // Poles p, conj(p) with the given numerator.
    static Biquad from_pole(std::complex<double> pole, double b0, double b1, double b2) noexcept;
    // One pole of the conjugate pair (upper half plane for complex pairs).
    std::complex<double> pole() const noexcept;
    double max_pole_radius() const noexcept;
    std::complex<double> response(double omega) const noexcept;

    bool operator==(const Biquad&) const = default;
};

struct DeviceFingerprint {
    std::size_t device_id = 0;
    std::vector<Biquad> sections;

    std::complex<double> response(double omega) const noexcept;
};

struct PopulationSpec {
    std::size_t n_devices = 10;
    double pole_jitter_ppm = 5000.0;
    double cutoff = 0.4;  // fraction of Nyquist
    std::size_t sections = 2;
};

// Butterworth low-pass of order 2 * sections via the bilinear transform, split
// into sections with unit DC gain each.
std::vector<Biquad> nominal_cascade(double cutoff, std::size_t sections = 2);

// Each device perturbs every pole radius and angle of the nominal cascade by an
// independent U[-jitter, +jitter] relative deviation, numerators unchanged.
// Radii above kMaxPoleRadius are clamped (with a warning on stderr).
std::vector<DeviceFingerprint> make_population(const PopulationSpec& spec, std::uint64_t seed);

inline constexpr double kMaxPoleRadius = 0.99;

struct BurstSpec {
    std::size_t n_subcarriers = 64;
    std::size_t cp_len = 16;
    std::size_t n_symbols = 10;
    std::size_t active_subcarriers = 52;

    std::size_t length() const noexcept { return n_symbols * (n_subcarriers + cp_len); }
    void validate() const;
};

// Active bins: active/2 on each side of DC, DC itself left empty.
std::vector<std::size_t> active_bins(const BurstSpec& spec);

struct OfdmBurst {
    ComplexSignal signal;
    std::vector<cplx> symbols;  // n_symbols x active, in active_bins() order
    double scale = 1.0;         // amplitude applied to reach unit average power
};

// Random QPSK on the active subcarriers, inverse transform per symbol, cyclic
// prefix, concatenated and scaled to unit average power.
OfdmBurst generate_ofdm_burst(const BurstSpec& spec, Rng& rng);
ComplexSignal generate_burst(const BurstSpec& spec, Rng& rng);

// Cascaded direct-form-II-transposed filtering (real coefficients, so I and Q
// are filtered identically).
ComplexSignal apply_fingerprint(const ComplexSignal& burst, const DeviceFingerprint& fp);

}  // namespace charrnet
