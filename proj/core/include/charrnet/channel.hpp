#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "charrnet/dsp.hpp"
#include "charrnet/rng.hpp"

namespace charrnet {

struct GeometrySpec {
    std::size_t n_reflectors = 0;
    bool line_of_sight = true;
    std::size_t max_delay_samples = 16;
    std::array<double, 2> attn_db_range{-15.0, -5.0};
    double position_jitter = 0.25;  // samples

    void validate() const;  // ArgumentError
};

/// Nominal reflector layout, drawn once per geometry. Each burst then sees a
/// realization with jittered delays and fresh amplitudes and phases.
struct ReflectorGeometry {
    GeometrySpec spec;
    std::vector<double> nominal_delays;  // continuous, in [1, max_delay_samples]
};

ReflectorGeometry draw_geometry(const GeometrySpec& spec, Rng& rng);
ImpulseResponse realize(const ReflectorGeometry& geometry, Rng& rng);
// draw_geometry followed by realize. A geometry with no reflectors and no LOS
// path is rejected with ArgumentError.
ImpulseResponse sample_geometry_channel(const GeometrySpec& spec, Rng& rng);

enum class FadingModel { rayleigh, ricean };

struct FadingSpec {
    FadingModel model = FadingModel::rayleigh;
    std::size_t n_taps = 8;
    double decay = 0.5;
    // Ricean only. Unset: drawn per realization from U[3, 10] dB. +inf is allowed.
    std::optional<double> k_factor_db;

    void validate() const;
};

// Normalized exponential power-delay profile exp(-decay k) / Z.
std::vector<double> power_delay_profile(std::size_t n_taps, double decay);

ImpulseResponse sample_fading_channel(const FadingSpec& spec, Rng& rng);

struct AwgnSpec {
    double snr_db = 20.0;  // +inf disables noise
};

// Noise variance is set from the measured signal power.
ComplexSignal add_awgn(const ComplexSignal& x, const AwgnSpec& spec, Rng& rng);

// Multiplies sample n by exp(i 2 pi delta n). ArgumentError unless |delta| < 0.5.
ComplexSignal apply_cfo(const ComplexSignal& x, double delta_f_fraction);

struct CfoSpec {
    double max_offset_fraction = 1e-4;
    void validate() const;
};

double draw_cfo(const CfoSpec& spec, Rng& rng);

}  // namespace charrnet
