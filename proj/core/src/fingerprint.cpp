#include "charrnet/fingerprint.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "charrnet/errors.hpp"

namespace charrnet {

Biquad Biquad::from_pole(std::complex<double> pole, double b0, double b1, double b2) noexcept {
    return {b0, b1, b2, -2.0 * pole.real(), std::norm(pole)};
}

std::complex<double> Biquad::pole() const noexcept {
    const double disc = a1 * a1 - 4.0 * a2;
    if (disc < 0.0) return {-a1 / 2.0, std::sqrt(-disc) / 2.0};
    const double s = std::sqrt(disc);
    const double r1 = (-a1 + s) / 2.0;
    const double r2 = (-a1 - s) / 2.0;
    return std::abs(r1) >= std::abs(r2) ? r1 : r2;
}

double Biquad::max_pole_radius() const noexcept { return std::abs(pole()); }

std::complex<double> Biquad::response(double omega) const noexcept {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

std::complex<double> DeviceFingerprint::response(double omega) const noexcept {
    std::complex<double> h = 1.0;
    for (const Biquad& s : sections) h *= s.response(omega);
    return h;
}

std::vector<Biquad> nominal_cascade(double cutoff, std::size_t sections) {
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ArgumentError("nominal_cascade: cutoff must lie in (0, 1)");
    if (sections == 0) throw ArgumentError("nominal_cascade: at least one section");
    const std::size_t order = 2 * sections;
    const double warped = 2.0 * std::tan(std::numbers::pi * cutoff / 2.0);
    std::vector<Biquad> out;
    for (std::size_t k = 1; k <= sections; ++k) {
        const double ang = std::numbers::pi * static_cast<double>(2 * k + order - 1) / static_cast<double>(2 * order);
        const std::complex<double> s = warped * std::polar(1.0, ang);
        const std::complex<double> z = (2.0 + s) / (2.0 - s);
        Biquad b = Biquad::from_pole(z, 1.0, 2.0, 1.0);
        const double g = (1.0 + b.a1 + b.a2) / 4.0;
        b.b0 = g;
        b.b1 = 2.0 * g;
        b.b2 = g;
        out.push_back(b);
    }
    return out;
}

std::vector<DeviceFingerprint> make_population(const PopulationSpec& spec, std::uint64_t seed) {
    if (spec.n_devices < 1) throw ArgumentError("make_population: n_devices must be >= 1");
    if (spec.pole_jitter_ppm < 0.0) throw ArgumentError("make_population: jitter must be >= 0");
    const std::vector<Biquad> nominal = nominal_cascade(spec.cutoff, spec.sections);
    const double jitter = spec.pole_jitter_ppm * 1e-6;

    std::vector<DeviceFingerprint> out;
    out.reserve(spec.n_devices);
    for (std::size_t d = 0; d < spec.n_devices; ++d) {
        DeviceFingerprint fp{d, {}};
        if (jitter == 0.0) {
            fp.sections = nominal;
            out.push_back(std::move(fp));
            continue;
        }
        Rng rng = make_rng(seed, {d});
        for (const Biquad& nom : nominal) {
            const std::complex<double> p = nom.pole();
            double radius = std::abs(p) * (1.0 + uniform(rng, -jitter, jitter));
            const double angle = std::arg(p) * (1.0 + uniform(rng, -jitter, jitter));
            if (radius > kMaxPoleRadius) {
                std::cerr << "warning: device " << d << " pole radius " << radius << " clamped to " << kMaxPoleRadius
                          << '\n';
                radius = kMaxPoleRadius;
            }
            fp.sections.push_back(Biquad::from_pole(std::polar(radius, angle), nom.b0, nom.b1, nom.b2));
        }
        out.push_back(std::move(fp));
    }
    return out;
}

void BurstSpec::validate() const {
    if (!is_power_of_two(n_subcarriers)) throw ArgumentError("burst: n_subcarriers must be a power of two");
    if (cp_len > n_subcarriers) throw ArgumentError("burst: cp_len exceeds n_subcarriers");
    if (n_symbols < 1) throw ArgumentError("burst: n_symbols must be >= 1");
    if (active_subcarriers < 2 || active_subcarriers % 2 != 0 || active_subcarriers >= n_subcarriers)
        throw ArgumentError("burst: active_subcarriers must be even and below n_subcarriers");
}

std::vector<std::size_t> active_bins(const BurstSpec& spec) {
    const std::size_t half = spec.active_subcarriers / 2;
    std::vector<std::size_t> bins;
    bins.reserve(spec.active_subcarriers);
    for (std::size_t k = spec.n_subcarriers - half; k < spec.n_subcarriers; ++k) bins.push_back(k);
    for (std::size_t k = 1; k <= half; ++k) bins.push_back(k);
    return bins;
}

OfdmBurst generate_ofdm_burst(const BurstSpec& spec, Rng& rng) {
    spec.validate();
    const std::vector<std::size_t> bins = active_bins(spec);
    const double amp = 1.0 / std::numbers::sqrt2;
    const std::size_t n = spec.n_subcarriers;

    std::vector<cplx> symbols;
    symbols.reserve(spec.n_symbols * bins.size());
    std::vector<cplx> samples;
    samples.reserve(spec.length());
    std::vector<cplx> grid(n);
    for (std::size_t s = 0; s < spec.n_symbols; ++s) {
        std::fill(grid.begin(), grid.end(), cplx{});
        for (std::size_t bin : bins) {
            const auto bits = rng();
            const cplx q((bits & 1U) ? amp : -amp, (bits & 2U) ? amp : -amp);
            grid[bin] = q;
            symbols.push_back(q);
        }
        fft_inplace(grid, true);
        samples.insert(samples.end(), grid.end() - static_cast<std::ptrdiff_t>(spec.cp_len), grid.end());
        samples.insert(samples.end(), grid.begin(), grid.end());
    }

    double power = 0.0;
    for (const cplx& z : samples) power += std::norm(z);
    power /= static_cast<double>(samples.size());
    const double scale = 1.0 / std::sqrt(power);
    for (cplx& z : samples) z *= scale;
    return {ComplexSignal(std::move(samples)), std::move(symbols), scale};
}

ComplexSignal generate_burst(const BurstSpec& spec, Rng& rng) { return generate_ofdm_burst(spec, rng).signal; }

ComplexSignal apply_fingerprint(const ComplexSignal& burst, const DeviceFingerprint& fp) {
    std::vector<cplx> y(burst.samples().begin(), burst.samples().end());
    for (const Biquad& s : fp.sections) {
        cplx s1{}, s2{};
        for (cplx& v : y) {
            const cplx x = v;
            const cplx out = s.b0 * x + s1;
            s1 = s.b1 * x - s.a1 * out + s2;
            s2 = s.b2 * x - s.a2 * out;
            v = out;
        }
    }
    return ComplexSignal(std::move(y), burst.sample_rate_hz());
}

}  // namespace charrnet
