#include <doctest.h>

#include <cmath>
#include <numbers>

#include "charrnet/fingerprint.hpp"
#include "oracles.hpp"

using namespace charrnet;

namespace {
std::vector<oracle::Section> sections_of(const DeviceFingerprint& fp) {
    std::vector<oracle::Section> out;
    for (const Biquad& b : fp.sections) out.push_back({b.b0, b.b1, b.b2, b.a1, b.a2});
    return out;
}
}  // namespace

TEST_CASE("nominal cascade is a stable unit-DC-gain low-pass") {
    const auto nom = nominal_cascade(0.4, 2);
    REQUIRE(nom.size() == 2);
    for (const Biquad& b : nom) {
        CHECK(std::abs(b.response(0.0) - cplx(1.0, 0.0)) < 1e-14);
        CHECK(b.max_pole_radius() < 1.0);
    }
    // Reference pole locations of a 4th-order Butterworth at 0.4 of Nyquist.
    CHECK(std::abs(nom[0].pole()) == doctest::Approx(0.68288035).epsilon(1e-7));
    CHECK(std::arg(nom[0].pole()) == doctest::Approx(1.23261625).epsilon(1e-7));
    CHECK(std::abs(nom[1].pole()) == doctest::Approx(0.25414101).epsilon(1e-7));
    CHECK(std::arg(nom[1].pole()) == doctest::Approx(0.86685051).epsilon(1e-7));
    DeviceFingerprint fp{0, nom};
    // -3 dB at the cutoff.
    CHECK(std::abs(fp.response(0.4 * std::numbers::pi)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
}

TEST_CASE("population contracts") {
    PopulationSpec spec;
    spec.pole_jitter_ppm = 0.0;
    const auto same = make_population(spec, 5);
    for (const auto& fp : same) CHECK(fp.sections == nominal_cascade(0.4, 2));

    spec.pole_jitter_ppm = 5000.0;
    spec.n_devices = 65;
    const auto a = make_population(spec, 42);
    const auto b = make_population(spec, 42);
    REQUIRE(a.size() == 65);
    for (std::size_t d = 0; d < a.size(); ++d) {
        CHECK(a[d].sections == b[d].sections);
        CHECK(a[d].device_id == d);
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            double dist = 0.0;
            for (std::size_t s = 0; s < 2; ++s)
                dist += std::abs(a[i].sections[s].a1 - a[j].sections[s].a1) + std::abs(a[i].sections[s].a2 - a[j].sections[s].a2);
            CHECK(dist > 0.0);
        }
    CHECK_THROWS(make_population({0, 5000.0, 0.4, 2}, 1));
}

TEST_CASE("perturbed poles stay within the jitter and the response stays close") {
    PopulationSpec spec;
    spec.n_devices = 50;
    const auto pop = make_population(spec, 7);
    const auto nom = nominal_cascade(0.4, 2);
    const DeviceFingerprint ref{0, nom};
    for (const auto& fp : pop) {
        for (std::size_t s = 0; s < 2; ++s) {
            const auto p = fp.sections[s].pole(), q = nom[s].pole();
            CHECK(std::abs(std::abs(p) / std::abs(q) - 1.0) <= 5e-3 + 1e-12);
            CHECK(std::abs(std::arg(p) / std::arg(q) - 1.0) <= 5e-3 + 1e-12);
            CHECK(fp.sections[s].b0 == nom[s].b0);
            CHECK(fp.sections[s].max_pole_radius() <= kMaxPoleRadius);
        }
        for (int k = 0; k <= 512; ++k) {
            const double w = std::numbers::pi * k / 512.0;
            const double m0 = std::abs(ref.response(w));
            if (m0 < 1e-3) continue;
            CHECK(std::abs(std::abs(fp.response(w)) - m0) / m0 < 0.05);
        }
    }
}

TEST_CASE("huge jitter clamps pole radii") {
    PopulationSpec spec;
    spec.n_devices = 200;
    spec.pole_jitter_ppm = 600000.0;
    for (const auto& fp : make_population(spec, 3))
        for (const auto& s : fp.sections) CHECK(s.max_pole_radius() <= kMaxPoleRadius + 1e-12);
}

TEST_CASE("ofdm burst") {
    Rng rng(1);
    BurstSpec spec;
    CHECK(spec.length() == 800);
    const OfdmBurst b = generate_ofdm_burst(spec, rng);
    CHECK(b.signal.size() == 800);
    CHECK(std::abs(b.signal.power() - 1.0) < 1e-12);

    // Strip CP, transform, undo scaling: QPSK symbols come back.
    const auto bins = active_bins(spec);
    CHECK(bins.size() == 52);
    for (std::size_t s = 0; s < spec.n_symbols; ++s) {
        std::vector<cplx> body(b.signal.samples().begin() + static_cast<std::ptrdiff_t>(s * 80 + 16),
                               b.signal.samples().begin() + static_cast<std::ptrdiff_t>(s * 80 + 80));
        const auto X = oracle::naive_dft(body);
        for (std::size_t i = 0; i < bins.size(); ++i) {
            const cplx want = b.symbols[s * 52 + i];
            CHECK(std::abs(X[bins[i]] / b.scale - want) < 1e-12);
            CHECK(std::abs(std::abs(want.real()) - std::sqrt(0.5)) < 1e-15);
        }
        CHECK(std::abs(X[0]) < 1e-10);
        // Cyclic prefix repeats the tail of the symbol.
        for (std::size_t i = 0; i < 16; ++i) CHECK(b.signal[s * 80 + i] == b.signal[s * 80 + 64 + i]);
    }
}

TEST_CASE("apply_fingerprint") {
    Rng rng(2);
    std::mt19937_64 src(3);
    const ComplexSignal x(oracle::random_complex(src, 300));
    const DeviceFingerprint id{0, {Biquad::identity()}};
    const auto y = apply_fingerprint(x, id);
    CHECK(std::equal(y.samples().begin(), y.samples().end(), x.samples().begin()));
    const auto zero = apply_fingerprint(ComplexSignal(std::vector<cplx>(50)), make_population({}, 1)[0]);
    for (const auto& z : zero.samples()) CHECK(z == cplx{});

    const auto pop = make_population({20, 5000.0, 0.4, 2}, 4);
    for (int rep = 0; rep < 100; ++rep) {
        const auto sig = oracle::random_complex(src, 256);
        const auto& fp = pop[rep % pop.size()];
        const auto got = apply_fingerprint(ComplexSignal(sig), fp).release();
        const auto ref = oracle::iir_cascade(sig, sections_of(fp));
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - ref[i]) <= 1e-12);
    }

    // Linearity.
    const auto u = oracle::random_complex(src, 200), v = oracle::random_complex(src, 200);
    const cplx a(0.3, -2.0), b(1.5, 0.25);
    std::vector<cplx> mix(200);
    for (std::size_t i = 0; i < 200; ++i) mix[i] = a * u[i] + b * v[i];
    const auto fu = apply_fingerprint(ComplexSignal(u), pop[0]).release();
    const auto fv = apply_fingerprint(ComplexSignal(v), pop[0]).release();
    const auto fm = apply_fingerprint(ComplexSignal(mix), pop[0]).release();
    for (std::size_t i = 0; i < 200; ++i) CHECK(std::abs(fm[i] - (a * fu[i] + b * fv[i])) <= 1e-12);
}
