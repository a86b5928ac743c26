#include <doctest.h>

#include <cmath>
#include <numbers>

#include "charrnet/channel.hpp"
#include "charrnet/errors.hpp"
#include "oracles.hpp"

using namespace charrnet;

TEST_CASE("geometry channel contracts") {
    Rng rng(1);
    GeometrySpec los;
    los.n_reflectors = 0;
    los.line_of_sight = true;
    const ImpulseResponse h = sample_geometry_channel(los, rng);
    REQUIRE(h.taps.size() == 1);
    CHECK(h.taps[0] == cplx(1.0, 0.0));

    GeometrySpec empty = los;
    empty.line_of_sight = false;
    CHECK_THROWS_AS(sample_geometry_channel(empty, rng), ArgumentError);

    GeometrySpec bad;
    bad.attn_db_range = {-5.0, -15.0};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad.attn_db_range = {-5.0, 3.0};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = {};
    bad.max_delay_samples = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("reflector amplitudes stay inside the dB range") {
    Rng rng(2);
    GeometrySpec spec;
    spec.n_reflectors = 1;
    spec.line_of_sight = false;
    const double lo = std::pow(10.0, -15.0 / 20.0), hi = std::pow(10.0, -5.0 / 20.0);
    for (int i = 0; i < 100000; ++i) {
        const ImpulseResponse h = sample_geometry_channel(spec, rng);
        std::size_t nonzero = 0;
        for (std::size_t k = 0; k < h.taps.size(); ++k) {
            if (h.taps[k] == cplx{}) continue;
            ++nonzero;
            CHECK(k >= 1);
            CHECK(std::abs(h.taps[k]) >= lo * (1 - 1e-12));
            CHECK(std::abs(h.taps[k]) <= hi * (1 + 1e-12));
        }
        CHECK(nonzero == 1);
        CHECK(h.taps.size() <= spec.max_delay_samples + 1);
    }
}

TEST_CASE("geometry realizations share nominal delays and jitter within half a sample") {
    Rng rng(3);
    GeometrySpec spec;
    spec.n_reflectors = 20;
    spec.line_of_sight = true;
    const ReflectorGeometry g = draw_geometry(spec, rng);
    REQUIRE(g.nominal_delays.size() == 20);
    for (double d : g.nominal_delays) {
        CHECK(d >= 1.0);
        CHECK(d <= 16.0);
    }
    for (int rep = 0; rep < 200; ++rep) {
        const ImpulseResponse h = realize(g, rng);
        CHECK(h.taps[0] == cplx(1.0, 0.0));
        for (std::size_t k = 1; k < h.taps.size(); ++k) {
            if (h.taps[k] == cplx{}) continue;
            bool near = false;
            for (double d : g.nominal_delays) near |= std::abs(static_cast<double>(k) - d) <= 0.75 + 1e-12;
            CHECK(near);
        }
    }
}

TEST_CASE("fading channels") {
    SUBCASE("single Rayleigh tap has unit power") {
        Rng rng(4);
        FadingSpec spec{FadingModel::rayleigh, 1, 0.5, {}};
        double acc = 0.0;
        for (int i = 0; i < 100000; ++i) acc += sample_fading_channel(spec, rng).power();
        CHECK(std::abs(acc / 100000 - 1.0) < 0.02);
    }
    SUBCASE("tap power profile follows exp(-decay k)") {
        Rng rng(5);
        FadingSpec spec{FadingModel::rayleigh, 8, 0.5, {}};
        const auto pdp = power_delay_profile(8, 0.5);
        std::vector<double> acc(8, 0.0);
        double total = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto h = sample_fading_channel(spec, rng);
            for (std::size_t k = 0; k < 8; ++k) acc[k] += std::norm(h.taps[k]);
            total += h.power();
        }
        for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(acc[k] / n / pdp[k] - 1.0) < 0.03);
        CHECK(std::abs(total / n - 1.0) < 0.02);
    }
    SUBCASE("Ricean has unit mean power and a deterministic limit") {
        Rng rng(6);
        FadingSpec spec{FadingModel::ricean, 8, 0.5, {}};
        double total = 0.0;
        for (int i = 0; i < 100000; ++i) total += sample_fading_channel(spec, rng).power();
        CHECK(std::abs(total / 100000 - 1.0) < 0.02);
        spec.k_factor_db = std::numeric_limits<double>::infinity();
        const auto h = sample_fading_channel(spec, rng);
        CHECK(h.taps[0] == cplx(1.0, 0.0));
        for (std::size_t k = 1; k < h.taps.size(); ++k) CHECK(h.taps[k] == cplx{});
    }
    SUBCASE("validation") {
        Rng rng(7);
        CHECK_THROWS_AS(sample_fading_channel({FadingModel::rayleigh, 0, 0.5, {}}, rng), ArgumentError);
        CHECK_THROWS_AS(sample_fading_channel({FadingModel::rayleigh, 4, 0.0, {}}, rng), ArgumentError);
    }
}

TEST_CASE("samplers are deterministic under a fixed seed") {
    GeometrySpec g;
    g.n_reflectors = 30;
    FadingSpec f{FadingModel::ricean, 8, 0.5, {}};
    Rng a(99), b(99);
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_geometry_channel(g, a).taps == sample_geometry_channel(g, b).taps);
        CHECK(sample_fading_channel(f, a).taps == sample_fading_channel(f, b).taps);
    }
}

TEST_CASE("awgn") {
    Rng rng(8);
    std::mt19937_64 src(9);
    const ComplexSignal x(oracle::random_complex(src, 1000, std::sqrt(0.5)));
    const ComplexSignal same = add_awgn(x, {std::numeric_limits<double>::infinity()}, rng);
    CHECK(std::equal(same.samples().begin(), same.samples().end(), x.samples().begin()));

    // Unit-power constant signal at 0 dB: noise power 1.
    const std::size_t n = 1000000;
    const ComplexSignal ones(std::vector<cplx>(n, cplx(1.0, 0.0)));
    const ComplexSignal y = add_awgn(ones, {0.0}, rng);
    double p = 0.0, rr = 0.0, ii = 0.0, ri = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx e = y[i] - ones[i];
        p += std::norm(e);
        rr += e.real() * e.real();
        ii += e.imag() * e.imag();
        ri += e.real() * e.imag();
    }
    CHECK(std::abs(p / n - 1.0) < 0.02);
    CHECK(std::abs(ri / std::sqrt(rr * ii)) < 0.01);

    // Power changes by the predicted factor.
    const ComplexSignal z = add_awgn(x, {10.0}, rng);
    CHECK(std::abs(z.power() / x.power() - 1.1) < 0.022 * 1.1 * 5);
}

TEST_CASE("cfo") {
    std::mt19937_64 src(10);
    const ComplexSignal x(oracle::random_complex(src, 256));
    const ComplexSignal same = apply_cfo(x, 0.0);
    CHECK(std::equal(same.samples().begin(), same.samples().end(), x.samples().begin()));
    CHECK_THROWS_AS(apply_cfo(x, 0.5), ArgumentError);
    CHECK_THROWS_AS(apply_cfo(x, -0.7), ArgumentError);

    const ComplexSignal y = apply_cfo(x, 0.123);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i]) == doctest::Approx(std::abs(x[i])).epsilon(1e-15));
    CHECK(y.power() == doctest::Approx(x.power()).epsilon(1e-14));

    // Tone at bin 5 shifted by 1/N lands in bin 6.
    const std::size_t n = 64;
    std::vector<cplx> tone(n);
    for (std::size_t i = 0; i < n; ++i) tone[i] = std::polar(1.0, 2.0 * std::numbers::pi * 5.0 * static_cast<double>(i) / n);
    const auto spec = oracle::naive_dft(apply_cfo(ComplexSignal(tone), 1.0 / n).release());
    std::size_t peak = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
    CHECK(peak == 6);

    Rng rng(11);
    CfoSpec cs;
    for (int i = 0; i < 1000; ++i) CHECK(std::abs(draw_cfo(cs, rng)) <= cs.max_offset_fraction);
    cs.max_offset_fraction = 0.5;
    CHECK_THROWS_AS(cs.validate(), ArgumentError);
}
