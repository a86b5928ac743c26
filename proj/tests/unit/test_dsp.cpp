#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "charrnet/dsp.hpp"
#include "charrnet/errors.hpp"
#include "oracles.hpp"

using namespace charrnet;

namespace {
ComplexSignal sig(std::vector<cplx> v) { return ComplexSignal(std::move(v)); }

void check_close(const std::vector<cplx>& got, const std::vector<cplx>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}
}  // namespace

TEST_CASE("ComplexSignal rejects empty, non-finite and bad sample rates") {
    CHECK_THROWS_AS(ComplexSignal({}), SizeError);
    CHECK_THROWS_AS(ComplexSignal({cplx(NAN, 0)}), ArgumentError);
    CHECK_THROWS_AS(ComplexSignal({cplx(1, 0)}, 0.0), ArgumentError);
    CHECK_THROWS_AS(ComplexSignal({cplx(1, 0)}, -5.0), ArgumentError);
}

TEST_CASE("dft fixed points") {
    check_close(dft(sig({1, 0, 0, 0})).bins, {1, 1, 1, 1}, 1e-15);
    check_close(dft(sig({1, 1, 1, 1})).bins, {4, 0, 0, 0}, 1e-15);
    check_close(idft(Spectrum{{4, 0, 0, 0}}).release(), {1, 1, 1, 1}, 1e-15);
    check_close(idft(Spectrum{{1, 1, 1, 1}}).release(), {1, 0, 0, 0}, 1e-15);
}

TEST_CASE("dft rejects non-power-of-two lengths") {
    CHECK_THROWS_AS(dft(sig({1, 2, 3})), SizeError);
    CHECK_THROWS_AS(idft(Spectrum{{1, 2, 3, 4, 5, 6}}), SizeError);
}

TEST_CASE("dft matches the direct summation oracle") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 2u, 8u, 64u, 256u}) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto x = oracle::random_complex(rng, n);
            CHECK(oracle::max_rel_error(dft(std::span<const cplx>(x)), oracle::naive_dft(x)) < 1e-10);
            CHECK(oracle::max_rel_error(idft(std::span<const cplx>(x)), oracle::naive_dft(x, true)) < 1e-10);
        }
    }
}

TEST_CASE("round trip idft(dft(x)) over 1000 signals") {
    std::mt19937_64 rng(12);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto x = oracle::random_complex(rng, 128);
        const auto y = idft(std::span<const cplx>(dft(std::span<const cplx>(x))));
        worst = std::max(worst, oracle::max_rel_error(y, x));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("Parseval up to N = 4096") {
    std::mt19937_64 rng(13);
    for (std::size_t n = 1; n <= 4096; n *= 2) {
        const auto x = oracle::random_complex(rng, n);
        const auto X = dft(std::span<const cplx>(x));
        double ex = 0.0, eX = 0.0;
        for (const auto& z : x) ex += std::norm(z);
        for (const auto& z : X) eX += std::norm(z);
        CHECK(std::abs(ex - eX / static_cast<double>(n)) <= 1e-9 * ex);
    }
}

TEST_CASE("convolution theorem on one window") {
    std::mt19937_64 rng(14);
    for (int rep = 0; rep < 50; ++rep) {
        const auto x = oracle::random_complex(rng, 64);
        auto h = oracle::random_complex(rng, 8);
        const auto y = circular_convolve(x, h);
        CHECK(oracle::max_rel_error(y, oracle::naive_circular(x, h)) < 1e-12);
        h.resize(64);
        const auto X = dft(std::span<const cplx>(x));
        const auto H = dft(std::span<const cplx>(h));
        std::vector<cplx> prod(64);
        for (std::size_t k = 0; k < 64; ++k) prod[k] = X[k] * H[k];
        CHECK(oracle::max_rel_error(dft(std::span<const cplx>(y)), prod) < 1e-9);
    }
}

TEST_CASE("bessel_i0 and kaiser_window") {
    CHECK(bessel_i0(0.0) == 1.0);
    for (double x : {0.5, 1.0, 4.3, 8.6, 20.0})
        CHECK(std::abs(bessel_i0(x) - static_cast<double>(oracle::bessel_i0(x))) <= 1e-14 * bessel_i0(x));

    CHECK(kaiser_window({4, 0.0}) == std::vector<double>{1, 1, 1, 1});
    CHECK(kaiser_window({1, 8.6}) == std::vector<double>{1});
    CHECK_THROWS_AS(kaiser_window({0, 1.0}), SizeError);

    const auto w = kaiser_window({64, 8.6});
    const auto ref = oracle::kaiser(64, 8.6);
    for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(w[i] - ref[i]) <= 1e-12);
}

TEST_CASE("kaiser window is exactly symmetric and peaks at one") {
    for (std::size_t len : {2u, 7u, 33u, 64u, 127u, 256u}) {
        for (double beta : {0.0, 2.5, 8.6, 14.0}) {
            const auto w = kaiser_window({len, beta});
            for (std::size_t i = 0; i < len; ++i) CHECK(w[i] == w[len - 1 - i]);
            const double peak = *std::max_element(w.begin(), w.end());
            CHECK(peak <= 1.0);
            if (len % 2 == 1) CHECK(w[len / 2] == 1.0);
            for (double v : w) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("stft shapes and contents") {
    SUBCASE("constant signal, rectangular window") {
        const auto s = stft(sig(std::vector<cplx>(16, 1.0)), 4, 4, 0.0);
        CHECK(s.windows() == 4);
        for (std::size_t w = 0; w < s.windows(); ++w)
            check_close({s.window(w).begin(), s.window(w).end()}, {4, 0, 0, 0}, 1e-15);
    }
    SUBCASE("window count") {
        CHECK(stft(sig(std::vector<cplx>(16, 1.0)), 8, 4, 0.0).windows() == 3);
        for (std::size_t len = 8; len < 80; ++len)
            for (std::size_t wl : {4u, 8u})
                for (std::size_t hop = 1; hop < 10; ++hop)
                    CHECK(stft(sig(std::vector<cplx>(len, 1.0)), wl, hop, 1.0).windows() == (len - wl) / hop + 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(stft(sig(std::vector<cplx>(3, 1.0)), 4, 1, 0.0), SizeError);
        CHECK_THROWS_AS(stft(sig(std::vector<cplx>(16, 1.0)), 6, 1, 0.0), SizeError);
        CHECK_THROWS_AS(stft(sig(std::vector<cplx>(16, 1.0)), 4, 0, 0.0), ArgumentError);
    }
    SUBCASE("bin-2 tone concentrates in bin 2") {
        std::vector<cplx> x(256);
        for (std::size_t n = 0; n < x.size(); ++n)
            x[n] = std::polar(1.0, 2.0 * std::numbers::pi * 2.0 * static_cast<double>(n) / 64.0);
        const auto s = stft(sig(x), 64, 32, 0.0);
        for (std::size_t w = 0; w < s.windows(); ++w) {
            double total = 0.0;
            for (const auto& z : s.window(w)) total += std::norm(z);
            CHECK(std::norm(s.at(w, 2)) > 0.99 * total);
        }
    }
    SUBCASE("window w is the dft of the tapered segment") {
        std::mt19937_64 rng(15);
        const auto x = oracle::random_complex(rng, 200);
        const auto s = stft(sig(x), 32, 24, 8.6);
        const auto win = oracle::kaiser(32, 8.6);
        for (std::size_t w = 0; w < s.windows(); ++w) {
            std::vector<cplx> seg(32);
            for (std::size_t i = 0; i < 32; ++i) seg[i] = x[w * 24 + i] * win[i];
            CHECK(oracle::max_rel_error({s.window(w).begin(), s.window(w).end()}, oracle::naive_dft(seg)) < 1e-10);
        }
    }
}

TEST_CASE("convolve") {
    std::mt19937_64 rng(16);
    const auto x = oracle::random_complex(rng, 100);
    check_close(convolve(sig(x), {{1.0}}).release(), x, 0.0);
    auto half = x;
    for (auto& z : half) z *= 0.5;
    check_close(convolve(sig(x), {{0.5}}).release(), half, 0.0);
    CHECK_THROWS_AS(convolve(sig(x), {{}}), SizeError);
    for (int rep = 0; rep < 100; ++rep) {
        const auto xi = oracle::random_complex(rng, 200);
        const auto h = oracle::random_complex(rng, 8);
        const auto y = convolve(sig(xi), {h}).release();
        const auto ref = oracle::naive_convolve_same(xi, h);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-12);
    }
}

TEST_CASE("frequency_response and apply_ideal_channel") {
    std::mt19937_64 rng(17);
    const auto x = oracle::random_complex(rng, 256);
    const auto s = stft(sig(x), 64, 64, 8.6);

    const auto same = apply_ideal_channel(s, Spectrum{std::vector<cplx>(64, 1.0)});
    CHECK(std::equal(same.data().begin(), same.data().end(), s.data().begin()));

    const auto flat = frequency_response({{1.0}}, 64);
    const auto kept = apply_ideal_channel(s, flat);
    CHECK(std::equal(kept.data().begin(), kept.data().end(), s.data().begin()));

    CHECK_THROWS_AS(apply_ideal_channel(s, Spectrum{std::vector<cplx>(32, 1.0)}), SizeError);

    // Single window: the product equals the dft of the circular convolution.
    const auto h = oracle::random_complex(rng, 8);
    std::vector<cplx> seg(x.begin(), x.begin() + 64);
    const auto one = stft(sig(seg), 64, 64, 0.0);
    const auto prod = apply_ideal_channel(one, frequency_response({h}, 64));
    const auto ref = oracle::naive_dft(oracle::naive_circular(seg, h));
    CHECK(oracle::max_rel_error({prod.window(0).begin(), prod.window(0).end()}, ref) < 1e-10);

    auto padded = h;
    padded.resize(64);
    CHECK(oracle::max_rel_error(frequency_response({h}, 64).bins, oracle::naive_dft(padded)) < 1e-12);
}
