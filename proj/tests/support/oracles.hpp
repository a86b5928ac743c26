#pragma once

// Independent reference implementations. Deliberately naive: direct sums in
// long double, no shared code with the library beyond plain data types.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using lcplx = std::complex<long double>;
using cplx = std::complex<double>;

inline std::vector<cplx> naive_dft(const std::vector<cplx>& x, bool inverse = false) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    const long double sign = inverse ? 1.0L : -1.0L;
    for (std::size_t k = 0; k < n; ++k) {
        lcplx acc{};
        for (std::size_t t = 0; t < n; ++t) {
            // Reduce k*t mod n before forming the angle to keep it small.
            const long double ang = sign * 2.0L * std::numbers::pi_v<long double> *
                                    static_cast<long double>((k * t) % n) / static_cast<long double>(n);
            acc += lcplx(x[t].real(), x[t].imag()) * lcplx(std::cos(ang), std::sin(ang));
        }
        if (inverse) acc /= static_cast<long double>(n);
        out[k] = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
    return out;
}

// y[n] = sum_k h[k] x[n-k], n < x.size()
inline std::vector<cplx> naive_convolve_same(const std::vector<cplx>& x, const std::vector<cplx>& h) {
    std::vector<cplx> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        lcplx acc{};
        for (std::size_t k = 0; k < h.size() && k <= n; ++k)
            acc += lcplx(h[k].real(), h[k].imag()) * lcplx(x[n - k].real(), x[n - k].imag());
        y[n] = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
    return y;
}

inline std::vector<cplx> naive_circular(const std::vector<cplx>& x, const std::vector<cplx>& h) {
    const std::size_t n = x.size();
    std::vector<cplx> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        lcplx acc{};
        for (std::size_t k = 0; k < h.size(); ++k) {
            const cplx xv = x[(t + n * (k / n + 1) - k) % n];
            acc += lcplx(h[k].real(), h[k].imag()) * lcplx(xv.real(), xv.imag());
        }
        y[t] = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
    return y;
}

// I0(x) = sum_m ((x/2)^m / m!)^2, summed in long double until the term is negligible.
inline long double bessel_i0(long double x) {
    long double sum = 1.0L, term = 1.0L;
    const long double q = x * x / 4.0L;
    for (int m = 1; m < 500; ++m) {
        term *= q / (static_cast<long double>(m) * static_cast<long double>(m));
        sum += term;
        if (term < sum * 1e-22L) break;
    }
    return sum;
}

inline std::vector<double> kaiser(std::size_t len, double beta) {
    std::vector<double> w(len, 1.0);
    if (len == 1) return w;
    const long double denom = bessel_i0(beta);
    for (std::size_t i = 0; i < len; ++i) {
        const long double ratio = 2.0L * static_cast<long double>(i) / static_cast<long double>(len - 1) - 1.0L;
        w[i] = static_cast<double>(bessel_i0(beta * std::sqrt(1.0L - ratio * ratio)) / denom);
    }
    return w;
}

// Direct-form-I difference equation y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2].
struct Section {
    double b0, b1, b2, a1, a2;
};

inline std::vector<cplx> iir_cascade(const std::vector<cplx>& x, const std::vector<Section>& sections) {
    std::vector<lcplx> cur(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cur[i] = lcplx(x[i].real(), x[i].imag());
    for (const Section& s : sections) {
        std::vector<lcplx> y(cur.size());
        for (std::size_t n = 0; n < cur.size(); ++n) {
            lcplx acc = static_cast<long double>(s.b0) * cur[n];
            if (n >= 1) acc += static_cast<long double>(s.b1) * cur[n - 1] - static_cast<long double>(s.a1) * y[n - 1];
            if (n >= 2) acc += static_cast<long double>(s.b2) * cur[n - 2] - static_cast<long double>(s.a2) * y[n - 2];
            y[n] = acc;
        }
        cur = std::move(y);
    }
    std::vector<cplx> out(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i)
        out[i] = cplx(static_cast<double>(cur[i].real()), static_cast<double>(cur[i].imag()));
    return out;
}

// Weighted mean in closed log-domain form: exp(sum w ln r), atan2 of the weighted resultant.
inline std::pair<double, double> wfm(const std::vector<double>& r, const std::vector<double>& th,
                                     const std::vector<double>& w) {
    long double lr = 0, s = 0, c = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        lr += static_cast<long double>(w[i]) * std::log(static_cast<long double>(r[i]));
        s += static_cast<long double>(w[i]) * std::sin(static_cast<long double>(th[i]));
        c += static_cast<long double>(w[i]) * std::cos(static_cast<long double>(th[i]));
    }
    return {static_cast<double>(std::exp(lr)), static_cast<double>(std::atan2(s, c))};
}

// min over integer k of |b - a + 2 pi k|.
inline double brute_angle_gap(double a, double b) {
    long double best = 1e30L;
    for (int k = -4; k <= 4; ++k) {
        const long double v = std::fabs(static_cast<long double>(b) - a + 2.0L * std::numbers::pi_v<long double> * k);
        if (v < best) best = v;
    }
    return static_cast<double>(best);
}

// Central finite difference of f at x along coordinate i.
template <class F>
double central_difference(F&& f, std::vector<double>& x, std::size_t i, double h) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    return (up - down) / (2.0 * h);
}

inline std::vector<cplx> random_complex(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<cplx> out(n);
    for (auto& z : out) {
        const double re = g(rng);
        const double im = g(rng);
        z = {re, im};
    }
    return out;
}

inline double max_rel_error(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return den > 0.0 ? num / den : num;
}

}  // namespace oracle
