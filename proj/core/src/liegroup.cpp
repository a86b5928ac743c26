#include "charrnet/liegroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "charrnet/errors.hpp"

namespace charrnet {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double wrap_angle(double theta) noexcept {
    if (theta >= -std::numbers::pi && theta < std::numbers::pi) return theta;
    double t = std::fmod(theta + std::numbers::pi, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    t -= std::numbers::pi;
    // fmod can land exactly on +pi after the shift for inputs just below a multiple of 2pi.
    return t >= std::numbers::pi ? -std::numbers::pi : t;
}

ManifoldPoint ManifoldPoint::make(double r, double theta) noexcept {
    return {std::max(r, kEpsR), wrap_angle(theta)};
}

GroupElement GroupElement::from_complex(std::complex<double> z) noexcept {
    const ManifoldPoint p = charrnet::from_complex(z);
    return {p.r, p.theta};
}

GroupElement GroupElement::inverse() const noexcept { return {1.0 / rho, wrap_angle(-phi)}; }

GroupElement GroupElement::compose(const GroupElement& other) const noexcept {
    return {rho * other.rho, wrap_angle(phi + other.phi)};
}

ConvexWeights::ConvexWeights(std::vector<double> w) : w_(std::move(w)) {
    double sum = 0.0;
    for (double v : w_) {
        if (!(v >= 0.0)) throw ArgumentError("ConvexWeights: negative or NaN weight");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ArgumentError("ConvexWeights: weights sum to " + std::to_string(sum) + ", not 1");
}

ConvexWeights ConvexWeights::uniform(std::size_t n) {
    ConvexWeights out;
    out.w_.assign(n, 1.0 / static_cast<double>(n));
    return out;
}

ConvexWeights ConvexWeights::softmax(std::span<const double> logits) {
    ConvexWeights out;
    out.w_.resize(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.w_[i] = std::exp(logits[i] - mx);
        sum += out.w_[i];
    }
    for (double& v : out.w_) v /= sum;
    return out;
}

ManifoldPoint from_complex(std::complex<double> z) noexcept {
    const double mag = std::abs(z);
    if (mag < kEpsR) return {kEpsR, 0.0};
    return {mag, wrap_angle(std::atan2(z.imag(), z.real()))};
}

TangentVector log_map(const ManifoldPoint& p) noexcept { return {std::log(p.r), p.theta}; }

ManifoldPoint exp_map(const TangentVector& v) noexcept { return ManifoldPoint::make(std::exp(v.log_r), v.theta); }

ManifoldPoint act(const GroupElement& g, const ManifoldPoint& p) noexcept {
    return ManifoldPoint::make(g.rho * p.r, g.phi + p.theta);
}

MeanResult wfm(std::span<const ManifoldPoint> points, const ConvexWeights& weights) {
    if (points.empty()) throw SizeError("wfm: no points");
    if (points.size() != weights.size())
        throw SizeError("wfm: " + std::to_string(points.size()) + " points but " + std::to_string(weights.size()) +
                        " weights");
    double log_r = 0.0;
    double s = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = weights[i];
        log_r += w * std::log(points[i].r);
        s += w * std::sin(points[i].theta);
        c += w * std::cos(points[i].theta);
    }
    MeanResult out;
    out.degenerate = std::hypot(s, c) < kEpsRes;
    out.point = ManifoldPoint::make(std::exp(log_r), out.degenerate ? 0.0 : std::atan2(s, c));
    return out;
}

double angular_distance(double a, double b) noexcept {
    // Folding |b - a| keeps the result exactly symmetric in (a, b).
    double d = std::fmod(std::abs(b - a), 2.0 * std::numbers::pi);
    if (d > std::numbers::pi) d = 2.0 * std::numbers::pi - d;
    return d;
}

double distance(const ManifoldPoint& p, const ManifoldPoint& q) noexcept {
    const double dr = std::log(q.r) - std::log(p.r);
    const double dt = angular_distance(p.theta, q.theta);
    return std::sqrt(dr * dr + dt * dt);
}

double smoothed_distance(const ManifoldPoint& p, const ManifoldPoint& q) noexcept {
    const double dr = std::log(q.r) - std::log(p.r);
    const double dt = angular_distance(p.theta, q.theta);
    return std::sqrt(dr * dr + dt * dt + kEpsDist);
}

}  // namespace charrnet
