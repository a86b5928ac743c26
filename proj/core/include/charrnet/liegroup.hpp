#pragma once

// The Abelian Lie group R+ x U(1) acting on a single complex frequency bin.
//
// Points are stored as (r, theta) with r >= kEpsR and theta in [-pi, pi).
// The group is commutative, so every mean and distance below has a closed form
// in log coordinates: log_map sends (r, theta) to (ln r, theta).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace charrnet {

inline constexpr double kEpsR = 1e-12;     // radial clamp; r = 0 is off-manifold
inline constexpr double kEpsRes = 1e-9;    // circular-mean resultant below which the angle is undefined
inline constexpr double kEpsDist = 1e-12;  // smoothing inside the distance square root

// Wraps into [-pi, pi).
double wrap_angle(double theta) noexcept;

struct ManifoldPoint {
    double r = 1.0;
    double theta = 0.0;

    // Clamps r to kEpsR and wraps theta.
    static ManifoldPoint make(double r, double theta) noexcept;
    std::complex<double> to_complex() const noexcept { return std::polar(r, theta); }
};

struct TangentVector {
    double log_r = 0.0;
    double theta = 0.0;
};

// Scaling by rho and rotation by phi.
struct GroupElement {
    double rho = 1.0;
    double phi = 0.0;

    static GroupElement identity() noexcept { return {1.0, 0.0}; }
    // Element that multiplies a bin by z (a channel's frequency response at that bin).
    static GroupElement from_complex(std::complex<double> z) noexcept;
    GroupElement inverse() const noexcept;
    GroupElement compose(const GroupElement& other) const noexcept;
};

/// Nonnegative weights summing to one (within 1e-12).
class ConvexWeights {
public:
    // Validates; throws ArgumentError on negative entries or a sum off by > 1e-12.
    explicit ConvexWeights(std::vector<double> w);
    static ConvexWeights uniform(std::size_t n);
    // Numerically stable softmax of unconstrained logits.
    static ConvexWeights softmax(std::span<const double> logits);

    std::span<const double> values() const noexcept { return w_; }
    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const noexcept { return w_[i]; }

private:
    ConvexWeights() = default;
    std::vector<double> w_;
};

ManifoldPoint from_complex(std::complex<double> z) noexcept;
TangentVector log_map(const ManifoldPoint& p) noexcept;
ManifoldPoint exp_map(const TangentVector& v) noexcept;
ManifoldPoint act(const GroupElement& g, const ManifoldPoint& p) noexcept;

struct MeanResult {
    ManifoldPoint point;
    // Set when the weighted angular resultant is below kEpsRes; the angle is then 0.
    bool degenerate = false;
};

// Weighted Frechet mean: geometric mean of radii, resultant (directional) mean of angles.
// Throws SizeError on empty input or a weight/point count mismatch.
MeanResult wfm(std::span<const ManifoldPoint> points, const ConvexWeights& weights);

// Geodesic angular difference |wrap(b - a)|.
double angular_distance(double a, double b) noexcept;

// sqrt(ln^2(q.r / p.r) + dtheta^2) for the line element ds^2 = dr^2 + dtheta^2 in log coordinates.
double distance(const ManifoldPoint& p, const ManifoldPoint& q) noexcept;

// As distance(), with kEpsDist under the root so the gradient is finite at p == q.
double smoothed_distance(const ManifoldPoint& p, const ManifoldPoint& q) noexcept;

}  // namespace charrnet
