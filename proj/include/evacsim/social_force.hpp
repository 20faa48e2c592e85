#pragma once

// Social-force kernels, templated on the scalar type.

#include "evacsim/types.hpp"

#include <cmath>

namespace evacsim {

struct ForceParams {
    double A = 2000.0;        // N, interaction strength
    double B = 0.08;          // m, interaction range
    double tau = 0.5;         // s, relaxation time
    double wall_cutoff = 1.0; // m, ignore walls farther than this

    void validate() const;
    friend bool operator==(const ForceParams&, const ForceParams&) = default;
};

/// Relaxation toward the desired velocity, in m/s^2.
template <typename Scalar>
Vector2<Scalar> driving_acceleration(const Vector2<Scalar>& velocity, const Vector2<Scalar>& desired, Scalar tau) {
    return (desired - velocity) / tau;
}

/// Exponential body repulsion on i from j, in newtons.
template <typename Scalar>
Vector2<Scalar> pair_repulsion(const Vector2<Scalar>& xi, Scalar ri, const Vector2<Scalar>& xj, Scalar rj, Scalar A,
                               Scalar B) {
    const Vector2<Scalar> diff = xi - xj;
    const Scalar d = diff.norm();
    if (d == Scalar(0)) return Vector2<Scalar>::Zero();
    using std::exp;
    const Vector2<Scalar> unit = diff / d;
    return (A * exp((ri + rj - d) / B)) * unit;
}

/// Repulsion from the closest point `wall_point` of an obstacle, in newtons.
template <typename Scalar>
Vector2<Scalar> wall_repulsion(const Vector2<Scalar>& xi, Scalar ri, const Vector2<Scalar>& wall_point, Scalar A,
                               Scalar B) {
    return pair_repulsion<Scalar>(xi, ri, wall_point, Scalar(0), A, B);
}

/// Closest point of the axis-aligned box [lo, hi] to p.
template <typename Scalar>
Vector2<Scalar> closest_point_on_box(const Vector2<Scalar>& p, const Vector2<Scalar>& lo, const Vector2<Scalar>& hi) {
    return p.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace evacsim
