#pragma once

#include <array>
#include <string>

#include "mamm/types.hpp"

namespace mamm {

enum class Axis { x = 0, y = 1, z = 2 };

/// Intrinsic Euler order as listed in a BVH CHANNELS line: the matrix is
/// R(axes[0]) * R(axes[1]) * R(axes[2]).
struct EulerOrder {
    std::array<Axis, 3> axes{Axis::z, Axis::x, Axis::y};

    static EulerOrder parse(const std::string& name);  // "XYZ", "ZXY", ...
    std::string name() const;
    bool operator==(const EulerOrder&) const = default;
};

Mat3 axis_rotation(Axis axis, double radians);

/// Angles in degrees, given in the order of `order.axes`.
Mat3 euler_to_matrix(const Vec3& degrees, const EulerOrder& order);

/// Inverse of euler_to_matrix. The middle angle is returned in [-90, 90] and
/// the outer two in (-180, 180]; at gimbal lock the last angle is set to 0.
Vec3 matrix_to_euler(const Mat3& rotation, const EulerOrder& order);

/// Nearest rotation (orthogonal, det +1) to `m` in Frobenius norm.
/// Throws InputError when `m` is singular (rank < 3 within 1e-9).
Mat3 project_rotation(const Mat3& m);

/// Rotation about the vertical (y) axis.
Mat3 heading_rotation(double radians);

/// Facing angle about y of an orientation whose local forward axis is +z.
double heading_angle(const Mat3& orientation);

}  // namespace mamm
