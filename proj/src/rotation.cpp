#include "mamm/rotation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "mamm/error.hpp"

namespace mamm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

int index(Axis a) { return static_cast<int>(a); }

}  // namespace

EulerOrder EulerOrder::parse(const std::string& name) {
    if (name.size() != 3) throw InputError("invalid rotation order '" + name + "'");
    EulerOrder order;
    int seen = 0;
    for (int i = 0; i < 3; ++i) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[i])));
        if (c < 'X' || c > 'Z') throw InputError("invalid rotation order '" + name + "'");
        order.axes[i] = static_cast<Axis>(c - 'X');
        seen |= 1 << (c - 'X');
    }
    if (seen != 0b111) throw InputError("invalid rotation order '" + name + "'");
    return order;
}

std::string EulerOrder::name() const {
    std::string s;
    for (Axis a : axes) s.push_back(static_cast<char>('X' + index(a)));
    return s;
}

Mat3 axis_rotation(Axis axis, double radians) {
    switch (axis) {
        case Axis::x: return Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix();
        case Axis::y: return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
        case Axis::z: return Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix();
    }
    return Mat3::Identity();
}

Mat3 euler_to_matrix(const Vec3& degrees, const EulerOrder& order) {
    return axis_rotation(order.axes[0], degrees[0] * kDegToRad) *
           axis_rotation(order.axes[1], degrees[1] * kDegToRad) *
           axis_rotation(order.axes[2], degrees[2] * kDegToRad);
}

Vec3 matrix_to_euler(const Mat3& r, const EulerOrder& order) {
    const int i = index(order.axes[0]);
    const int j = index(order.axes[1]);
    const int k = index(order.axes[2]);
    // +1 for cyclic orders (XYZ, YZX, ZXY), -1 otherwise.
    const double s = ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;

    const double sin_mid = std::clamp(s * r(i, k), -1.0, 1.0);
    double first, mid, last;
    if (std::abs(sin_mid) > 1.0 - 1e-12) {
        mid = std::copysign(std::numbers::pi / 2, sin_mid);
        first = std::atan2(s * r(k, j), r(j, j));
        last = 0.0;
    } else {
        mid = std::asin(sin_mid);
        first = std::atan2(-s * r(j, k), r(k, k));
        last = std::atan2(-s * r(i, j), r(i, i));
    }
    return Vec3(first, mid, last) * kRadToDeg;
}

Mat3 project_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3& sigma = svd.singularValues();
    if (!m.allFinite() || sigma[0] == 0.0 || sigma[2] <= 1e-9 * sigma[0]) {
        throw InputError("cannot project a singular matrix onto SO(3)");
    }
    Mat3 u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
    return u * v.transpose();
}

Mat3 heading_rotation(double radians) { return axis_rotation(Axis::y, radians); }

double heading_angle(const Mat3& orientation) {
    const Vec3 forward = orientation.col(2);
    if (std::hypot(forward.x(), forward.z()) > 1e-9) return std::atan2(forward.x(), forward.z());
    // Facing straight up or down: fall back to the side axis.
    const Vec3 side = orientation.col(0);
    return std::atan2(-side.z(), side.x());
}

}  // namespace mamm
