#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mamm/rotation.hpp"
#include "mamm/types.hpp"

namespace mamm {

enum class Channel { x_position, y_position, z_position, x_rotation, y_rotation, z_rotation };

struct Joint {
    std::string name;
    std::optional<int> parent;
    Vec3 offset = Vec3::Zero();
    std::vector<Channel> channels;      // as declared, 3 or 6 entries
    std::optional<Vec3> end_site;       // offset of a child "End Site", if any
};

/// Joint 0 is the only root and every parent precedes its child.
class Skeleton {
public:
    Skeleton() = default;
    explicit Skeleton(std::vector<Joint> joints);  // validates

    int joint_count() const { return static_cast<int>(joints_.size()); }
    const Joint& joint(int j) const { return joints_[j]; }
    const std::vector<Joint>& joints() const { return joints_; }

    EulerOrder rotation_order(int j) const { return orders_[j]; }
    /// Column of the joint's first channel in a frame row.
    int channel_offset(int j) const { return offsets_[j]; }
    int channel_count() const { return total_channels_; }

private:
    std::vector<Joint> joints_;
    std::vector<EulerOrder> orders_;
    std::vector<int> offsets_;
    int total_channels_ = 0;
};

/// Raw BVH content: skeleton plus per-frame channel values (degrees for
/// rotations, skeleton units for positions).
struct BvhClip {
    Skeleton skeleton;
    RowMatrix channels;  // frames x skeleton.channel_count()
    double frame_time = 1.0 / 30.0;

    int frame_count() const { return static_cast<int>(channels.rows()); }
    double fps() const { return 1.0 / frame_time; }
};

/// Root displacement V plus joint rotations R in character root space.
///
/// V[t] is the root translation from frame t-1 to t, expressed in the
/// heading frame of t-1 (V[0] = 0). R(t, 0) is the root orientation relative
/// to the heading of frame t-1, so its yaw is the per-frame heading delta and
/// its residual carries the root's pitch and roll. R(t, j) for j > 0 is the
/// joint's global rotation composed with the inverse of the root's.
class MotionSequence {
public:
    MotionSequence() = default;
    MotionSequence(Skeleton skeleton, Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> displacement,
                   std::vector<Mat3> rotations, double fps);

    const Skeleton& skeleton() const { return skeleton_; }
    int frame_count() const { return static_cast<int>(displacement_.rows()); }
    int joint_count() const { return skeleton_.joint_count(); }
    double fps() const { return fps_; }

    Vec3 displacement(int t) const { return displacement_.row(t).transpose(); }
    const Mat3& rotation(int t, int j) const { return rotations_[static_cast<size_t>(t) * joint_count() + j]; }
    const auto& displacements() const { return displacement_; }
    const std::vector<Mat3>& rotations() const { return rotations_; }

private:
    Skeleton skeleton_;
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> displacement_;
    std::vector<Mat3> rotations_;
    double fps_ = 30.0;
};

/// World placement of the first frame, needed to re-integrate V.
struct RootAnchor {
    Vec3 position = Vec3::Zero();
    double heading = 0.0;  // radians about +y
};

BvhClip parse_bvh(std::string_view text);
BvhClip read_bvh_file(const std::string& path);
std::string write_bvh(const BvhClip& clip);

MotionSequence to_internal(const BvhClip& clip);
RootAnchor root_anchor(const BvhClip& clip);

/// Re-integrates the motion from `anchor` into BVH channel data using the
/// skeleton's declared channel layout.
BvhClip to_clip(const MotionSequence& motion, const RootAnchor& anchor = {});
std::string from_internal(const MotionSequence& motion, const RootAnchor& anchor = {});

/// World-space joint positions, frames x joints.
std::vector<std::vector<Vec3>> world_joint_positions(const BvhClip& clip);

}  // namespace mamm
