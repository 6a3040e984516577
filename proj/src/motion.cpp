#include <cmath>

#include "mamm/error.hpp"
#include "mamm/motion.hpp"

namespace mamm {

namespace {

struct JointChannels {
    Vec3 angles = Vec3::Zero();
    std::optional<Vec3> position;
};

JointChannels read_joint(const Skeleton& skel, const RowMatrix& channels, int t, int j) {
    JointChannels out;
    int rot = 0;
    const int base = skel.channel_offset(j);
    const auto& list = skel.joint(j).channels;
    for (size_t c = 0; c < list.size(); ++c) {
        const double value = channels(t, base + static_cast<int>(c));
        switch (list[c]) {
            case Channel::x_position: out.position = out.position.value_or(Vec3::Zero()); (*out.position)[0] = value; break;
            case Channel::y_position: out.position = out.position.value_or(Vec3::Zero()); (*out.position)[1] = value; break;
            case Channel::z_position: out.position = out.position.value_or(Vec3::Zero()); (*out.position)[2] = value; break;
            default: out.angles[rot++] = value; break;
        }
    }
    return out;
}

void write_joint(const Skeleton& skel, RowMatrix& channels, int t, int j, const Vec3& angles, const Vec3& position) {
    int rot = 0;
    const int base = skel.channel_offset(j);
    const auto& list = skel.joint(j).channels;
    for (size_t c = 0; c < list.size(); ++c) {
        double& slot = channels(t, base + static_cast<int>(c));
        switch (list[c]) {
            case Channel::x_position: slot = position[0]; break;
            case Channel::y_position: slot = position[1]; break;
            case Channel::z_position: slot = position[2]; break;
            default: slot = angles[rot++]; break;
        }
    }
}

// Global joint rotations and root position of one frame.
void forward_rotations(const BvhClip& clip, int t, std::vector<Mat3>& global, Vec3& root_position) {
    const Skeleton& skel = clip.skeleton;
    global.resize(static_cast<size_t>(skel.joint_count()));
    for (int j = 0; j < skel.joint_count(); ++j) {
        const JointChannels ch = read_joint(skel, clip.channels, t, j);
        const Mat3 local = euler_to_matrix(ch.angles, skel.rotation_order(j));
        if (j == 0) {
            global[0] = local;
            root_position = ch.position.value_or(skel.joint(0).offset);
        } else {
            global[j] = global[*skel.joint(j).parent] * local;
        }
    }
}

}  // namespace

MotionSequence::MotionSequence(Skeleton skeleton,
                               Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> displacement,
                               std::vector<Mat3> rotations, double fps)
    : skeleton_(std::move(skeleton)), displacement_(std::move(displacement)), rotations_(std::move(rotations)), fps_(fps) {
    if (displacement_.rows() < 1) throw InputError("empty motion");
    if (rotations_.size() != static_cast<size_t>(displacement_.rows()) * skeleton_.joint_count()) {
        throw InputError("rotation count does not match frames x joints");
    }
    if (!(fps_ > 0.0)) throw InputError("fps must be positive");
    if (!displacement_.allFinite()) throw InputError("non-finite root displacement");
    for (const Mat3& r : rotations_) {
        if (!r.allFinite() || (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
            std::abs(r.determinant() - 1.0) > 1e-6) {
            throw InputError("joint rotation is not a valid rotation matrix");
        }
    }
}

MotionSequence to_internal(const BvhClip& clip) {
    const int frames = clip.frame_count();
    if (frames < 1) throw InputError("empty motion");
    if (!clip.channels.allFinite()) throw InputError("non-finite channel data");
    const Skeleton& skel = clip.skeleton;
    const int joints = skel.joint_count();

    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> displacement(frames, 3);
    std::vector<Mat3> rotations(static_cast<size_t>(frames) * joints);
    std::vector<Mat3> global;
    Vec3 position, previous_position;
    Mat3 previous_heading;

    for (int t = 0; t < frames; ++t) {
        forward_rotations(clip, t, global, position);
        const Mat3 heading = heading_rotation(heading_angle(global[0]));
        if (t == 0) {
            previous_heading = heading;
            previous_position = position;
        }
        displacement.row(t) = (previous_heading.transpose() * (position - previous_position)).transpose();
        rotations[static_cast<size_t>(t) * joints] = previous_heading.transpose() * global[0];
        for (int j = 1; j < joints; ++j) {
            rotations[static_cast<size_t>(t) * joints + j] = global[0].transpose() * global[j];
        }
        previous_heading = heading;
        previous_position = position;
    }
    return MotionSequence(skel, std::move(displacement), std::move(rotations), clip.fps());
}

RootAnchor root_anchor(const BvhClip& clip) {
    if (clip.frame_count() < 1) throw InputError("empty motion");
    std::vector<Mat3> global;
    RootAnchor anchor;
    forward_rotations(clip, 0, global, anchor.position);
    anchor.heading = heading_angle(global[0]);
    return anchor;
}

BvhClip to_clip(const MotionSequence& motion, const RootAnchor& anchor) {
    if (motion.frame_count() < 1) throw InputError("empty motion");
    const Skeleton& skel = motion.skeleton();
    const int joints = skel.joint_count();

    BvhClip clip;
    clip.skeleton = skel;
    clip.frame_time = 1.0 / motion.fps();
    clip.channels.resize(motion.frame_count(), skel.channel_count());

    Vec3 position = anchor.position;
    Mat3 heading = heading_rotation(anchor.heading);
    std::vector<Mat3> global(static_cast<size_t>(joints));
    for (int t = 0; t < motion.frame_count(); ++t) {
        position += heading * motion.displacement(t);
        global[0] = heading * motion.rotation(t, 0);
        for (int j = 1; j < joints; ++j) global[j] = global[0] * motion.rotation(t, j);

        for (int j = 0; j < joints; ++j) {
            const Mat3 local = j == 0 ? global[0] : Mat3(global[*skel.joint(j).parent].transpose() * global[j]);
            const Vec3 angles = matrix_to_euler(local, skel.rotation_order(j));
            write_joint(skel, clip.channels, t, j, angles, j == 0 ? position : skel.joint(j).offset);
        }
        heading = heading_rotation(heading_angle(global[0]));
    }
    return clip;
}

std::string from_internal(const MotionSequence& motion, const RootAnchor& anchor) {
    return write_bvh(to_clip(motion, anchor));
}

std::vector<std::vector<Vec3>> world_joint_positions(const BvhClip& clip) {
    const Skeleton& skel = clip.skeleton;
    std::vector<std::vector<Vec3>> out(static_cast<size_t>(clip.frame_count()));
    std::vector<Mat3> global(static_cast<size_t>(skel.joint_count()));
    for (int t = 0; t < clip.frame_count(); ++t) {
        auto& positions = out[t];
        positions.resize(static_cast<size_t>(skel.joint_count()));
        for (int j = 0; j < skel.joint_count(); ++j) {
            const JointChannels ch = read_joint(skel, clip.channels, t, j);
            const Mat3 local = euler_to_matrix(ch.angles, skel.rotation_order(j));
            if (j == 0) {
                global[0] = local;
                positions[0] = ch.position.value_or(skel.joint(0).offset);
            } else {
                const int parent = *skel.joint(j).parent;
                global[j] = global[parent] * local;
                positions[j] = positions[parent] + global[parent] * ch.position.value_or(skel.joint(j).offset);
            }
        }
    }
    return out;
}

}  // namespace mamm
