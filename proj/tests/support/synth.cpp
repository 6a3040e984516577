#include "synth.hpp"

#include <cmath>
#include <numbers>

namespace synth {

using mamm::BvhClip;
using mamm::Channel;
using mamm::Joint;
using mamm::Skeleton;
using mamm::Vec3;

namespace {

const std::vector<Channel> kRot = {Channel::z_rotation, Channel::x_rotation, Channel::y_rotation};
const std::vector<Channel> kRoot = {Channel::x_position, Channel::y_position, Channel::z_position,
                                    Channel::z_rotation, Channel::x_rotation, Channel::y_rotation};

struct Names {
    int hips, spine, lhip, lknee, lankle, rhip, rknee, rankle, lshoulder, lelbow, rshoulder, relbow;
};

Names g_names;

Skeleton build() {
    std::vector<Joint> js;
    auto add = [&](const char* name, int parent, Vec3 off, std::optional<Vec3> end = {}) {
        Joint j;
        j.name = name;
        if (parent >= 0) j.parent = parent;
        j.offset = off;
        j.channels = parent < 0 ? kRoot : kRot;
        j.end_site = end;
        js.push_back(j);
        return static_cast<int>(js.size()) - 1;
    };
    Names& n = g_names;
    n.hips = add("Hips", -1, {0, 90, 0});
    n.spine = add("Spine", n.hips, {0, 10, 0});
    const int spine1 = add("Spine1", n.spine, {0, 10, 0});
    const int spine2 = add("Spine2", spine1, {0, 10, 0});
    const int spine3 = add("Spine3", spine2, {0, 8, 0});
    const int neck = add("Neck", spine3, {0, 8, 0});
    add("Head", neck, {0, 10, 0}, Vec3{0, 12, 0});
    const int lcl = add("LeftShoulder", spine3, {4, 6, 0});
    n.lshoulder = add("LeftArm", lcl, {12, 0, 0});
    n.lelbow = add("LeftForeArm", n.lshoulder, {26, 0, 0});
    const int lhand = add("LeftHand", n.lelbow, {24, 0, 0}, Vec3{8, 0, 0});
    add("LeftHandThumb", lhand, {2, 0, 3}, Vec3{0, 0, 3});
    const int rcl = add("RightShoulder", spine3, {-4, 6, 0});
    n.rshoulder = add("RightArm", rcl, {-12, 0, 0});
    n.relbow = add("RightForeArm", n.rshoulder, {-26, 0, 0});
    const int rhand = add("RightHand", n.relbow, {-24, 0, 0}, Vec3{-8, 0, 0});
    add("RightHandThumb", rhand, {-2, 0, 3}, Vec3{0, 0, 3});
    n.lhip = add("LeftUpLeg", n.hips, {9, 0, 0});
    n.lknee = add("LeftLeg", n.lhip, {0, -42, 0});
    n.lankle = add("LeftFoot", n.lknee, {0, -40, 0});
    add("LeftToeBase", n.lankle, {0, -6, 12}, Vec3{0, 0, 5});
    n.rhip = add("RightUpLeg", n.hips, {-9, 0, 0});
    n.rknee = add("RightLeg", n.rhip, {0, -42, 0});
    n.rankle = add("RightFoot", n.rknee, {0, -40, 0});
    add("RightToeBase", n.rankle, {0, -6, 12}, Vec3{0, 0, 5});
    return Skeleton(std::move(js));
}

// Column of channel `c` (0 = Z, 1 = X, 2 = Y) of joint j's rotation.
int rot_col(const Skeleton& s, int j, int c) {
    return s.channel_offset(j) + (j == 0 ? 3 : 0) + c;
}

}  // namespace

Skeleton humanoid() {
    static const Skeleton skel = build();
    return skel;
}

BvhClip walk(int frames, const GaitParams& g, double fps) {
    BvhClip clip;
    clip.skeleton = humanoid();
    clip.frame_time = 1.0 / fps;
    clip.channels = mamm::RowMatrix::Zero(frames, clip.skeleton.channel_count());
    const Names& n = g_names;
    const auto& s = clip.skeleton;
    double x = 0.0, z = 0.0, heading = 0.0;
    for (int t = 0; t < frames; ++t) {
        const double ph = 2.0 * std::numbers::pi * t / g.period + g.phase;
        auto row = clip.channels.row(t);
        row(0) = x;
        row(1) = 90.0 + 2.0 * std::cos(2.0 * ph);
        row(2) = z;
        row(rot_col(s, 0, 2)) = heading;
        row(rot_col(s, 0, 1)) = 3.0 * std::sin(2.0 * ph);
        row(rot_col(s, n.lhip, 1)) = -g.swing * std::sin(ph);
        row(rot_col(s, n.rhip, 1)) = g.swing * std::sin(ph);
        row(rot_col(s, n.lknee, 1)) = 25.0 * (1.0 + std::sin(ph - 1.2));
        row(rot_col(s, n.rknee, 1)) = 25.0 * (1.0 - std::sin(ph - 1.2));
        row(rot_col(s, n.lankle, 1)) = -8.0 * std::sin(ph);
        row(rot_col(s, n.rankle, 1)) = 8.0 * std::sin(ph);
        row(rot_col(s, n.lshoulder, 0)) = -70.0;
        row(rot_col(s, n.rshoulder, 0)) = 70.0;
        row(rot_col(s, n.lshoulder, 2)) = 0.7 * g.swing * std::sin(ph);
        row(rot_col(s, n.rshoulder, 2)) = 0.7 * g.swing * std::sin(ph);
        row(rot_col(s, n.lelbow, 2)) = -15.0 - 10.0 * std::sin(ph);
        row(rot_col(s, n.relbow, 2)) = 15.0 - 10.0 * std::sin(ph);
        row(rot_col(s, n.spine, 2)) = 5.0 * std::sin(ph);

        const double h = heading * std::numbers::pi / 180.0;
        x += g.speed * std::sin(h);
        z += g.speed * std::cos(h);
        heading += g.turn_rate;
    }
    return clip;
}

BvhClip jump(int frames, double period, double fps) {
    BvhClip clip;
    clip.skeleton = humanoid();
    clip.frame_time = 1.0 / fps;
    clip.channels = mamm::RowMatrix::Zero(frames, clip.skeleton.channel_count());
    const Names& n = g_names;
    const auto& s = clip.skeleton;
    for (int t = 0; t < frames; ++t) {
        const double u = std::fmod(t / period, 1.0);
        // crouch in the first third, airborne arc after
        const double crouch = u < 1.0 / 3.0 ? std::sin(3.0 * std::numbers::pi * u) : 0.0;
        const double air = u >= 1.0 / 3.0 ? std::sin(1.5 * std::numbers::pi * (u - 1.0 / 3.0)) : 0.0;
        auto row = clip.channels.row(t);
        row(1) = 90.0 - 20.0 * crouch + 35.0 * air;
        row(rot_col(s, 0, 1)) = 15.0 * crouch;
        row(rot_col(s, n.lhip, 1)) = -60.0 * crouch - 10.0 * air;
        row(rot_col(s, n.rhip, 1)) = -60.0 * crouch - 10.0 * air;
        row(rot_col(s, n.lknee, 1)) = 90.0 * crouch + 20.0 * air;
        row(rot_col(s, n.rknee, 1)) = 90.0 * crouch + 20.0 * air;
        row(rot_col(s, n.lankle, 1)) = -30.0 * crouch;
        row(rot_col(s, n.rankle, 1)) = -30.0 * crouch;
        row(rot_col(s, n.lshoulder, 0)) = -70.0 + 150.0 * air;
        row(rot_col(s, n.rshoulder, 0)) = 70.0 - 150.0 * air;
        row(rot_col(s, n.lelbow, 2)) = -40.0 * crouch;
        row(rot_col(s, n.relbow, 2)) = 40.0 * crouch;
        row(rot_col(s, n.spine, 1)) = 20.0 * crouch;
    }
    return clip;
}

BvhClip concat(const BvhClip& a, const BvhClip& b) {
    BvhClip out = a;
    out.channels.resize(a.channels.rows() + b.channels.rows(), a.channels.cols());
    out.channels.topRows(a.channels.rows()) = a.channels;
    out.channels.bottomRows(b.channels.rows()) = b.channels;
    // continue b from where a ends
    const auto last = a.channels.row(a.channels.rows() - 1);
    const auto first = b.channels.row(0);
    for (Eigen::Index t = a.channels.rows(); t < out.channels.rows(); ++t) {
        out.channels(t, 0) += last(0) - first(0);
        out.channels(t, 2) += last(2) - first(2);
    }
    return out;
}

BvhClip random_clip(int frames, std::mt19937_64& rng, double fps) {
    BvhClip clip;
    clip.skeleton = humanoid();
    clip.frame_time = 1.0 / fps;
    const int cols = clip.skeleton.channel_count();
    clip.channels.resize(frames, cols);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // a few random sinusoids per channel
    for (int c = 0; c < cols; ++c) {
        const bool position = c < 3;
        const bool middle = !position && (c % 3) == 1;  // X in ZXY
        const double amp = position ? 50.0 : (middle ? 80.0 : 170.0);
        double f[3], p[3], w[3];
        for (int k = 0; k < 3; ++k) {
            f[k] = 0.01 + 0.1 * std::abs(u(rng));
            p[k] = 3.0 * u(rng);
            w[k] = u(rng);
        }
        const double norm = std::abs(w[0]) + std::abs(w[1]) + std::abs(w[2]) + 1e-9;
        for (int t = 0; t < frames; ++t) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += w[k] * std::sin(f[k] * t + p[k]);
            clip.channels(t, c) = amp * v / norm;
        }
    }
    return clip;
}

}  // namespace synth
