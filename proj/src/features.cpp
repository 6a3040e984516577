#include "mamm/features.hpp"

#include "mamm/error.hpp"

namespace mamm {

std::string to_string(Domain domain) {
    switch (domain) {
        case Domain::motion: return "motion";
        case Domain::sketch2d: return "sketch2d";
        case Domain::waveform1d: return "waveform1d";
        case Domain::labels: return "labels";
        case Domain::audio: return "audio";
    }
    return "unknown";
}

Domain domain_from_string(const std::string& name) {
    if (name == "motion") return Domain::motion;
    if (name == "sketch2d" || name == "sketch") return Domain::sketch2d;
    if (name == "waveform1d" || name == "waveform") return Domain::waveform1d;
    if (name == "labels") return Domain::labels;
    if (name == "audio") return Domain::audio;
    throw InputError("unknown domain '" + name + "'");
}

void validate(const FeatureSequence& seq) {
    if (!seq.frames.allFinite()) throw InputError("feature sequence contains NaN or Inf");
    if (seq.info.layout.generic_begin() > seq.width()) throw InputError("feature layout wider than the frames");
    if (!(seq.info.fps > 0.0)) throw InputError("fps must be positive");
}

FeatureSequence motion_features(const MotionSequence& motion) {
    const int joints = motion.joint_count();
    FeatureSequence seq;
    seq.info = FeatureInfo{motion.fps(), Domain::motion, FeatureLayout{3, joints}};
    seq.frames.resize(motion.frame_count(), 3 + 9 * joints);
    for (int t = 0; t < motion.frame_count(); ++t) {
        seq.frames.block<1, 3>(t, 0) = motion.displacement(t).transpose();
        for (int j = 0; j < joints; ++j) {
            const Mat3& r = motion.rotation(t, j);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) seq.frames(t, 3 + 9 * j + 3 * a + b) = r(a, b);
        }
    }
    return seq;
}

Vector motion_channel_weights(int joints, const MotionChannelWeights& weights) {
    Vector w(3 + 9 * joints);
    w.head(3).setConstant(weights.displacement);
    w.tail(9 * joints).setConstant(weights.rotation);
    return w;
}

MotionSequence features_to_motion(const FeatureSequence& features, const Skeleton& skeleton) {
    const int joints = skeleton.joint_count();
    if (features.info.layout != FeatureLayout{3, joints} || features.width() != 3 + 9 * joints) {
        throw InputError("feature layout does not match the skeleton");
    }
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> displacement = features.frames.leftCols(3);
    std::vector<Mat3> rotations(static_cast<size_t>(features.length()) * joints);
    for (int t = 0; t < features.length(); ++t) {
        for (int j = 0; j < joints; ++j) {
            Mat3& r = rotations[static_cast<size_t>(t) * joints + j];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) r(a, b) = features.frames(t, 3 + 9 * j + 3 * a + b);
        }
    }
    return MotionSequence(skeleton, std::move(displacement), std::move(rotations), features.info.fps);
}

}  // namespace mamm
