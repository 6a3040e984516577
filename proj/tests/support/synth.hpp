#pragma once

#include <random>
#include <vector>

#include "mamm/motion.hpp"

namespace synth {

// 25-joint humanoid, root with 6 channels, every joint ZXY.
mamm::Skeleton humanoid();

struct GaitParams {
    double period = 30.0;     // frames per full stride
    double speed = 1.5;       // forward units per frame
    double swing = 30.0;      // hip swing amplitude, degrees
    double phase = 0.0;       // radians
    double turn_rate = 0.0;   // degrees of heading per frame
};

mamm::BvhClip walk(int frames, const GaitParams& gait = {}, double fps = 30.0);

// Repeated hops on the spot.
mamm::BvhClip jump(int frames, double period = 40.0, double fps = 30.0);

// Frames of b appended to a (same skeleton).
mamm::BvhClip concat(const mamm::BvhClip& a, const mamm::BvhClip& b);

// Smooth random joint angles; the middle Euler angle stays inside (-85, 85)
// so channel values have a unique representation.
mamm::BvhClip random_clip(int frames, std::mt19937_64& rng, double fps = 30.0);

}  // namespace synth
