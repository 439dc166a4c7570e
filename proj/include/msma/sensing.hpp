#pragma once

#include "msma/geometry.hpp"
#include "msma/visibility.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace msma {

class FrameTree;
struct WorldSnapshot;
struct AgentSpec;

// ============================================================
// Parametric noisy-detection model
// ============================================================

// Stand-in for a trained perception stack: per-axis Gaussian position noise,
// occlusion-dependent miss rates, Poisson clutter. The model is honest: the
// covariance it reports is the covariance it draws from (floored at a tiny
// variance so downstream SPD invariants hold in the noiseless limit).
struct DetectionModel {
    double position_noise_sigma = 0.5;  // m, per axis
    double base_miss_rate = 0.05;       // miss probability for unoccluded objects
    double miss_rate_partial = 0.3;
    double miss_rate_most = 0.8;
    double miss_rate_complete = 1.0;
    double clutter_rate = 0.5;  // expected false positives per frame
    double max_range = 100.0;   // m

    double miss_rate(Occlusion occ) const;
    void validate() const;
};

// Minimum reported position variance (m^2); keeps Detection covariance SPD
// when position_noise_sigma == 0.
constexpr double kMinDetectionVariance = 1e-9;

struct Detection {
    std::string sensor_id;  // "<agent>/<sensor>"
    std::int64_t tick = 0;
    Vec3 position = Vec3::Zero();     // world frame, registered via the frame chain
    Mat3 covariance = Mat3::Identity();  // SPD
    ClassLabel class_label = ClassLabel::kCar;
    bool is_clutter = false;  // ground-truth bookkeeping only; fusion never reads it
};

// Simulates one agent's sensors for one tick. The random stream is derived
// from (scenario seed, agent id, tick) only, so sensing draws are identical
// across ego-model and topology variations.
std::vector<Detection> sense(const WorldSnapshot& snapshot, const FrameTree& frames,
                             const AgentSpec& agent, std::uint64_t scenario_seed,
                             const VisibilityConfig& visibility);

}  // namespace msma
