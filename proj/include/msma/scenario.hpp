#pragma once

#include "msma/geometry.hpp"
#include "msma/sensing.hpp"
#include "msma/visibility.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace msma {

// ============================================================
// World definition: objects, maneuvers, agents, clock
// ============================================================

enum class ManeuverKind { kLaneChange, kAccelStep };

struct ManeuverEvent {
    double time = 0.0;  // s
    ManeuverKind kind = ManeuverKind::kLaneChange;
    // lane_change: ramp the lateral offset (m, left-positive) to
    // `lateral_offset` linearly over `over` seconds.
    double lateral_offset = 0.0;
    double over = 1.0;
    // accel_step: add `delta` m/s^2 to the acceleration for `hold` seconds.
    double delta = 0.0;
    double hold = 1.0;
};

// Straight-line kinematics on the ground plane: constant velocity along a
// fixed heading, plus maneuver ramps. Overlapping accel steps compose
// additively; overlapping lane changes are last-wins on the target offset.
struct MotionSpec {
    Vec3 position = Vec3::Zero();  // initial; z is carried through unchanged
    double heading = 0.0;          // rad, fixed
    double speed = 0.0;            // m/s, initial
    std::vector<ManeuverEvent> events;
};

// Position and along-track speed at time t (closed form).
struct MotionState {
    Vec3 position;
    double heading;
    double speed;
};
MotionState motion_at(const MotionSpec& motion, double t);

struct ObjectSpec {
    std::int64_t object_id = 0;
    ClassLabel class_label = ClassLabel::kCar;
    MotionSpec motion;
    Vec3 dimensions = Vec3(4.5, 2.0, 1.5);  // length, width, height
};

struct MountPose {
    Vec3 translation = Vec3::Zero();  // in the agent frame
    double yaw = 0.0;
    double pitch = 0.0;  // downward-positive
};

struct SensorSpec {
    std::string sensor_id;
    MountPose mount;
    CameraCalibration camera;
    DetectionModel detection;
};

enum class AgentKind { kEgoVehicle, kInfrastructure };

struct PlacementPose {
    Vec3 position = Vec3::Zero();  // world; infrastructure is typically elevated
    double yaw = 0.0;
    double pitch = 0.0;  // downward-positive
};

struct AgentSpec {
    std::string agent_id;
    AgentKind kind = AgentKind::kInfrastructure;
    std::optional<MotionSpec> motion;     // ego only
    std::optional<PlacementPose> pose;    // infrastructure only; static per scene
    std::vector<SensorSpec> sensors;
};

struct TrackerParams {
    double process_noise_q = 1.0;  // white-acceleration intensity
    double gate = 9.21;            // chi-square association gate
    int confirm_m = 3;             // M-of-N confirmation
    int confirm_n = 5;
    int max_misses = 3;
    double birth_velocity_var = 100.0;  // m^2/s^2 diffuse prior
    // Remote-seeded births are dropped within this Euclidean distance of an
    // existing track; one-to-one assignment leftovers would otherwise
    // duplicate tracks the ego already holds.
    double remote_birth_separation = 2.0;  // m

    void validate() const;
};

struct EvalParams {
    double range_gate = 75.0;     // m around the ego agent
    double burn_in = 2.0;         // s excluded from evaluation
    double match_distance = 2.0;  // m track-to-truth matching threshold

    void validate(double duration) const;
};

struct ScenarioConfig {
    double duration = 10.0;    // s
    double tick_rate = 10.0;   // Hz
    std::uint64_t seed = 0;
    std::string rng = "splitmix64";
    std::vector<ObjectSpec> objects;
    std::vector<AgentSpec> agents;
    VisibilityConfig visibility;
    TrackerParams tracker;
    EvalParams eval;

    std::int64_t tick_count() const;  // last valid tick index
    double tick_duration() const { return 1.0 / tick_rate; }
    std::size_t ego_index() const;    // validated: exactly one ego

    void validate() const;
};

struct WorldSnapshot {
    std::int64_t tick = 0;
    double time = 0.0;
    std::vector<BoundingBox3D> objects;  // world frame
    Pose ego_pose;                       // ego body frame in world
};

// Deterministic kinematic propagation of every object plus the ego pose.
// Throws TickOutOfRange outside [0, duration * tick_rate].
WorldSnapshot world_state_at(const ScenarioConfig& cfg, std::int64_t tick);

// Frame chain for one tick: world -> agent frames -> "<agent>/<sensor>"
// camera frames. Camera frames use +z forward, +x right, +y down.
FrameTree build_frame_tree(const ScenarioConfig& cfg, const WorldSnapshot& snapshot);

std::string sensor_frame_id(const AgentSpec& agent, const SensorSpec& sensor);

// Strict JSON parsing: unknown keys are a ParseError, invariant violations a
// ValidationError. serialize_scenario emits the normalized form (defaults
// materialized, fixed key order), so serialize(parse(x)) is a fixed point.
ScenarioConfig parse_scenario(const std::string& text);
std::string serialize_scenario(const ScenarioConfig& cfg);
ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace msma
