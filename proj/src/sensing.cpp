#include "msma/sensing.hpp"

#include "msma/errors.hpp"
#include "msma/rng.hpp"
#include "msma/scenario.hpp"

#include <cmath>

namespace msma {

double DetectionModel::miss_rate(Occlusion occ) const {
    switch (occ) {
        case Occlusion::kNone: return base_miss_rate;
        case Occlusion::kPartial: return miss_rate_partial;
        case Occlusion::kMost: return miss_rate_most;
        case Occlusion::kComplete: return miss_rate_complete;
        case Occlusion::kNotInView: return 1.0;
    }
    return 1.0;
}

void DetectionModel::validate() const {
    for (double p : {base_miss_rate, miss_rate_partial, miss_rate_most, miss_rate_complete}) {
        if (p < 0.0 || p > 1.0) throw ValidationError("miss rates must be probabilities");
    }
    if (position_noise_sigma < 0.0) throw ValidationError("position_noise_sigma must be >= 0");
    if (clutter_rate < 0.0) throw ValidationError("clutter_rate must be >= 0");
    if (max_range <= 0.0) throw ValidationError("max_range must be positive");
}

std::vector<Detection> sense(const WorldSnapshot& snapshot, const FrameTree& frames,
                             const AgentSpec& agent, std::uint64_t scenario_seed,
                             const VisibilityConfig& visibility) {
    RngStream rng(RngStream::derive_key(scenario_seed, "sense/" + agent.agent_id,
                                        static_cast<std::uint64_t>(snapshot.tick)));
    std::vector<Detection> out;

    static const ClassLabel kClasses[] = {ClassLabel::kCar, ClassLabel::kPedestrian,
                                          ClassLabel::kTruck};

    for (const SensorSpec& sensor : agent.sensors) {
        const std::string frame = sensor_frame_id(agent, sensor);
        const Pose world_from_cam = frames.transform_to(frame, "world");
        const Pose cam_from_world = frames.transform_to("world", frame);
        const DetectionModel& model = sensor.detection;

        const DepthImage depth = render_depth(snapshot.objects, sensor.camera, world_from_cam);

        for (const BoundingBox3D& obj : snapshot.objects) {
            const double range = (obj.center - world_from_cam.translation).norm();
            if (range > model.max_range) continue;
            const OcclusionResult occ =
                occlusion_by_depth(obj, sensor.camera, world_from_cam, depth, visibility);
            if (occ.category == Occlusion::kNotInView) continue;

            if (rng.uniform() < model.miss_rate(occ.category)) continue;

            Vec3 p = cam_from_world.apply(obj.center);
            p += model.position_noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());

            Detection det;
            det.sensor_id = frame;
            det.tick = snapshot.tick;
            det.position = world_from_cam.apply(p);
            det.covariance =
                std::max(model.position_noise_sigma * model.position_noise_sigma,
                         kMinDetectionVariance) *
                Mat3::Identity();
            det.class_label = obj.class_label;
            det.is_clutter = false;
            out.push_back(std::move(det));
        }

        // Clutter: uniform over the frustum footprint on the ground plane.
        const int n_clutter = rng.poisson(model.clutter_rate);
        const Vec3 fwd_world = world_from_cam.rotation.col(2);  // camera +z in world
        const double cam_yaw = std::atan2(fwd_world.y(), fwd_world.x());
        const double half_fov = std::atan2(0.5 * sensor.camera.width, sensor.camera.fx());
        for (int i = 0; i < n_clutter; ++i) {
            const double az = rng.uniform(-half_fov, half_fov);
            const double ground_range = rng.uniform(1.0, model.max_range);
            const std::size_t cls = std::min<std::size_t>(2, static_cast<std::size_t>(rng.uniform() * 3.0));

            Detection det;
            det.sensor_id = frame;
            det.tick = snapshot.tick;
            det.position = Vec3(world_from_cam.translation.x(), world_from_cam.translation.y(), 0.0) +
                           ground_range * Vec3(std::cos(cam_yaw + az), std::sin(cam_yaw + az), 0.0);
            det.covariance =
                std::max(model.position_noise_sigma * model.position_noise_sigma,
                         kMinDetectionVariance) *
                Mat3::Identity();
            det.class_label = kClasses[cls];
            det.is_clutter = true;
            out.push_back(std::move(det));
        }
    }
    return out;
}

}  // namespace msma
