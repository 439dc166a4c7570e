#include "msma/scenario.hpp"
#include "msma/sensing.hpp"

#include <doctest.h>

#include <cmath>

using namespace msma;

namespace {

// One ego with a single forward camera 30 m from a lone parked car.
ScenarioConfig sensing_scenario(double sigma, double miss_none, double clutter) {
    ScenarioConfig cfg;
    cfg.duration = 1000.0;
    cfg.tick_rate = 10.0;
    cfg.seed = 77;

    ObjectSpec obj;
    obj.object_id = 1;
    obj.class_label = ClassLabel::kCar;
    obj.motion.position = Vec3(30, 0, 0.75);
    obj.dimensions = Vec3(4.5, 2.0, 1.5);
    cfg.objects.push_back(obj);

    AgentSpec ego;
    ego.agent_id = "ego";
    ego.kind = AgentKind::kEgoVehicle;
    ego.motion = MotionSpec{};
    SensorSpec cam;
    cam.sensor_id = "cam";
    cam.mount.translation = Vec3(0, 0, 1.6);
    cam.camera = CameraCalibration::make(150, 150, 80, 60, 160, 120, "ego/cam");
    cam.detection.position_noise_sigma = sigma;
    cam.detection.base_miss_rate = miss_none;
    cam.detection.clutter_rate = clutter;
    ego.sensors.push_back(cam);
    cfg.agents.push_back(ego);
    return cfg;
}

}  // namespace

TEST_CASE("sense: noiseless limit reproduces ground-truth centers") {
    const ScenarioConfig cfg = sensing_scenario(0.0, 0.0, 0.0);
    const WorldSnapshot snap = world_state_at(cfg, 0);
    const FrameTree frames = build_frame_tree(cfg, snap);
    const auto dets = sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility);
    REQUIRE(dets.size() == 1);
    CHECK((dets[0].position - snap.objects[0].center).norm() < 1e-9);
    CHECK(dets[0].class_label == ClassLabel::kCar);
    CHECK(!dets[0].is_clutter);
    // Reported covariance stays SPD even with sigma = 0.
    CHECK(dets[0].covariance(0, 0) >= kMinDetectionVariance);
}

TEST_CASE("sense: COMPLETE-occluded objects are never detected") {
    ScenarioConfig cfg = sensing_scenario(0.0, 0.0, 0.0);
    // Wall between the camera and the car.
    ObjectSpec wall;
    wall.object_id = 2;
    wall.class_label = ClassLabel::kTruck;
    wall.motion.position = Vec3(15, 0, 2);
    wall.dimensions = Vec3(0.8, 12, 4);
    cfg.objects.push_back(wall);

    int car_detections = 0;
    for (std::int64_t tick = 0; tick < 50; ++tick) {
        const WorldSnapshot snap = world_state_at(cfg, tick);
        const FrameTree frames = build_frame_tree(cfg, snap);
        for (const Detection& d : sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility)) {
            if (!d.is_clutter && (d.position - snap.objects[0].center).norm() < 2.0) {
                ++car_detections;
            }
        }
    }
    CHECK(car_detections == 0);
}

TEST_CASE("sense: no detections beyond max_range") {
    ScenarioConfig cfg = sensing_scenario(0.0, 0.0, 0.0);
    cfg.objects[0].motion.position = Vec3(150, 0, 0.75);  // beyond the 100 m default
    const WorldSnapshot snap = world_state_at(cfg, 0);
    const FrameTree frames = build_frame_tree(cfg, snap);
    CHECK(sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility).empty());
}

TEST_CASE("sense: determinism for identical (seed, agent, tick)") {
    const ScenarioConfig cfg = sensing_scenario(0.5, 0.1, 1.0);
    const WorldSnapshot snap = world_state_at(cfg, 17);
    const FrameTree frames = build_frame_tree(cfg, snap);
    const auto a = sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility);
    const auto b = sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].position == b[i].position);
        CHECK(a[i].is_clutter == b[i].is_clutter);
    }
}

TEST_CASE("sense: Monte Carlo miss fraction and position spread match the model") {
    const double sigma = 0.5;
    const ScenarioConfig cfg = sensing_scenario(sigma, 0.05, 0.0);
    const FrameTree frames = build_frame_tree(cfg, world_state_at(cfg, 0));

    int misses = 0;
    double sq_err = 0.0;
    int hits = 0;
    const int n = 10000;
    for (int tick = 0; tick < n; ++tick) {
        const WorldSnapshot snap = world_state_at(cfg, tick);
        const auto dets = sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility);
        if (dets.empty()) {
            ++misses;
            continue;
        }
        ++hits;
        sq_err += (dets[0].position - snap.objects[0].center).squaredNorm();
    }
    const double miss_fraction = static_cast<double>(misses) / n;
    CHECK(miss_fraction == doctest::Approx(0.05).epsilon(0.2));
    CHECK(std::abs(miss_fraction - 0.05) < 0.01);

    // Per-axis RMS within 5% of sigma (3 axes pooled).
    const double rms = std::sqrt(sq_err / (3.0 * hits));
    CHECK(std::abs(rms - sigma) / sigma < 0.05);
}

TEST_CASE("sense: clutter count is Poisson with the configured rate") {
    const double rate = 0.7;
    const ScenarioConfig cfg = sensing_scenario(0.3, 1.0, rate);  // always miss the car
    const FrameTree frames = build_frame_tree(cfg, world_state_at(cfg, 0));
    std::int64_t total = 0;
    const int n = 5000;
    for (int tick = 0; tick < n; ++tick) {
        const WorldSnapshot snap = world_state_at(cfg, tick);
        for (const Detection& d : sense(snap, frames, cfg.agents[0], cfg.seed, cfg.visibility)) {
            CHECK(d.is_clutter);
            ++total;
        }
    }
    CHECK(static_cast<double>(total) / n == doctest::Approx(rate).epsilon(0.06));
}
