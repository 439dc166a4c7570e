#include "msma/harness.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace msma;
namespace fs = std::filesystem;

namespace {

SensorSpec forward_camera(const std::string& id, double clutter, double sigma, double miss) {
    SensorSpec s;
    s.sensor_id = id;
    s.mount.translation = Vec3(0, 0, 1.6);
    s.camera = CameraCalibration::make(120, 120, 80, 60, 160, 120);
    s.detection.position_noise_sigma = sigma;
    s.detection.base_miss_rate = miss;
    s.detection.miss_rate_partial = miss > 0 ? 0.3 : 0.0;
    s.detection.clutter_rate = clutter;
    return s;
}

// Small world: two moving cars and one parked truck ahead of the ego, one
// elevated infrastructure camera looking back at the scene.
ScenarioConfig small_scenario(double sigma, double miss, double clutter) {
    ScenarioConfig cfg;
    cfg.duration = 6.0;
    cfg.tick_rate = 10.0;
    cfg.seed = 5;
    cfg.eval.burn_in = 1.0;

    ObjectSpec car1;
    car1.object_id = 1;
    car1.class_label = ClassLabel::kCar;
    car1.motion.position = Vec3(20, -2, 0.75);
    car1.motion.speed = 3.0;
    car1.dimensions = Vec3(4.5, 2.0, 1.5);
    cfg.objects.push_back(car1);

    ObjectSpec car2;
    car2.object_id = 2;
    car2.class_label = ClassLabel::kCar;
    car2.motion.position = Vec3(30, 2, 0.75);
    car2.motion.speed = -2.0;
    car2.dimensions = Vec3(4.5, 2.0, 1.5);
    cfg.objects.push_back(car2);

    ObjectSpec truck;
    truck.object_id = 3;
    truck.class_label = ClassLabel::kTruck;
    truck.motion.position = Vec3(40, 0, 1.75);
    truck.dimensions = Vec3(8, 3, 3.5);
    cfg.objects.push_back(truck);

    AgentSpec ego;
    ego.agent_id = "ego";
    ego.kind = AgentKind::kEgoVehicle;
    ego.motion = MotionSpec{};
    ego.motion->position = Vec3(0, 0, 0);
    ego.motion->speed = 1.0;
    ego.sensors.push_back(forward_camera("cam", clutter, sigma, miss));
    cfg.agents.push_back(ego);

    AgentSpec infra;
    infra.agent_id = "rsu_1";
    infra.kind = AgentKind::kInfrastructure;
    infra.pose = PlacementPose{Vec3(60, 8, 6), -2.8, 0.35};
    infra.sensors.push_back(forward_camera("cam", clutter, sigma, miss));
    cfg.agents.push_back(infra);

    return cfg;
}

}  // namespace

TEST_CASE("run_in_memory: identical specs produce byte-identical outputs") {
    const ScenarioConfig cfg = small_scenario(0.4, 0.05, 0.4);
    const TopologyModel topo = TopologyModel::make(TopologyModel::Kind::kMinorCorrelation);

    std::ostringstream frames_a, frames_b;
    LineSink sink_a = [&](const std::string& l) { frames_a << l << "\n"; };
    LineSink sink_b = [&](const std::string& l) { frames_b << l << "\n"; };

    const RunMetrics a = run_in_memory(cfg, EgoModel::kFusionPostTracking, topo, 0, &sink_a);
    const RunMetrics b = run_in_memory(cfg, EgoModel::kFusionPostTracking, topo, 0, &sink_b);

    CHECK(metrics_to_json(a, nullptr, cfg.seed) == metrics_to_json(b, nullptr, cfg.seed));
    CHECK(frames_a.str() == frames_b.str());
    CHECK(!frames_a.str().empty());
}

TEST_CASE("run_in_memory: with zero infrastructure, all ego models coincide") {
    ScenarioConfig cfg = small_scenario(0.4, 0.05, 0.4);
    cfg.agents.pop_back();  // drop the infrastructure agent
    const TopologyModel topo = TopologyModel::make(TopologyModel::Kind::kMajorCorrelation);

    const RunMetrics local = run_in_memory(cfg, EgoModel::kLocal, topo, 0);
    const RunMetrics fat = run_in_memory(cfg, EgoModel::kFusionAtTracking, topo, 0);
    const RunMetrics ddf = run_in_memory(cfg, EgoModel::kFusionPostTracking, topo, 0);

    const std::string j_local = metrics_to_json(local, nullptr, cfg.seed);
    CHECK(j_local == metrics_to_json(fat, nullptr, cfg.seed));
    CHECK(j_local == metrics_to_json(ddf, nullptr, cfg.seed));
}

TEST_CASE("run_in_memory: noiseless clutter-free local run reaches mAP 1.0") {
    ScenarioConfig cfg = small_scenario(0.0, 0.0, 0.0);
    const TopologyModel topo = TopologyModel::make(TopologyModel::Kind::kNoCorrelation);
    const RunMetrics m = run_in_memory(cfg, EgoModel::kLocal, topo, 0);
    REQUIRE(m.map.has_value());
    CHECK(*m.map == doctest::Approx(1.0).epsilon(1e-9));
    for (const TickCounts& c : m.per_tick) {
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
        CHECK(c.rms_error < 1e-6);
    }
}

TEST_CASE("evaluate_frames: re-evaluating a frame log reproduces the metrics") {
    const ScenarioConfig cfg = small_scenario(0.3, 0.05, 0.3);
    const TopologyModel topo = TopologyModel::make(TopologyModel::Kind::kNoCorrelation);

    const fs::path dir = fs::temp_directory_path() / "msma_eval_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream frames_file(dir / "frames.jsonl");
    LineSink sink = [&](const std::string& l) { frames_file << l << "\n"; };
    const RunMetrics direct = run_in_memory(cfg, EgoModel::kFusionPostTracking, topo, 0, &sink);
    frames_file.close();

    const RunMetrics replayed =
        evaluate_frames((dir / "frames.jsonl").string(), cfg.eval, cfg.tick_rate);
    CHECK(metrics_to_json(direct, nullptr, 0) == metrics_to_json(replayed, nullptr, 0));
    fs::remove_all(dir);
}

TEST_CASE("export_labels: depth files round-trip and label counts stay bounded") {
    ScenarioConfig cfg = small_scenario(0.0, 0.0, 0.0);
    cfg.duration = 1.0;  // 11 ticks
    const fs::path dir = fs::temp_directory_path() / "msma_export_test";
    fs::remove_all(dir);

    const auto written = export_labels(cfg, dir.string());
    // 2 sensors x 11 ticks x (depth + labels).
    CHECK(written.size() == 2 * 11 * 2);

    int checked_labels = 0;
    for (std::int64_t tick = 0; tick <= cfg.tick_count(); ++tick) {
        const WorldSnapshot snap = world_state_at(cfg, tick);
        const FrameTree frames = build_frame_tree(cfg, snap);
        for (const AgentSpec& agent : cfg.agents) {
            for (const SensorSpec& sensor : agent.sensors) {
                std::string stamp = std::to_string(tick);
                while (stamp.size() < 6) stamp.insert(stamp.begin(), '0');
                const fs::path base = dir / agent.agent_id / sensor.sensor_id;

                // Depth file: header + row-major float payload.
                std::ifstream in(base / ("depth_" + stamp + ".msmd"), std::ios::binary);
                REQUIRE(in.good());
                char magic[4];
                std::uint32_t w = 0, h = 0, reserved = 0;
                in.read(magic, 4);
                in.read(reinterpret_cast<char*>(&w), 4);
                in.read(reinterpret_cast<char*>(&h), 4);
                in.read(reinterpret_cast<char*>(&reserved), 4);
                REQUIRE(std::memcmp(magic, "MSMD", 4) == 0);
                REQUIRE(w == static_cast<std::uint32_t>(sensor.camera.width));
                REQUIRE(h == static_cast<std::uint32_t>(sensor.camera.height));
                DepthImage depth;
                depth.width = static_cast<int>(w);
                depth.height = static_cast<int>(h);
                depth.values.resize(static_cast<std::size_t>(w) * h);
                in.read(reinterpret_cast<char*>(depth.values.data()),
                        static_cast<std::streamsize>(depth.values.size() * sizeof(float)));
                REQUIRE(in.good());

                // Labels re-validate against the exported depth image.
                std::ifstream lf(base / ("labels_" + stamp + ".json"));
                REQUIRE(lf.good());
                nlohmann::json doc = nlohmann::json::parse(lf);
                const std::string frame = agent.agent_id + "/" + sensor.sensor_id;
                const Pose cam = frames.transform_to(frame, "world");
                CHECK(doc["labels"].size() <= snap.objects.size());
                for (const auto& label : doc["labels"]) {
                    BoundingBox3D box;
                    for (const BoundingBox3D& b : snap.objects) {
                        if (b.object_id == label["object_id"].get<std::int64_t>()) box = b;
                    }
                    const OcclusionResult occ =
                        occlusion_by_depth(box, sensor.camera, cam, depth, cfg.visibility);
                    CHECK(to_string(occ.category) == label["occlusion"].get<std::string>());
                    CHECK(occ.ratio == doctest::Approx(label["ratio"].get<double>()));
                    ++checked_labels;
                }
            }
        }
    }
    CHECK(checked_labels > 0);
    fs::remove_all(dir);
}

TEST_CASE("run_matrix: one scenario, one seed matches individual runs") {
    const ScenarioConfig cfg = small_scenario(0.3, 0.05, 0.3);
    const fs::path dir = fs::temp_directory_path() / "msma_matrix_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path scenario_path = dir / "scenario.json";
    {
        std::ofstream out(scenario_path);
        out << serialize_scenario(cfg);
    }

    const MatrixResult result = run_matrix({scenario_path.string()}, 1, (dir / "out").string());
    CHECK(result.cells.size() == 9);

    ScenarioConfig seeded = cfg;
    seeded.seed = 1;
    const RunMetrics direct = run_in_memory(
        seeded, EgoModel::kLocal, TopologyModel::make(TopologyModel::Kind::kNoCorrelation), 0);
    const MatrixCell& cell =
        result.cell(EgoModel::kLocal, TopologyModel::Kind::kNoCorrelation);
    REQUIRE(cell.runs.size() == 1);
    CHECK(cell.map_mean == doctest::Approx(*direct.map).epsilon(1e-12));
    CHECK(fs::exists(dir / "out" / "matrix.json"));
    CHECK(fs::exists(dir / "out" / "matrix.txt"));
    fs::remove_all(dir);
}
