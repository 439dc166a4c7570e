#include "msma/harness.hpp"

#include "msma/errors.hpp"
#include "msma/rng.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace msma {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

ordered_json mean_json(const Vec6& v) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < 6; ++i) a.push_back(v[i]);
    return a;
}

ordered_json track_json(const Track& t) {
    ordered_json j;
    j["track_id"] = t.track_id;
    j["class"] = to_string(t.class_label);
    j["status"] = t.status == TrackStatus::kConfirmed ? "confirmed" : "tentative";
    j["hits"] = t.hits;
    j["age"] = t.age;
    j["score"] = t.score();
    j["mean"] = mean_json(t.estimate.mean);
    return j;
}

std::vector<RemoteTrack> payload_from(const Tracker& tracker) {
    std::vector<RemoteTrack> out;
    for (const Track& t : tracker.confirmed()) {
        out.push_back(RemoteTrack{t.track_id, t.estimate, t.class_label});
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

RunMetrics run_in_memory(const ScenarioConfig& cfg, EgoModel ego_model,
                         const TopologyModel& topology, int latency_ticks,
                         const LineSink* frame_sink, const LineSink* message_sink) {
    const double dt = cfg.tick_duration();
    const std::size_t ego_idx = cfg.ego_index();
    const std::string& ego_id = cfg.agents[ego_idx].agent_id;

    std::vector<std::string> infra_ids;
    std::vector<std::size_t> infra_agent_idx;
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
        if (cfg.agents[i].kind == AgentKind::kInfrastructure) {
            infra_ids.push_back(cfg.agents[i].agent_id);
            infra_agent_idx.push_back(i);
        }
    }

    std::vector<Tracker> trackers;
    trackers.reserve(cfg.agents.size());
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
        trackers.emplace_back(cfg.tracker, dt);
    }

    MessageQueue queue(latency_ticks);
    Evaluator evaluator(cfg.eval, cfg.tick_rate);

    const std::int64_t last_tick = cfg.tick_count();
    for (std::int64_t tick = 0; tick <= last_tick; ++tick) {
        const WorldSnapshot snap = world_state_at(cfg, tick);
        const FrameTree frames = build_frame_tree(cfg, snap);

        std::vector<std::vector<Detection>> detections(cfg.agents.size());
        for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
            detections[i] = sense(snap, frames, cfg.agents[i], cfg.seed, cfg.visibility);
            trackers[i].step(detections[i]);
        }

        // Network tick: crosstalk exchange first, then the ego-bound reports,
        // which therefore carry any correlation absorbed this tick.
        RngStream net_rng(
            RngStream::derive_key(cfg.seed, "net", static_cast<std::uint64_t>(tick)));
        std::vector<Message> sent;
        const auto edges =
            crosstalk_plan(static_cast<int>(infra_ids.size()), topology, net_rng);
        for (const auto& [i, j] : edges) {
            Message m{infra_ids[i], infra_ids[j], tick,
                      payload_from(trackers[infra_agent_idx[i]])};
            sent.push_back(m);
            queue.send(std::move(m));
        }
        for (std::size_t j = 0; j < infra_ids.size(); ++j) {
            const auto msgs = queue.take_delivered(infra_ids[j], tick);
            ingest_crosstalk(trackers[infra_agent_idx[j]], msgs);
        }
        for (std::size_t i = 0; i < infra_ids.size(); ++i) {
            Message m{infra_ids[i], ego_id, tick, payload_from(trackers[infra_agent_idx[i]])};
            sent.push_back(m);
            queue.send(std::move(m));
        }

        const auto ego_msgs = queue.take_delivered(ego_id, tick);
        switch (ego_model) {
            case EgoModel::kLocal:
                break;
            case EgoModel::kFusionAtTracking:
                for (const Message& m : ego_msgs) {
                    fuse_at_tracking(trackers[ego_idx], m.payload, m.sender_id, tick);
                }
                break;
            case EgoModel::kFusionPostTracking:
                for (const Message& m : ego_msgs) {
                    fuse_post_tracking(trackers[ego_idx], m.payload);
                }
                break;
        }

        const std::vector<Track> ego_tracks = trackers[ego_idx].confirmed();
        evaluator.add_frame(tick, ego_tracks, snap.objects, snap.ego_pose.translation);

        if (message_sink) {
            for (const Message& m : sent) {
                ordered_json j;
                j["tick"] = tick;
                j["sender"] = m.sender_id;
                j["receiver"] = m.receiver_id;
                j["payload_size"] = m.payload.size();
                (*message_sink)(j.dump());
            }
        }
        if (frame_sink) {
            ordered_json j;
            j["tick"] = tick;
            j["time"] = snap.time;
            ordered_json ego_pose;
            ego_pose["translation"] = vec_json(snap.ego_pose.translation);
            ordered_json rot = ordered_json::array();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) rot.push_back(snap.ego_pose.rotation(r, c));
            ego_pose["rotation"] = std::move(rot);
            j["ego_pose"] = std::move(ego_pose);

            ordered_json truth = ordered_json::array();
            for (const BoundingBox3D& b : snap.objects) {
                ordered_json o;
                o["object_id"] = b.object_id;
                o["class"] = to_string(b.class_label);
                o["center"] = vec_json(b.center);
                o["dimensions"] = vec_json(b.dimensions);
                o["yaw"] = b.yaw;
                truth.push_back(std::move(o));
            }
            j["truth"] = std::move(truth);

            ordered_json agents;
            for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
                ordered_json a;
                ordered_json dets = ordered_json::array();
                for (const Detection& d : detections[i]) {
                    ordered_json dj;
                    dj["sensor_id"] = d.sensor_id;
                    dj["position"] = vec_json(d.position);
                    dj["class"] = to_string(d.class_label);
                    dj["is_clutter"] = d.is_clutter;
                    dets.push_back(std::move(dj));
                }
                a["detections"] = std::move(dets);
                ordered_json tracks = ordered_json::array();
                for (const Track& t : trackers[i].tracks()) tracks.push_back(track_json(t));
                a["tracks"] = std::move(tracks);
                agents[cfg.agents[i].agent_id] = std::move(a);
            }
            j["agents"] = std::move(agents);

            ordered_json ego_arr = ordered_json::array();
            for (const Track& t : ego_tracks) ego_arr.push_back(track_json(t));
            j["ego_tracks"] = std::move(ego_arr);
            (*frame_sink)(j.dump());
        }
    }
    return evaluator.finish();
}

std::string metrics_to_json(const RunMetrics& metrics, const RunSpec* spec,
                            std::uint64_t seed) {
    ordered_json j;
    if (spec) {
        ordered_json s;
        s["scenario"] = spec->scenario_path;
        s["ego"] = to_string(spec->ego_model);
        s["topology"] = to_string(spec->topology);
        s["seed"] = seed;
        s["latency_ticks"] = spec->latency_ticks;
        j["spec"] = std::move(s);
    }
    ordered_json ap;
    for (const auto& [cls, value] : metrics.per_class_ap) {
        if (value) {
            ap[to_string(cls)] = *value;
        } else {
            ap[to_string(cls)] = nullptr;
        }
    }
    j["per_class_ap"] = std::move(ap);
    if (metrics.map) {
        j["map"] = *metrics.map;
    } else {
        j["map"] = nullptr;
    }
    ordered_json ticks = ordered_json::array();
    for (const TickCounts& c : metrics.per_tick) {
        ordered_json t;
        t["tick"] = c.tick;
        t["tp"] = c.tp;
        t["fp"] = c.fp;
        t["fn"] = c.fn;
        t["rms_error"] = c.rms_error;
        ticks.push_back(std::move(t));
    }
    j["per_tick"] = std::move(ticks);
    return j.dump(2) + "\n";
}

std::string metrics_to_csv(const RunMetrics& metrics) {
    std::ostringstream out;
    out << "tick,tp,fp,fn,rms_error\n";
    for (const TickCounts& c : metrics.per_tick) {
        out << c.tick << "," << c.tp << "," << c.fp << "," << c.fn << ","
            << ordered_json(c.rms_error).dump() << "\n";
    }
    return out.str();
}

RunResult run(const RunSpec& spec) {
    ScenarioConfig cfg = load_scenario_file(spec.scenario_path);
    if (spec.seed_override) cfg.seed = *spec.seed_override;
    TopologyModel topo = TopologyModel::make(spec.topology);
    if (spec.crosstalk_override) topo.infra_crosstalk_probability = *spec.crosstalk_override;
    topo.validate();

    RunResult result;
    result.seed = cfg.seed;

    std::ostringstream frames, messages;
    LineSink frames_sink = [&](const std::string& line) { frames << line << "\n"; };
    LineSink messages_sink = [&](const std::string& line) { messages << line << "\n"; };

    result.metrics = run_in_memory(cfg, spec.ego_model, topo, spec.latency_ticks,
                                   spec.log_frames ? &frames_sink : nullptr,
                                   spec.log_messages ? &messages_sink : nullptr);

    if (!spec.out_dir.empty()) {
        fs::create_directories(spec.out_dir);
        const fs::path dir(spec.out_dir);
        write_file(dir / "metrics.json", metrics_to_json(result.metrics, &spec, cfg.seed));
        result.written_files.push_back((dir / "metrics.json").string());
        write_file(dir / "metrics.csv", metrics_to_csv(result.metrics));
        result.written_files.push_back((dir / "metrics.csv").string());
        if (spec.log_frames) {
            write_file(dir / "frames.jsonl", frames.str());
            result.written_files.push_back((dir / "frames.jsonl").string());
        }
        if (spec.log_messages) {
            write_file(dir / "messages.jsonl", messages.str());
            result.written_files.push_back((dir / "messages.jsonl").string());
        }
    }
    return result;
}

// ------------------------------------------------------------
// Experiment matrix
// ------------------------------------------------------------

const MatrixCell& MatrixResult::cell(EgoModel ego, TopologyModel::Kind topo) const {
    for (const MatrixCell& c : cells) {
        if (c.ego_model == ego && c.topology == topo) return c;
    }
    throw std::runtime_error("matrix cell not found");
}

namespace {

int thread_budget() {
    if (const char* env = std::getenv("MSMA_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

MatrixResult run_matrix(const std::vector<std::string>& scenario_paths, int n_seeds,
                        const std::string& out_dir) {
    if (scenario_paths.empty()) throw ValidationError("matrix requires at least one scenario");
    if (n_seeds <= 0) throw ValidationError("matrix requires at least one seed");

    const EgoModel egos[] = {EgoModel::kLocal, EgoModel::kFusionAtTracking,
                             EgoModel::kFusionPostTracking};
    const TopologyModel::Kind topos[] = {TopologyModel::Kind::kNoCorrelation,
                                         TopologyModel::Kind::kMinorCorrelation,
                                         TopologyModel::Kind::kMajorCorrelation};

    std::vector<ScenarioConfig> configs;
    for (const std::string& path : scenario_paths) configs.push_back(load_scenario_file(path));

    MatrixResult result;
    result.scenarios = scenario_paths;
    result.n_seeds = n_seeds;

    struct Job {
        std::size_t cell;
        std::size_t scenario;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < 9; ++c) {
        MatrixCell cell;
        cell.ego_model = egos[c / 3];
        cell.topology = topos[c % 3];
        cell.runs.resize(scenario_paths.size() * n_seeds);
        result.cells.push_back(std::move(cell));
        for (std::size_t s = 0; s < scenario_paths.size(); ++s) {
            for (int k = 0; k < n_seeds; ++k) {
                jobs.push_back(Job{c, s, static_cast<std::uint64_t>(k + 1)});
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size() || failed.load()) break;
            const Job& job = jobs[i];
            try {
                ScenarioConfig cfg = configs[job.scenario];
                cfg.seed = job.seed;
                const RunMetrics metrics =
                    run_in_memory(cfg, result.cells[job.cell].ego_model,
                                  TopologyModel::make(result.cells[job.cell].topology), 0);
                if (!metrics.map) {
                    throw std::runtime_error("matrix run produced no mAP (empty ground truth): " +
                                             scenario_paths[job.scenario]);
                }
                MatrixRun& slot =
                    result.cells[job.cell].runs[job.scenario * n_seeds + (job.seed - 1)];
                slot.scenario = scenario_paths[job.scenario];
                slot.seed = job.seed;
                slot.map = *metrics.map;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                if (failure.empty()) failure = e.what();
            }
        }
    };

    const int n_threads = std::min<int>(thread_budget(), static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failed.load()) throw std::runtime_error("matrix run failed: " + failure);

    for (MatrixCell& cell : result.cells) {
        double sum = 0.0;
        for (const MatrixRun& r : cell.runs) sum += r.map;
        const double n = static_cast<double>(cell.runs.size());
        cell.map_mean = sum / n;
        double sq = 0.0;
        for (const MatrixRun& r : cell.runs) sq += (r.map - cell.map_mean) * (r.map - cell.map_mean);
        cell.map_stderr = cell.runs.size() > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0;
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "matrix.json", matrix_to_json(result));
        write_file(fs::path(out_dir) / "matrix.txt", matrix_to_text(result));
    }
    return result;
}

std::string matrix_to_json(const MatrixResult& m) {
    ordered_json j;
    j["scenarios"] = m.scenarios;
    j["seeds"] = m.n_seeds;
    ordered_json cells = ordered_json::array();
    for (const MatrixCell& c : m.cells) {
        ordered_json cj;
        cj["ego"] = to_string(c.ego_model);
        cj["topology"] = to_string(c.topology);
        cj["map_mean"] = c.map_mean;
        cj["map_stderr"] = c.map_stderr;
        ordered_json runs = ordered_json::array();
        for (const MatrixRun& r : c.runs) {
            ordered_json rj;
            rj["scenario"] = r.scenario;
            rj["seed"] = r.seed;
            rj["map"] = r.map;
            runs.push_back(std::move(rj));
        }
        cj["runs"] = std::move(runs);
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

std::string matrix_to_text(const MatrixResult& m) {
    std::ostringstream out;
    out << "mAP (mean +/- stderr) over " << m.scenarios.size() << " scenario(s) x " << m.n_seeds
        << " seed(s)\n\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-14s %-22s %-22s %-22s\n", "ego \\ topology", "none",
                  "minor", "major");
    out << buf;
    const TopologyModel::Kind topos[] = {TopologyModel::Kind::kNoCorrelation,
                                         TopologyModel::Kind::kMinorCorrelation,
                                         TopologyModel::Kind::kMajorCorrelation};
    for (EgoModel ego : {EgoModel::kLocal, EgoModel::kFusionAtTracking,
                         EgoModel::kFusionPostTracking}) {
        std::snprintf(buf, sizeof(buf), "%-14s", to_string(ego));
        out << buf;
        for (TopologyModel::Kind topo : topos) {
            const MatrixCell& c = m.cell(ego, topo);
            std::snprintf(buf, sizeof(buf), " %.4f +/- %.4f    ", c.map_mean, c.map_stderr);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

// ------------------------------------------------------------
// Label export and frame-log re-evaluation
// ------------------------------------------------------------

namespace {

std::string zero_pad(std::int64_t value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

std::string depth_to_bytes(const DepthImage& depth) {
    std::string bytes;
    bytes.resize(16 + depth.values.size() * sizeof(float));
    std::memcpy(bytes.data(), "MSMD", 4);
    const std::uint32_t w = static_cast<std::uint32_t>(depth.width);
    const std::uint32_t h = static_cast<std::uint32_t>(depth.height);
    const std::uint32_t reserved = 0;
    std::memcpy(bytes.data() + 4, &w, 4);
    std::memcpy(bytes.data() + 8, &h, 4);
    std::memcpy(bytes.data() + 12, &reserved, 4);
    std::memcpy(bytes.data() + 16, depth.values.data(), depth.values.size() * sizeof(float));
    return bytes;
}

}  // namespace

std::vector<std::string> export_labels(const ScenarioConfig& cfg, const std::string& out_dir) {
    std::vector<std::string> written;
    const fs::path root(out_dir);

    for (std::int64_t tick = 0; tick <= cfg.tick_count(); ++tick) {
        const WorldSnapshot snap = world_state_at(cfg, tick);
        const FrameTree frames = build_frame_tree(cfg, snap);

        for (const AgentSpec& agent : cfg.agents) {
            for (const SensorSpec& sensor : agent.sensors) {
                const std::string frame = sensor_frame_id(agent, sensor);
                const Pose world_from_cam = frames.transform_to(frame, "world");
                const Pose cam_from_world = frames.transform_to("world", frame);
                const DepthImage depth =
                    render_depth(snap.objects, sensor.camera, world_from_cam);

                const fs::path dir = root / agent.agent_id / sensor.sensor_id;
                fs::create_directories(dir);
                const std::string stamp = zero_pad(tick, 6);

                const fs::path depth_path = dir / ("depth_" + stamp + ".msmd");
                write_file(depth_path, depth_to_bytes(depth));
                written.push_back(depth_path.string());

                ordered_json doc;
                doc["sensor_id"] = frame;
                doc["tick"] = tick;
                ordered_json pose;
                pose["translation"] = vec_json(world_from_cam.translation);
                ordered_json rot = ordered_json::array();
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) rot.push_back(world_from_cam.rotation(r, c));
                pose["rotation"] = std::move(rot);
                doc["sensor_pose"] = std::move(pose);

                ordered_json labels = ordered_json::array();
                for (const BoundingBox3D& obj : snap.objects) {
                    const OcclusionResult occ = occlusion_by_depth(obj, sensor.camera,
                                                                   world_from_cam, depth,
                                                                   cfg.visibility);
                    if (occ.category != Occlusion::kNone && occ.category != Occlusion::kPartial) {
                        continue;
                    }
                    ordered_json l;
                    l["object_id"] = obj.object_id;
                    l["class"] = to_string(obj.class_label);
                    l["center_sensor"] = vec_json(cam_from_world.apply(obj.center));
                    l["dimensions"] = vec_json(obj.dimensions);
                    l["yaw_world"] = obj.yaw;
                    l["occlusion"] = to_string(occ.category);
                    l["ratio"] = occ.ratio;
                    labels.push_back(std::move(l));
                }
                doc["labels"] = std::move(labels);

                const fs::path labels_path = dir / ("labels_" + stamp + ".json");
                write_file(labels_path, doc.dump(2) + "\n");
                written.push_back(labels_path.string());
            }
        }
    }
    return written;
}

RunMetrics evaluate_frames(const std::string& frames_path, const EvalParams& eval,
                           double tick_rate) {
    std::ifstream in(frames_path);
    if (!in) throw std::runtime_error("cannot open frames log: " + frames_path);

    Evaluator evaluator(eval, tick_rate);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("frames log line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::int64_t tick = j.at("tick").get<std::int64_t>();
        const auto& tr = j.at("ego_pose").at("translation");
        const Vec3 ego_pos(tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>());

        std::vector<BoundingBox3D> truth;
        for (const auto& o : j.at("truth")) {
            BoundingBox3D b;
            b.object_id = o.at("object_id").get<std::int64_t>();
            const auto cls = class_label_from_string(o.at("class").get<std::string>());
            if (cls) b.class_label = *cls;
            const auto& c = o.at("center");
            b.center = Vec3(c[0].get<double>(), c[1].get<double>(), c[2].get<double>());
            const auto& d = o.at("dimensions");
            b.dimensions = Vec3(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
            b.yaw = o.at("yaw").get<double>();
            truth.push_back(std::move(b));
        }

        std::vector<Track> tracks;
        for (const auto& t : j.at("ego_tracks")) {
            Track track;
            track.track_id = t.at("track_id").get<std::int64_t>();
            const auto cls = class_label_from_string(t.at("class").get<std::string>());
            if (cls) track.class_label = *cls;
            track.hits = t.at("hits").get<int>();
            track.age = t.at("age").get<int>();
            track.status = TrackStatus::kConfirmed;
            const auto& mean = t.at("mean");
            for (int i = 0; i < 6; ++i) track.estimate.mean[i] = mean[i].get<double>();
            tracks.push_back(std::move(track));
        }
        evaluator.add_frame(tick, tracks, truth, ego_pos);
    }
    return evaluator.finish();
}

}  // namespace msma
