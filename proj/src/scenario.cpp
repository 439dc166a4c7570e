#include "msma/scenario.hpp"

#include "msma/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace msma {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Camera axes (+x right, +y down, +z forward) expressed in the mount frame
// (x forward, y left, z up): columns are cam-x, cam-y, cam-z.
Mat3 camera_alignment() {
    Mat3 a;
    a << 0, 0, 1,
        -1, 0, 0,
         0, -1, 0;
    return a;
}

double lateral_offset_at(const std::vector<ManeuverEvent>& events, double t) {
    // Regime: ramp from base_val (at base_time) to target over dur seconds.
    double base_val = 0.0, base_time = 0.0, target = 0.0, dur = 1.0;
    auto value_at = [&](double tq) {
        const double f = std::clamp((tq - base_time) / dur, 0.0, 1.0);
        return base_val + (target - base_val) * f;
    };
    for (const ManeuverEvent& e : events) {
        if (e.kind != ManeuverKind::kLaneChange || e.time > t) continue;
        const double val = value_at(e.time);
        base_val = val;
        base_time = e.time;
        target = e.lateral_offset;
        dur = e.over;
    }
    return value_at(t);
}

}  // namespace

MotionState motion_at(const MotionSpec& motion, double t) {
    std::vector<ManeuverEvent> events = motion.events;
    std::stable_sort(events.begin(), events.end(),
                     [](const ManeuverEvent& a, const ManeuverEvent& b) { return a.time < b.time; });

    // Along-track: piecewise-constant acceleration from the accel events.
    std::vector<double> cuts{0.0, t};
    for (const ManeuverEvent& e : events) {
        if (e.kind != ManeuverKind::kAccelStep) continue;
        cuts.push_back(e.time);
        cuts.push_back(e.time + e.hold);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double s = 0.0, v = motion.speed;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double t0 = cuts[i], t1 = std::min(cuts[i + 1], t);
        if (t0 >= t) break;
        const double dt = t1 - t0;
        if (dt <= 0.0) continue;
        double a = 0.0;
        for (const ManeuverEvent& e : events) {
            if (e.kind == ManeuverKind::kAccelStep && e.time <= t0 && t0 < e.time + e.hold) {
                a += e.delta;
            }
        }
        s += v * dt + 0.5 * a * dt * dt;
        v += a * dt;
    }

    const Vec3 fwd(std::cos(motion.heading), std::sin(motion.heading), 0.0);
    const Vec3 left(-std::sin(motion.heading), std::cos(motion.heading), 0.0);
    MotionState out;
    out.position = motion.position + fwd * s + left * lateral_offset_at(events, t);
    out.heading = motion.heading;
    out.speed = v;
    return out;
}

void TrackerParams::validate() const {
    if (process_noise_q < 0) throw ValidationError("tracker process_noise_q must be >= 0");
    if (gate <= 0) throw ValidationError("tracker gate must be positive");
    if (confirm_m <= 0 || confirm_n <= 0 || confirm_m > confirm_n || confirm_n > 32) {
        throw ValidationError("tracker confirmation must satisfy 0 < M <= N <= 32");
    }
    if (max_misses <= 0) throw ValidationError("tracker max_misses must be positive");
    if (birth_velocity_var <= 0) throw ValidationError("tracker birth_velocity_var must be positive");
    if (remote_birth_separation < 0) {
        throw ValidationError("tracker remote_birth_separation must be >= 0");
    }
}

void EvalParams::validate(double duration) const {
    if (range_gate <= 0 || burn_in < 0 || match_distance <= 0) {
        throw ValidationError("eval parameters must be positive");
    }
    if (burn_in >= duration) throw ValidationError("eval burn_in must be shorter than the scenario");
}

std::int64_t ScenarioConfig::tick_count() const {
    return std::llround(duration * tick_rate);
}

std::size_t ScenarioConfig::ego_index() const {
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (agents[i].kind == AgentKind::kEgoVehicle) return i;
    }
    throw ValidationError("scenario has no ego agent");
}

void ScenarioConfig::validate() const {
    if (duration <= 0) throw ValidationError("duration must be positive");
    if (tick_rate <= 0) throw ValidationError("tick_rate must be positive");
    if (rng != "splitmix64") throw ValidationError("unknown rng algorithm: " + rng);

    std::set<std::int64_t> object_ids;
    for (const ObjectSpec& o : objects) {
        if (!object_ids.insert(o.object_id).second) {
            throw ValidationError("duplicate object_id: " + std::to_string(o.object_id));
        }
        if (o.dimensions.minCoeff() <= 0) {
            throw ValidationError("object dimensions must be strictly positive");
        }
        for (const ManeuverEvent& e : o.motion.events) {
            if (e.time < 0 || e.time > duration) {
                throw ValidationError("maneuver event time outside [0, duration]");
            }
            if (e.kind == ManeuverKind::kLaneChange && e.over <= 0) {
                throw ValidationError("lane_change duration must be positive");
            }
            if (e.kind == ManeuverKind::kAccelStep && e.hold <= 0) {
                throw ValidationError("accel_step hold must be positive");
            }
        }
    }

    int ego_count = 0;
    std::set<std::string> agent_ids;
    for (const AgentSpec& a : agents) {
        if (!agent_ids.insert(a.agent_id).second) {
            throw ValidationError("duplicate agent_id: " + a.agent_id);
        }
        if (a.kind == AgentKind::kEgoVehicle) {
            ++ego_count;
            if (!a.motion) throw ValidationError("ego agent requires a motion spec: " + a.agent_id);
            if (a.pose) throw ValidationError("ego agent must not carry a static pose: " + a.agent_id);
        } else {
            if (!a.pose) throw ValidationError("infrastructure agent requires a pose: " + a.agent_id);
            if (a.motion) throw ValidationError("infrastructure agent must not move: " + a.agent_id);
        }
        std::set<std::string> sensor_ids;
        for (const SensorSpec& s : a.sensors) {
            if (!sensor_ids.insert(s.sensor_id).second) {
                throw ValidationError("duplicate sensor_id in agent " + a.agent_id + ": " + s.sensor_id);
            }
            s.camera.validate();
            s.detection.validate();
        }
    }
    if (ego_count != 1) {
        throw ValidationError("scenario must declare exactly one ego_vehicle (found " +
                              std::to_string(ego_count) + ")");
    }

    visibility.validate();
    tracker.validate();
    eval.validate(duration);
}

WorldSnapshot world_state_at(const ScenarioConfig& cfg, std::int64_t tick) {
    if (tick < 0 || tick > cfg.tick_count()) {
        throw TickOutOfRange("tick " + std::to_string(tick) + " outside [0, " +
                             std::to_string(cfg.tick_count()) + "]");
    }
    WorldSnapshot snap;
    snap.tick = tick;
    snap.time = static_cast<double>(tick) / cfg.tick_rate;

    snap.objects.reserve(cfg.objects.size());
    for (const ObjectSpec& o : cfg.objects) {
        const MotionState m = motion_at(o.motion, snap.time);
        BoundingBox3D box;
        box.center = m.position;
        box.dimensions = o.dimensions;
        box.yaw = m.heading;
        box.object_id = o.object_id;
        box.class_label = o.class_label;
        snap.objects.push_back(std::move(box));
    }

    const AgentSpec& ego = cfg.agents[cfg.ego_index()];
    const MotionState em = motion_at(*ego.motion, snap.time);
    snap.ego_pose.rotation = rot_z(em.heading);
    snap.ego_pose.translation = em.position;
    return snap;
}

std::string sensor_frame_id(const AgentSpec& agent, const SensorSpec& sensor) {
    return agent.agent_id + "/" + sensor.sensor_id;
}

FrameTree build_frame_tree(const ScenarioConfig& cfg, const WorldSnapshot& snapshot) {
    FrameTree tree("world");
    for (const AgentSpec& a : cfg.agents) {
        Pose agent_pose;
        if (a.kind == AgentKind::kEgoVehicle) {
            agent_pose = snapshot.ego_pose;
        } else {
            agent_pose.rotation = rot_z(a.pose->yaw) * rot_y(a.pose->pitch);
            agent_pose.translation = a.pose->position;
        }
        tree.add(ReferenceFrame{a.agent_id, "world", agent_pose});
        for (const SensorSpec& s : a.sensors) {
            Pose mount;
            mount.rotation = rot_z(s.mount.yaw) * rot_y(s.mount.pitch) * camera_alignment();
            mount.translation = s.mount.translation;
            tree.add(ReferenceFrame{sensor_frame_id(a, s), a.agent_id, mount});
        }
    }
    return tree;
}

// ------------------------------------------------------------
// Strict JSON parsing
// ------------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(const std::string& ctx, const std::string& what) {
    throw ParseError(ctx + ": " + what);
}

void check_keys(const json& o, const std::set<std::string>& allowed, const std::string& ctx) {
    if (!o.is_object()) parse_fail(ctx, "expected an object");
    for (auto it = o.begin(); it != o.end(); ++it) {
        if (!allowed.count(it.key())) parse_fail(ctx, "unknown key '" + it.key() + "'");
    }
}

const json* find(const json& o, const char* key) {
    auto it = o.find(key);
    return it == o.end() ? nullptr : &*it;
}

double get_number(const json& o, const char* key, const std::string& ctx) {
    const json* v = find(o, key);
    if (!v) parse_fail(ctx, std::string("missing required key '") + key + "'");
    if (!v->is_number()) parse_fail(ctx, std::string("key '") + key + "' must be a number");
    return v->get<double>();
}

double get_number_or(const json& o, const char* key, double fallback, const std::string& ctx) {
    const json* v = find(o, key);
    if (!v) return fallback;
    if (!v->is_number()) parse_fail(ctx, std::string("key '") + key + "' must be a number");
    return v->get<double>();
}

std::int64_t get_integer(const json& o, const char* key, const std::string& ctx) {
    const json* v = find(o, key);
    if (!v) parse_fail(ctx, std::string("missing required key '") + key + "'");
    if (!v->is_number_integer()) parse_fail(ctx, std::string("key '") + key + "' must be an integer");
    return v->get<std::int64_t>();
}

std::string get_string(const json& o, const char* key, const std::string& ctx) {
    const json* v = find(o, key);
    if (!v) parse_fail(ctx, std::string("missing required key '") + key + "'");
    if (!v->is_string()) parse_fail(ctx, std::string("key '") + key + "' must be a string");
    return v->get<std::string>();
}

Vec3 get_vec3(const json& o, const char* key, const std::string& ctx) {
    const json* v = find(o, key);
    if (!v) parse_fail(ctx, std::string("missing required key '") + key + "'");
    if (!v->is_array() || v->size() != 3 || !std::all_of(v->begin(), v->end(), [](const json& x) {
            return x.is_number();
        })) {
        parse_fail(ctx, std::string("key '") + key + "' must be a [x, y, z] number array");
    }
    return Vec3((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
}

ManeuverEvent parse_event(const json& o, const std::string& ctx) {
    ManeuverEvent e;
    const std::string kind = get_string(o, "kind", ctx);
    if (kind == "lane_change") {
        check_keys(o, {"time", "kind", "lateral_offset", "over"}, ctx);
        e.kind = ManeuverKind::kLaneChange;
        e.lateral_offset = get_number(o, "lateral_offset", ctx);
        e.over = get_number(o, "over", ctx);
    } else if (kind == "accel_step") {
        check_keys(o, {"time", "kind", "delta", "hold"}, ctx);
        e.kind = ManeuverKind::kAccelStep;
        e.delta = get_number(o, "delta", ctx);
        e.hold = get_number(o, "hold", ctx);
    } else {
        parse_fail(ctx, "unknown maneuver kind '" + kind + "'");
    }
    e.time = get_number(o, "time", ctx);
    return e;
}

std::vector<ManeuverEvent> parse_events(const json& o, const std::string& ctx) {
    std::vector<ManeuverEvent> out;
    const json* v = find(o, "events");
    if (!v) return out;
    if (!v->is_array()) parse_fail(ctx, "'events' must be an array");
    for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(parse_event((*v)[i], ctx + ".events[" + std::to_string(i) + "]"));
    }
    return out;
}

MotionSpec parse_motion(const json& o, const std::string& ctx) {
    check_keys(o, {"position", "heading", "speed", "events"}, ctx);
    MotionSpec m;
    m.position = get_vec3(o, "position", ctx);
    m.heading = get_number_or(o, "heading", 0.0, ctx);
    m.speed = get_number_or(o, "speed", 0.0, ctx);
    m.events = parse_events(o, ctx);
    return m;
}

ClassLabel parse_class(const json& o, const std::string& ctx) {
    const std::string s = get_string(o, "class_label", ctx);
    const auto c = class_label_from_string(s);
    if (!c) parse_fail(ctx, "unknown class_label '" + s + "'");
    return *c;
}

ObjectSpec parse_object(const json& o, const std::string& ctx) {
    check_keys(o, {"object_id", "class_label", "position", "heading", "speed", "dimensions", "events"},
               ctx);
    ObjectSpec spec;
    spec.object_id = get_integer(o, "object_id", ctx);
    spec.class_label = parse_class(o, ctx);
    spec.motion.position = get_vec3(o, "position", ctx);
    spec.motion.heading = get_number_or(o, "heading", 0.0, ctx);
    spec.motion.speed = get_number_or(o, "speed", 0.0, ctx);
    spec.motion.events = parse_events(o, ctx);
    spec.dimensions = get_vec3(o, "dimensions", ctx);
    return spec;
}

DetectionModel parse_detection(const json* o, const std::string& ctx) {
    DetectionModel m;
    if (!o) return m;
    check_keys(*o,
               {"position_noise_sigma", "base_miss_rate", "miss_rate_by_occlusion", "clutter_rate",
                "max_range"},
               ctx);
    m.position_noise_sigma = get_number_or(*o, "position_noise_sigma", m.position_noise_sigma, ctx);
    m.base_miss_rate = get_number_or(*o, "base_miss_rate", m.base_miss_rate, ctx);
    m.clutter_rate = get_number_or(*o, "clutter_rate", m.clutter_rate, ctx);
    m.max_range = get_number_or(*o, "max_range", m.max_range, ctx);
    if (const json* rates = find(*o, "miss_rate_by_occlusion")) {
        const std::string rctx = ctx + ".miss_rate_by_occlusion";
        check_keys(*rates, {"none", "partial", "most", "complete"}, rctx);
        m.base_miss_rate = get_number_or(*rates, "none", m.base_miss_rate, rctx);
        m.miss_rate_partial = get_number_or(*rates, "partial", m.miss_rate_partial, rctx);
        m.miss_rate_most = get_number_or(*rates, "most", m.miss_rate_most, rctx);
        m.miss_rate_complete = get_number_or(*rates, "complete", m.miss_rate_complete, rctx);
    }
    return m;
}

SensorSpec parse_sensor(const json& o, const std::string& ctx) {
    check_keys(o, {"sensor_id", "mount", "camera", "detection"}, ctx);
    SensorSpec s;
    s.sensor_id = get_string(o, "sensor_id", ctx);
    if (const json* mount = find(o, "mount")) {
        const std::string mctx = ctx + ".mount";
        check_keys(*mount, {"translation", "yaw", "pitch"}, mctx);
        if (find(*mount, "translation")) s.mount.translation = get_vec3(*mount, "translation", mctx);
        s.mount.yaw = get_number_or(*mount, "yaw", 0.0, mctx);
        s.mount.pitch = get_number_or(*mount, "pitch", 0.0, mctx);
    }
    const json* cam = find(o, "camera");
    if (!cam) parse_fail(ctx, "missing required key 'camera'");
    const std::string cctx = ctx + ".camera";
    check_keys(*cam, {"fx", "fy", "cx", "cy", "width", "height"}, cctx);
    const double fx = get_number(*cam, "fx", cctx);
    const double fy = get_number(*cam, "fy", cctx);
    const double cx = get_number(*cam, "cx", cctx);
    const double cy = get_number(*cam, "cy", cctx);
    const int width = static_cast<int>(get_integer(*cam, "width", cctx));
    const int height = static_cast<int>(get_integer(*cam, "height", cctx));
    s.camera.intrinsics << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    s.camera.width = width;
    s.camera.height = height;
    s.detection = parse_detection(find(o, "detection"), ctx + ".detection");
    return s;
}

AgentSpec parse_agent(const json& o, const std::string& ctx) {
    check_keys(o, {"agent_id", "kind", "motion", "pose", "sensors"}, ctx);
    AgentSpec a;
    a.agent_id = get_string(o, "agent_id", ctx);
    const std::string kind = get_string(o, "kind", ctx);
    if (kind == "ego_vehicle") {
        a.kind = AgentKind::kEgoVehicle;
    } else if (kind == "infrastructure") {
        a.kind = AgentKind::kInfrastructure;
    } else {
        parse_fail(ctx, "unknown agent kind '" + kind + "'");
    }
    if (const json* m = find(o, "motion")) a.motion = parse_motion(*m, ctx + ".motion");
    if (const json* p = find(o, "pose")) {
        const std::string pctx = ctx + ".pose";
        check_keys(*p, {"position", "yaw", "pitch"}, pctx);
        PlacementPose pose;
        pose.position = get_vec3(*p, "position", pctx);
        pose.yaw = get_number_or(*p, "yaw", 0.0, pctx);
        pose.pitch = get_number_or(*p, "pitch", 0.0, pctx);
        a.pose = pose;
    }
    const json* sensors = find(o, "sensors");
    if (!sensors) parse_fail(ctx, "missing required key 'sensors'");
    if (!sensors->is_array()) parse_fail(ctx, "'sensors' must be an array");
    for (std::size_t i = 0; i < sensors->size(); ++i) {
        a.sensors.push_back(parse_sensor((*sensors)[i], ctx + ".sensors[" + std::to_string(i) + "]"));
    }
    return a;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
    }
    const std::string ctx = "scenario";
    check_keys(doc,
               {"duration", "tick_rate", "seed", "rng", "objects", "agents", "visibility", "tracker",
                "eval"},
               ctx);

    ScenarioConfig cfg;
    cfg.duration = get_number(doc, "duration", ctx);
    cfg.tick_rate = get_number_or(doc, "tick_rate", 10.0, ctx);
    const json* seed = find(doc, "seed");
    if (!seed) parse_fail(ctx, "missing required key 'seed'");
    if (!seed->is_number_integer() || seed->get<std::int64_t>() < 0) {
        parse_fail(ctx, "'seed' must be a non-negative integer");
    }
    cfg.seed = seed->get<std::uint64_t>();
    if (const json* rng = find(doc, "rng")) {
        if (!rng->is_string()) parse_fail(ctx, "'rng' must be a string");
        cfg.rng = rng->get<std::string>();
    }

    const json* objects = find(doc, "objects");
    if (!objects || !objects->is_array()) parse_fail(ctx, "'objects' must be an array");
    for (std::size_t i = 0; i < objects->size(); ++i) {
        cfg.objects.push_back(parse_object((*objects)[i], "objects[" + std::to_string(i) + "]"));
    }
    const json* agents = find(doc, "agents");
    if (!agents || !agents->is_array()) parse_fail(ctx, "'agents' must be an array");
    for (std::size_t i = 0; i < agents->size(); ++i) {
        cfg.agents.push_back(parse_agent((*agents)[i], "agents[" + std::to_string(i) + "]"));
    }

    if (const json* vis = find(doc, "visibility")) {
        const std::string vctx = "visibility";
        check_keys(*vis, {"tau", "none_min", "partial_min", "most_min"}, vctx);
        cfg.visibility.tau = get_number_or(*vis, "tau", cfg.visibility.tau, vctx);
        cfg.visibility.none_min = get_number_or(*vis, "none_min", cfg.visibility.none_min, vctx);
        cfg.visibility.partial_min =
            get_number_or(*vis, "partial_min", cfg.visibility.partial_min, vctx);
        cfg.visibility.most_min = get_number_or(*vis, "most_min", cfg.visibility.most_min, vctx);
    }
    if (const json* tr = find(doc, "tracker")) {
        const std::string tctx = "tracker";
        check_keys(*tr,
                   {"process_noise_q", "gate", "confirm_m", "confirm_n", "max_misses",
                    "birth_velocity_var", "remote_birth_separation"},
                   tctx);
        cfg.tracker.process_noise_q =
            get_number_or(*tr, "process_noise_q", cfg.tracker.process_noise_q, tctx);
        cfg.tracker.gate = get_number_or(*tr, "gate", cfg.tracker.gate, tctx);
        cfg.tracker.confirm_m =
            static_cast<int>(get_number_or(*tr, "confirm_m", cfg.tracker.confirm_m, tctx));
        cfg.tracker.confirm_n =
            static_cast<int>(get_number_or(*tr, "confirm_n", cfg.tracker.confirm_n, tctx));
        cfg.tracker.max_misses =
            static_cast<int>(get_number_or(*tr, "max_misses", cfg.tracker.max_misses, tctx));
        cfg.tracker.birth_velocity_var =
            get_number_or(*tr, "birth_velocity_var", cfg.tracker.birth_velocity_var, tctx);
        cfg.tracker.remote_birth_separation = get_number_or(
            *tr, "remote_birth_separation", cfg.tracker.remote_birth_separation, tctx);
    }
    if (const json* ev = find(doc, "eval")) {
        const std::string ectx = "eval";
        check_keys(*ev, {"range_gate", "burn_in", "match_distance"}, ectx);
        cfg.eval.range_gate = get_number_or(*ev, "range_gate", cfg.eval.range_gate, ectx);
        cfg.eval.burn_in = get_number_or(*ev, "burn_in", cfg.eval.burn_in, ectx);
        cfg.eval.match_distance =
            get_number_or(*ev, "match_distance", cfg.eval.match_distance, ectx);
    }

    cfg.validate();
    return cfg;
}

namespace {

ordered_json vec3_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

ordered_json events_json(const std::vector<ManeuverEvent>& events) {
    ordered_json arr = ordered_json::array();
    for (const ManeuverEvent& e : events) {
        ordered_json o;
        o["time"] = e.time;
        if (e.kind == ManeuverKind::kLaneChange) {
            o["kind"] = "lane_change";
            o["lateral_offset"] = e.lateral_offset;
            o["over"] = e.over;
        } else {
            o["kind"] = "accel_step";
            o["delta"] = e.delta;
            o["hold"] = e.hold;
        }
        arr.push_back(std::move(o));
    }
    return arr;
}

}  // namespace

std::string serialize_scenario(const ScenarioConfig& cfg) {
    ordered_json doc;
    doc["duration"] = cfg.duration;
    doc["tick_rate"] = cfg.tick_rate;
    doc["seed"] = cfg.seed;
    doc["rng"] = cfg.rng;

    ordered_json objects = ordered_json::array();
    for (const ObjectSpec& o : cfg.objects) {
        ordered_json j;
        j["object_id"] = o.object_id;
        j["class_label"] = to_string(o.class_label);
        j["position"] = vec3_json(o.motion.position);
        j["heading"] = o.motion.heading;
        j["speed"] = o.motion.speed;
        j["dimensions"] = vec3_json(o.dimensions);
        j["events"] = events_json(o.motion.events);
        objects.push_back(std::move(j));
    }
    doc["objects"] = std::move(objects);

    ordered_json agents = ordered_json::array();
    for (const AgentSpec& a : cfg.agents) {
        ordered_json j;
        j["agent_id"] = a.agent_id;
        j["kind"] = a.kind == AgentKind::kEgoVehicle ? "ego_vehicle" : "infrastructure";
        if (a.motion) {
            ordered_json m;
            m["position"] = vec3_json(a.motion->position);
            m["heading"] = a.motion->heading;
            m["speed"] = a.motion->speed;
            m["events"] = events_json(a.motion->events);
            j["motion"] = std::move(m);
        }
        if (a.pose) {
            ordered_json p;
            p["position"] = vec3_json(a.pose->position);
            p["yaw"] = a.pose->yaw;
            p["pitch"] = a.pose->pitch;
            j["pose"] = std::move(p);
        }
        ordered_json sensors = ordered_json::array();
        for (const SensorSpec& s : a.sensors) {
            ordered_json sj;
            sj["sensor_id"] = s.sensor_id;
            ordered_json mount;
            mount["translation"] = vec3_json(s.mount.translation);
            mount["yaw"] = s.mount.yaw;
            mount["pitch"] = s.mount.pitch;
            sj["mount"] = std::move(mount);
            ordered_json cam;
            cam["fx"] = s.camera.fx();
            cam["fy"] = s.camera.fy();
            cam["cx"] = s.camera.cx();
            cam["cy"] = s.camera.cy();
            cam["width"] = s.camera.width;
            cam["height"] = s.camera.height;
            sj["camera"] = std::move(cam);
            ordered_json det;
            det["position_noise_sigma"] = s.detection.position_noise_sigma;
            ordered_json rates;
            rates["none"] = s.detection.base_miss_rate;
            rates["partial"] = s.detection.miss_rate_partial;
            rates["most"] = s.detection.miss_rate_most;
            rates["complete"] = s.detection.miss_rate_complete;
            det["miss_rate_by_occlusion"] = std::move(rates);
            det["clutter_rate"] = s.detection.clutter_rate;
            det["max_range"] = s.detection.max_range;
            sj["detection"] = std::move(det);
            sensors.push_back(std::move(sj));
        }
        j["sensors"] = std::move(sensors);
        agents.push_back(std::move(j));
    }
    doc["agents"] = std::move(agents);

    ordered_json vis;
    vis["tau"] = cfg.visibility.tau;
    vis["none_min"] = cfg.visibility.none_min;
    vis["partial_min"] = cfg.visibility.partial_min;
    vis["most_min"] = cfg.visibility.most_min;
    doc["visibility"] = std::move(vis);

    ordered_json tr;
    tr["process_noise_q"] = cfg.tracker.process_noise_q;
    tr["gate"] = cfg.tracker.gate;
    tr["confirm_m"] = cfg.tracker.confirm_m;
    tr["confirm_n"] = cfg.tracker.confirm_n;
    tr["max_misses"] = cfg.tracker.max_misses;
    tr["birth_velocity_var"] = cfg.tracker.birth_velocity_var;
    tr["remote_birth_separation"] = cfg.tracker.remote_birth_separation;
    doc["tracker"] = std::move(tr);

    ordered_json ev;
    ev["range_gate"] = cfg.eval.range_gate;
    ev["burn_in"] = cfg.eval.burn_in;
    ev["match_distance"] = cfg.eval.match_distance;
    doc["eval"] = std::move(ev);

    return doc.dump(2) + "\n";
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace msma
