#include "msma/network.hpp"
#include "msma/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace msma;

namespace {

std::vector<std::string> infra_names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("infra_" + std::to_string(i));
    return out;
}

RemoteTrack remote_at(const Vec3& pos, double var) {
    RemoteTrack r;
    r.estimate.mean.head<3>() = pos;
    r.estimate.covariance = var * Mat6::Identity();
    return r;
}

}  // namespace

TEST_CASE("route_tick: no-correlation topology sends only to the ego") {
    const auto topo = TopologyModel::make(TopologyModel::Kind::kNoCorrelation);
    const auto ids = infra_names(3);
    const std::vector<std::vector<RemoteTrack>> payloads(3);
    RngStream rng(RngStream::derive_key(61, "net"));
    const auto messages = route_tick(ids, "ego", payloads, topo, 5, rng);
    REQUIRE(messages.size() == 3);
    for (const Message& m : messages) {
        CHECK(m.receiver_id == "ego");
        CHECK(m.tick_sent == 5);
    }
}

TEST_CASE("route_tick: zero infrastructure agents yields zero messages") {
    const auto topo = TopologyModel::make(TopologyModel::Kind::kMajorCorrelation);
    RngStream rng(RngStream::derive_key(62, "net"));
    CHECK(route_tick({}, "ego", {}, topo, 0, rng).empty());
}

TEST_CASE("route_tick: crosstalk frequency matches the topology probability") {
    const auto topo = TopologyModel::make(TopologyModel::Kind::kMajorCorrelation);
    const int n_infra = 5;
    const auto ids = infra_names(n_infra);
    const std::vector<std::vector<RemoteTrack>> payloads(n_infra);

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_infra, n_infra);
    const int ticks = 10000;
    for (int t = 0; t < ticks; ++t) {
        RngStream rng(RngStream::derive_key(63, "net", static_cast<std::uint64_t>(t)));
        for (const Message& m : route_tick(ids, "ego", payloads, topo, t, rng)) {
            if (m.receiver_id == "ego") continue;
            const int i = std::stoi(m.sender_id.substr(6));
            const int j = std::stoi(m.receiver_id.substr(6));
            counts(i, j) += 1.0;
        }
    }
    for (int i = 0; i < n_infra; ++i) {
        for (int j = 0; j < n_infra; ++j) {
            if (i == j) continue;
            CHECK(std::abs(counts(i, j) / ticks - 0.8) < 0.02);
        }
    }
}

TEST_CASE("route_tick: determinism under a fixed stream key") {
    const auto topo = TopologyModel::make(TopologyModel::Kind::kMinorCorrelation);
    const auto ids = infra_names(4);
    const std::vector<std::vector<RemoteTrack>> payloads(4);
    RngStream rng_a(RngStream::derive_key(64, "net", 7));
    RngStream rng_b(RngStream::derive_key(64, "net", 7));
    const auto a = route_tick(ids, "ego", payloads, topo, 7, rng_a);
    const auto b = route_tick(ids, "ego", payloads, topo, 7, rng_b);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sender_id == b[i].sender_id);
        CHECK(a[i].receiver_id == b[i].receiver_id);
    }
}

TEST_CASE("message queue: latency delays delivery") {
    MessageQueue queue(2);
    Message m;
    m.sender_id = "a";
    m.receiver_id = "b";
    m.tick_sent = 10;
    queue.send(m);
    CHECK(queue.take_delivered("b", 10).empty());
    CHECK(queue.take_delivered("b", 11).empty());
    CHECK(queue.take_delivered("b", 12).size() == 1);
    CHECK(queue.take_delivered("b", 12).empty());  // drained
}

TEST_CASE("ingest_crosstalk: no messages leave the tracker unchanged") {
    TrackerParams params;
    Tracker tracker(params, 0.1);
    Detection d;
    d.position = Vec3(1, 2, 0);
    d.covariance = 0.25 * Mat3::Identity();
    tracker.step({{d}});
    const auto before = tracker.tracks();
    ingest_crosstalk(tracker, {});
    CHECK(tracker.tracks().size() == before.size());
    CHECK(tracker.tracks()[0].estimate.mean == before[0].estimate.mean);
}

TEST_CASE("ingest_crosstalk: shared track shrinks the receiver's covariance") {
    TrackerParams params;
    Tracker tracker(params, 0.1);
    Detection d;
    d.position = Vec3(4, 4, 0);
    d.covariance = 0.25 * Mat3::Identity();
    tracker.step({{d}});
    const double before = tracker.tracks()[0].estimate.position_cov().trace();

    Message m;
    m.sender_id = "infra_1";
    m.receiver_id = "infra_2";
    m.tick_sent = 0;
    m.payload.push_back(remote_at(Vec3(4, 4, 0), 0.5));
    ingest_crosstalk(tracker, {{m}});
    CHECK(tracker.tracks()[0].estimate.position_cov().trace() < before);
}

TEST_CASE("ingest_crosstalk: a ring becomes overconfident against a centralized filter") {
    // Three infrastructure agents see the same stationary object with honest
    // noise. A ring of crosstalk (0->1, 1->2, 2->0) every tick re-circulates
    // the same information. After 20 ticks at least one agent's track must
    // claim a smaller position trace than a centralized Kalman filter that
    // legitimately fuses all three detections per tick - the floor for what
    // is actually achievable from the available measurements.
    const double dt = 0.1, sigma = 0.5, q = 1.0;
    TrackerParams params;
    params.process_noise_q = q;
    const Vec3 truth(10, 5, 1);

    std::vector<Tracker> trackers{Tracker(params, dt), Tracker(params, dt), Tracker(params, dt)};
    RngStream rng(RngStream::derive_key(65, "ring"));

    // Centralized oracle: hand-rolled KF over the same 6-dim CV model.
    Vec6 cx = Vec6::Zero();
    Mat6 cp;
    bool c_init = false;
    Mat6 f = Mat6::Identity();
    f(0, 3) = f(1, 4) = f(2, 5) = dt;
    Mat6 fq = Mat6::Zero();
    for (int a = 0; a < 3; ++a) {
        fq(a, a) = q * dt * dt * dt * dt / 4.0;
        fq(a + 3, a + 3) = q * dt * dt;
        fq(a, a + 3) = fq(a + 3, a) = q * dt * dt * dt / 2.0;
    }

    for (int tick = 0; tick < 20; ++tick) {
        std::vector<Detection> dets;
        for (int a = 0; a < 3; ++a) {
            Detection d;
            d.position = truth + sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
            d.covariance = sigma * sigma * Mat3::Identity();
            dets.push_back(d);
            trackers[a].step({{d}});
        }

        // Ring crosstalk with this tick's confirmed tracks.
        std::vector<std::vector<RemoteTrack>> payloads(3);
        for (int a = 0; a < 3; ++a) {
            for (const Track& t : trackers[a].confirmed()) {
                payloads[a].push_back(RemoteTrack{t.track_id, t.estimate, t.class_label});
            }
        }
        for (int a = 0; a < 3; ++a) {
            Message m;
            m.sender_id = "infra_" + std::to_string(a);
            m.receiver_id = "infra_" + std::to_string((a + 1) % 3);
            m.tick_sent = tick;
            m.payload = payloads[a];
            ingest_crosstalk(trackers[(a + 1) % 3], {{m}});
        }

        // Centralized filter: predict once, update with all three detections.
        if (!c_init) {
            cx.head<3>() = dets[0].position;
            cp = Mat6::Zero();
            cp.topLeftCorner<3, 3>() = dets[0].covariance;
            cp.bottomRightCorner<3, 3>() = 100.0 * Mat3::Identity();
            c_init = true;
            for (int a = 1; a < 3; ++a) {
                const Mat3 s = cp.topLeftCorner<3, 3>() + dets[a].covariance;
                const Eigen::Matrix<double, 6, 3> k = cp.leftCols<3>() * s.inverse();
                cx += k * (dets[a].position - cx.head<3>());
                Mat6 ai = Mat6::Identity();
                ai.leftCols<3>() -= k;
                cp = ai * cp * ai.transpose() + k * dets[a].covariance * k.transpose();
            }
        } else {
            cx = f * cx;
            cp = f * cp * f.transpose() + fq;
            for (int a = 0; a < 3; ++a) {
                const Mat3 s = cp.topLeftCorner<3, 3>() + dets[a].covariance;
                const Eigen::Matrix<double, 6, 3> k = cp.leftCols<3>() * s.inverse();
                cx += k * (dets[a].position - cx.head<3>());
                Mat6 ai = Mat6::Identity();
                ai.leftCols<3>() -= k;
                cp = ai * cp * ai.transpose() + k * dets[a].covariance * k.transpose();
            }
        }
    }

    const double floor_trace = cp.topLeftCorner<3, 3>().trace();
    double min_claimed = 1e300;
    for (const Tracker& tracker : trackers) {
        for (const Track& t : tracker.confirmed()) {
            min_claimed = std::min(min_claimed, t.estimate.position_cov().trace());
        }
    }
    CHECK(min_claimed < floor_trace);
}
