#include "msma/evaluation.hpp"
#include "msma/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace msma;

namespace {

Track track_at(std::int64_t id, const Vec3& pos, ClassLabel cls = ClassLabel::kCar,
               int hits = 5, int age = 5) {
    Track t;
    t.track_id = id;
    t.estimate.mean.head<3>() = pos;
    t.class_label = cls;
    t.hits = hits;
    t.age = age;
    t.status = TrackStatus::kConfirmed;
    return t;
}

BoundingBox3D object_at(std::int64_t id, const Vec3& pos, ClassLabel cls = ClassLabel::kCar) {
    BoundingBox3D b;
    b.object_id = id;
    b.center = pos;
    b.class_label = cls;
    b.dimensions = Vec3(4, 2, 1.5);
    return b;
}

}  // namespace

TEST_CASE("match_frame: perfect coincidence") {
    EvalParams cfg;
    std::vector<Track> tracks;
    std::vector<BoundingBox3D> truth;
    for (int i = 0; i < 5; ++i) {
        tracks.push_back(track_at(i + 1, Vec3(5.0 * i, 0, 0.75)));
        truth.push_back(object_at(100 + i, Vec3(5.0 * i, 0, 0.75)));
    }
    const FrameMatch m = match_frame(tracks, truth, Vec3::Zero(), cfg);
    CHECK(m.tp.size() == 5);
    CHECK(m.fp_tracks.empty());
    CHECK(m.fn_objects.empty());
    CHECK(m.in_gate_truth == 5);
}

TEST_CASE("match_frame: zero tracks make every in-gate object a miss") {
    EvalParams cfg;
    std::vector<BoundingBox3D> truth{object_at(1, Vec3(10, 0, 0)), object_at(2, Vec3(20, 0, 0)),
                                     object_at(3, Vec3(500, 0, 0))};  // last is out of gate
    const FrameMatch m = match_frame({}, truth, Vec3::Zero(), cfg);
    CHECK(m.tp.empty());
    CHECK(m.fn_objects.size() == 2);
    CHECK(m.in_gate_truth == 2);
}

TEST_CASE("match_frame: threshold arithmetic at 2.5 m with a 2.0 m gate") {
    EvalParams cfg;  // match_distance = 2.0
    std::vector<Track> tracks{track_at(1, Vec3(12.5, 0, 0))};
    std::vector<BoundingBox3D> truth{object_at(7, Vec3(10, 0, 0))};
    const FrameMatch m = match_frame(tracks, truth, Vec3::Zero(), cfg);
    CHECK(m.tp.empty());
    CHECK(m.fp_tracks == std::vector<std::int64_t>{1});
    CHECK(m.fn_objects == std::vector<std::int64_t>{7});
}

TEST_CASE("match_frame: each truth matches at most once; duplicates become FP") {
    EvalParams cfg;
    // Equidistant tracks: the documented tie-break gives the lower track id.
    std::vector<Track> tracks{track_at(1, Vec3(10.1, 0, 0)), track_at(2, Vec3(9.9, 0, 0))};
    std::vector<BoundingBox3D> truth{object_at(7, Vec3(10, 0, 0))};
    const FrameMatch m = match_frame(tracks, truth, Vec3::Zero(), cfg);
    CHECK(m.tp.size() == 1);
    CHECK(m.tp[0].track_id == 1);
    CHECK(m.fp_tracks == std::vector<std::int64_t>{2});
}

TEST_CASE("match_frame: invariant TP + FN equals in-gate truth on random frames") {
    EvalParams cfg;
    RngStream rng(RngStream::derive_key(71, "eval"));
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Track> tracks;
        std::vector<BoundingBox3D> truth;
        const int nt = static_cast<int>(rng.uniform() * 8);
        const int no = static_cast<int>(rng.uniform() * 8);
        for (int i = 0; i < nt; ++i) {
            tracks.push_back(track_at(i + 1, Vec3(rng.uniform(-90, 90), rng.uniform(-90, 90), 0)));
        }
        for (int i = 0; i < no; ++i) {
            truth.push_back(object_at(100 + i, Vec3(rng.uniform(-90, 90), rng.uniform(-90, 90), 0)));
        }
        const FrameMatch m = match_frame(tracks, truth, Vec3::Zero(), cfg);
        CHECK(static_cast<std::int64_t>(m.tp.size() + m.fn_objects.size()) == m.in_gate_truth);
    }
}

TEST_CASE("match_frame: result is stable under track reordering") {
    EvalParams cfg;
    std::vector<Track> tracks{track_at(3, Vec3(10.4, 0, 0)), track_at(1, Vec3(10.4, 0, 0.0)),
                              track_at(2, Vec3(11, 1, 0))};
    std::vector<BoundingBox3D> truth{object_at(7, Vec3(10, 0, 0)), object_at(8, Vec3(11.5, 1, 0))};
    const FrameMatch a = match_frame(tracks, truth, Vec3::Zero(), cfg);
    std::reverse(tracks.begin(), tracks.end());
    const FrameMatch b = match_frame(tracks, truth, Vec3::Zero(), cfg);

    auto tp_ids = [](const FrameMatch& m) {
        std::vector<std::pair<std::int64_t, std::int64_t>> out;
        for (const auto& tp : m.tp) out.emplace_back(tp.track_id, tp.object_id);
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(tp_ids(a) == tp_ids(b));
    // Equidistant tracks 1 and 3: the lower track id wins.
    bool track1_matched = false;
    for (const auto& tp : a.tp) track1_matched |= tp.track_id == 1;
    CHECK(track1_matched);
}

TEST_CASE("average_precision: trivial limits") {
    // Full recall, all correct.
    std::vector<ApInstance> all_tp{{0.9, true, 0, 1}, {0.8, true, 0, 2}};
    CHECK(average_precision(all_tp, 2).value() == doctest::Approx(1.0));
    // No true positives.
    std::vector<ApInstance> all_fp{{0.9, false, 0, 1}, {0.8, false, 0, 2}};
    CHECK(average_precision(all_fp, 2).value() == doctest::Approx(0.0));
    // Empty ground truth: undefined.
    CHECK(!average_precision(all_fp, 0).has_value());
}

TEST_CASE("average_precision: hand-computed PR sweep") {
    // Scores (0.9 TP), (0.8 FP), (0.7 TP) with 2 truth instances.
    // Sweep: (r=0.5, p=1), (r=0.5, p=0.5), (r=1, p=2/3).
    // Interpolated: p(r) = 1 for r <= 0.5, 2/3 above.
    // AP = (51 * 1 + 50 * 2/3) / 101.
    std::vector<ApInstance> inst{{0.9, true, 0, 1}, {0.8, false, 0, 2}, {0.7, true, 0, 3}};
    const double expected = (51.0 * 1.0 + 50.0 * (2.0 / 3.0)) / 101.0;
    CHECK(average_precision(inst, 2).value() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("average_precision: relabeling an FP as TP never lowers AP") {
    RngStream rng(RngStream::derive_key(72, "eval"));
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<ApInstance> inst;
        const int n = 3 + static_cast<int>(rng.uniform() * 10);
        int tp_count = 0;
        for (int i = 0; i < n; ++i) {
            const bool tp = rng.uniform() < 0.5;
            tp_count += tp;
            inst.push_back({rng.uniform(), tp, 0, i});
        }
        const std::int64_t truths = tp_count + 2;
        std::size_t flip = 0;
        while (inst[flip].is_tp) {
            ++flip;
            if (flip == inst.size()) break;
        }
        if (flip == inst.size()) continue;
        const double before = average_precision(inst, truths).value();
        inst[flip].is_tp = true;
        const double after = average_precision(inst, truths).value();
        CHECK(after >= before - 1e-12);
    }
}

TEST_CASE("aggregate_map: absent classes are excluded from the mean") {
    std::map<ClassLabel, std::optional<double>> per_class;
    per_class[ClassLabel::kCar] = 1.0;
    per_class[ClassLabel::kPedestrian] = 0.5;
    per_class[ClassLabel::kTruck] = std::nullopt;
    CHECK(aggregate_map(per_class).value() == doctest::Approx(0.75));

    per_class.clear();
    per_class[ClassLabel::kCar] = 0.8;
    CHECK(aggregate_map(per_class).value() == doctest::Approx(0.8));

    per_class.clear();
    CHECK(!aggregate_map(per_class).has_value());
}

TEST_CASE("evaluator: burn-in frames are excluded and counts accumulate") {
    EvalParams cfg;
    cfg.burn_in = 1.0;
    Evaluator ev(cfg, 10.0);
    std::vector<BoundingBox3D> truth{object_at(1, Vec3(10, 0, 0))};
    const std::vector<Track> tracks{track_at(1, Vec3(10, 0, 0))};
    for (std::int64_t tick = 0; tick <= 20; ++tick) {
        ev.add_frame(tick, tracks, truth, Vec3::Zero());
    }
    const RunMetrics m = ev.finish();
    CHECK(m.per_tick.size() == 11);  // ticks 10..20 (time >= 1.0 s)
    CHECK(m.per_tick.front().tick == 10);
    CHECK(m.map.value() == doctest::Approx(1.0));
    for (const TickCounts& c : m.per_tick) {
        CHECK(c.tp == 1);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
}
