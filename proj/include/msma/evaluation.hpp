#pragma once

#include "msma/geometry.hpp"
#include "msma/scenario.hpp"
#include "msma/tracking.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace msma {

// ============================================================
// Ground-truth comparison: matching, AP, run metrics
// ============================================================

struct FrameMatch {
    // (track_id, object_id, center distance) per true positive.
    struct TruePositive {
        std::int64_t track_id;
        std::int64_t object_id;
        double distance;
    };
    std::vector<TruePositive> tp;
    std::vector<std::int64_t> fp_tracks;   // track ids with no matched truth
    std::vector<std::int64_t> fn_objects;  // in-gate truth ids with no matched track
    std::int64_t in_gate_truth = 0;        // tp.size() + fn_objects.size()
};

// Greedy nearest-neighbor matching on Euclidean center distance against the
// truth filtered to the planar range gate around the ego. Each truth object
// matches at most once; ties break toward the lower track id, then object id.
FrameMatch match_frame(std::span<const Track> tracks, std::span<const BoundingBox3D> truth,
                       const Vec3& ego_position, const EvalParams& cfg);

// One scored prediction instance pooled across frames.
struct ApInstance {
    double score = 0.0;
    bool is_tp = false;
    std::int64_t tick = 0;      // deterministic sort tie-break
    std::int64_t track_id = 0;  // deterministic sort tie-break
};

// 101-point interpolated average precision. Absent when the class has no
// ground-truth instances (EmptyGroundTruth case).
std::optional<double> average_precision(std::vector<ApInstance> instances,
                                        std::int64_t truth_instances);

struct TickCounts {
    std::int64_t tick = 0;
    std::int64_t tp = 0, fp = 0, fn = 0;
    double rms_error = 0.0;  // over matched tracks; 0 when nothing matched
};

struct RunMetrics {
    std::map<ClassLabel, std::optional<double>> per_class_ap;
    std::optional<double> map;  // unweighted mean over classes with defined AP
    std::vector<TickCounts> per_tick;
};

// mAP over classes with defined AP; absent when no class has one.
std::optional<double> aggregate_map(const std::map<ClassLabel, std::optional<double>>& per_class);

// Streaming evaluation over post-burn-in frames.
class Evaluator {
public:
    explicit Evaluator(EvalParams cfg, double tick_rate) : cfg_(cfg), tick_rate_(tick_rate) {}

    void add_frame(std::int64_t tick, std::span<const Track> tracks,
                   std::span<const BoundingBox3D> truth, const Vec3& ego_position);

    RunMetrics finish() const;

private:
    EvalParams cfg_;
    double tick_rate_;
    std::map<ClassLabel, std::vector<ApInstance>> instances_;
    std::map<ClassLabel, std::int64_t> truth_counts_;
    std::vector<TickCounts> per_tick_;
};

}  // namespace msma
