#include "msma/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace msma {

namespace {

double planar_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

FrameMatch match_frame(std::span<const Track> tracks, std::span<const BoundingBox3D> truth,
                       const Vec3& ego_position, const EvalParams& cfg) {
    FrameMatch out;

    // Both sides are gated to the evaluation region around the ego; tracks
    // beyond it are ignored rather than counted as false positives.
    std::vector<std::size_t> gated_truth, gated_tracks;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (planar_distance(truth[i].center, ego_position) <= cfg.range_gate) {
            gated_truth.push_back(i);
        }
    }
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (planar_distance(tracks[i].estimate.position(), ego_position) <= cfg.range_gate) {
            gated_tracks.push_back(i);
        }
    }
    out.in_gate_truth = static_cast<std::int64_t>(gated_truth.size());

    struct Candidate {
        double distance;
        std::int64_t track_id;
        std::int64_t object_id;
        std::size_t track_idx;
        std::size_t truth_idx;
    };
    std::vector<Candidate> candidates;
    for (std::size_t ti : gated_tracks) {
        for (std::size_t oi : gated_truth) {
            const double d = (tracks[ti].estimate.position() - truth[oi].center).norm();
            if (d <= cfg.match_distance) {
                candidates.push_back({d, tracks[ti].track_id, truth[oi].object_id, ti, oi});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        if (a.track_id != b.track_id) return a.track_id < b.track_id;
        return a.object_id < b.object_id;
    });

    std::set<std::size_t> used_tracks, used_truth;
    for (const Candidate& c : candidates) {
        if (used_tracks.count(c.track_idx) || used_truth.count(c.truth_idx)) continue;
        used_tracks.insert(c.track_idx);
        used_truth.insert(c.truth_idx);
        out.tp.push_back({c.track_id, c.object_id, c.distance});
    }
    for (std::size_t ti : gated_tracks) {
        if (!used_tracks.count(ti)) out.fp_tracks.push_back(tracks[ti].track_id);
    }
    for (std::size_t oi : gated_truth) {
        if (!used_truth.count(oi)) out.fn_objects.push_back(truth[oi].object_id);
    }
    return out;
}

std::optional<double> average_precision(std::vector<ApInstance> instances,
                                        std::int64_t truth_instances) {
    if (truth_instances <= 0) return std::nullopt;  // AP undefined without ground truth
    std::sort(instances.begin(), instances.end(), [](const ApInstance& a, const ApInstance& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.tick != b.tick) return a.tick < b.tick;
        return a.track_id < b.track_id;
    });

    std::vector<double> recall, precision;
    recall.reserve(instances.size());
    precision.reserve(instances.size());
    std::int64_t tp = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].is_tp) ++tp;
        recall.push_back(static_cast<double>(tp) / static_cast<double>(truth_instances));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    }

    // Right-to-left precision envelope, then 101-point interpolation.
    std::vector<double> envelope(precision.size());
    double run = 0.0;
    for (std::size_t i = precision.size(); i-- > 0;) {
        run = std::max(run, precision[i]);
        envelope[i] = run;
    }

    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = static_cast<double>(i) / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end()) {
            sum += envelope[static_cast<std::size_t>(it - recall.begin())];
        }
    }
    return sum / 101.0;
}

std::optional<double> aggregate_map(const std::map<ClassLabel, std::optional<double>>& per_class) {
    double sum = 0.0;
    int count = 0;
    for (const auto& [cls, ap] : per_class) {
        if (ap) {
            sum += *ap;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

void Evaluator::add_frame(std::int64_t tick, std::span<const Track> tracks,
                          std::span<const BoundingBox3D> truth, const Vec3& ego_position) {
    const double time = static_cast<double>(tick) / tick_rate_;
    if (time < cfg_.burn_in) return;

    const FrameMatch match = match_frame(tracks, truth, ego_position, cfg_);

    std::map<std::int64_t, const Track*> track_by_id;
    for (const Track& t : tracks) track_by_id[t.track_id] = &t;
    std::map<std::int64_t, const BoundingBox3D*> truth_by_id;
    for (const BoundingBox3D& b : truth) truth_by_id[b.object_id] = &b;

    double sq_sum = 0.0;
    for (const auto& tp : match.tp) {
        const Track* t = track_by_id.at(tp.track_id);
        const ClassLabel cls = truth_by_id.at(tp.object_id)->class_label;
        instances_[cls].push_back(ApInstance{t->score(), true, tick, tp.track_id});
        sq_sum += tp.distance * tp.distance;
    }
    for (std::int64_t fp_id : match.fp_tracks) {
        const Track* t = track_by_id.at(fp_id);
        instances_[t->class_label].push_back(ApInstance{t->score(), false, tick, fp_id});
    }
    for (std::int64_t fn_id : match.fn_objects) {
        truth_counts_[truth_by_id.at(fn_id)->class_label] += 1;
    }
    for (const auto& tp : match.tp) {
        truth_counts_[truth_by_id.at(tp.object_id)->class_label] += 1;
    }

    TickCounts counts;
    counts.tick = tick;
    counts.tp = static_cast<std::int64_t>(match.tp.size());
    counts.fp = static_cast<std::int64_t>(match.fp_tracks.size());
    counts.fn = static_cast<std::int64_t>(match.fn_objects.size());
    counts.rms_error = match.tp.empty() ? 0.0 : std::sqrt(sq_sum / match.tp.size());
    per_tick_.push_back(counts);
}

RunMetrics Evaluator::finish() const {
    RunMetrics m;
    for (ClassLabel cls : {ClassLabel::kCar, ClassLabel::kPedestrian, ClassLabel::kTruck}) {
        const auto inst_it = instances_.find(cls);
        const auto truth_it = truth_counts_.find(cls);
        const std::int64_t truth_count = truth_it == truth_counts_.end() ? 0 : truth_it->second;
        std::vector<ApInstance> inst =
            inst_it == instances_.end() ? std::vector<ApInstance>{} : inst_it->second;
        m.per_class_ap[cls] = average_precision(std::move(inst), truth_count);
    }
    m.map = aggregate_map(m.per_class_ap);
    m.per_tick = per_tick_;
    return m;
}

}  // namespace msma
