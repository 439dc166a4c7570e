#pragma once

#include "msma/geometry.hpp"
#include "msma/scenario.hpp"
#include "msma/sensing.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace msma {

struct AssignmentResult;

// ============================================================
// Per-agent constant-velocity Kalman tracker
// ============================================================

// State is [x y z vx vy vz] in the world frame.
struct GaussianEstimate {
    Vec6 mean = Vec6::Zero();
    Mat6 covariance = Mat6::Identity();

    Vec3 position() const { return mean.head<3>(); }
    Vec3 velocity() const { return mean.tail<3>(); }
    Mat3 position_cov() const { return covariance.topLeftCorner<3, 3>(); }
};

enum class TrackStatus { kTentative, kConfirmed, kDead };

struct Track {
    std::int64_t track_id = 0;
    GaussianEstimate estimate;
    ClassLabel class_label = ClassLabel::kCar;
    int hits = 0;    // associated detections over the track's life
    int age = 0;     // ticks since birth (1 at birth)
    int misses = 0;  // consecutive unassociated ticks
    TrackStatus status = TrackStatus::kTentative;
    std::uint32_t recent = 0;  // association bitmask, bit 0 = current tick

    double score() const;  // hits / age, clamped to [0, 1]
};

// Constant-velocity prediction with discrete white-noise-acceleration process
// noise of intensity q; symmetry restored after the propagation.
Track predict(const Track& t, double dt, double q);

// Position-measurement Kalman update in Joseph form. Throws
// SingularInnovation when the innovation covariance is numerically singular.
Track update(const Track& t, const Detection& z);

// Applies one tick's association outcome to a predicted track list:
// associated pairs are updated, unassociated detections spawn tentative
// tracks, unassociated tracks accrue misses, and M-of-N confirmation plus
// miss-based death are applied. Dead tracks are removed.
void step_tracker(std::vector<Track>& tracks, std::span<const Detection> detections,
                  const AssignmentResult& association, const TrackerParams& params,
                  std::int64_t& next_track_id);

// Gated Mahalanobis detection-to-track association (tracks are rows).
AssignmentResult associate_detections(std::span<const Track> tracks,
                                      std::span<const Detection> detections, double gate);

class Tracker {
public:
    explicit Tracker(TrackerParams params, double dt) : params_(params), dt_(dt) {}

    // Full tick: predict, associate, update, lifecycle.
    void step(std::span<const Detection> detections);

    // Mid-tick measurement ingestion (used by fusion-at-tracking): associate
    // and update without prediction, aging, or miss accrual. Unassociated
    // detections spawn tracks.
    void ingest(std::span<const Detection> detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    std::vector<Track>& tracks() { return tracks_; }
    std::vector<Track> confirmed() const;
    const TrackerParams& params() const { return params_; }
    std::int64_t allocate_track_id() { return next_track_id_++; }

private:
    TrackerParams params_;
    double dt_;
    std::vector<Track> tracks_;
    std::int64_t next_track_id_ = 1;
};

// Fresh tentative track from a detection: diffuse velocity prior, no
// position-velocity coupling.
Track make_track_from_detection(const Detection& det, const TrackerParams& params,
                                std::int64_t track_id);

// Promotes a tentative track to confirmed when its recent-association window
// holds at least M hits out of the last N ticks.
void refresh_confirmation(Track& t, const TrackerParams& params);

}  // namespace msma
