#pragma once

#include "msma/tracking.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>

namespace msma {

// ============================================================
// Multi-agent fusion strategies
// ============================================================

struct FusionWeight {
    double omega = 0.5;  // CI blending parameter, in [0, 1]
};

enum class EgoModel { kLocal, kFusionAtTracking, kFusionPostTracking };

const char* to_string(EgoModel m);

// Track estimate as shared over the network (sender-local id preserved).
struct RemoteTrack {
    std::int64_t remote_track_id = 0;
    GaussianEstimate estimate;
    ClassLabel class_label = ClassLabel::kCar;
};

// Covariance intersection: P_f^-1 = w Pa^-1 + (1-w) Pb^-1, with the mean
// blended through the same information weights. Omega minimizes trace(P_f)
// via golden-section search on [0, 1] (trace is unimodal for SPD inputs).
// Throws SingularCovariance.
std::pair<GaussianEstimate, FusionWeight> covariance_intersection(const GaussianEstimate& a,
                                                                  const GaussianEstimate& b);

// Evaluates the CI fused estimate at a fixed omega (used by the search and
// exposed for verification).
GaussianEstimate ci_at_omega(const GaussianEstimate& a, const GaussianEstimate& b, double omega);

// Naive detection-level fusion: each remote track becomes a fresh position
// measurement pushed through the tracker's normal associate-and-update path.
// No correlation bookkeeping, by design.
void fuse_at_tracking(Tracker& ego, std::span<const RemoteTrack> remote,
                      const std::string& sender_id, std::int64_t tick);

// Post-tracking DDF: gated Mahalanobis association between ego and remote
// confirmed tracks, CI merge on assigned pairs, and conservative track birth
// (covariance doubled) from unassigned remote tracks.
void fuse_post_tracking(Tracker& ego, std::span<const RemoteTrack> remote);

}  // namespace msma
