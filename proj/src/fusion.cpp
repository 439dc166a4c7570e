#include "msma/fusion.hpp"

#include "msma/association.hpp"
#include "msma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace msma {

const char* to_string(EgoModel m) {
    switch (m) {
        case EgoModel::kLocal: return "local";
        case EgoModel::kFusionAtTracking: return "track-fusion";
        case EgoModel::kFusionPostTracking: return "ddf";
    }
    return "local";
}

namespace {

Mat6 checked_inverse(const Mat6& p, const char* which) {
    Eigen::SelfAdjointEigenSolver<Mat6> eig(p);
    if (eig.eigenvalues().minCoeff() < 1e-12) {
        throw SingularCovariance(std::string("covariance intersection input ") + which +
                                 " is singular");
    }
    return p.llt().solve(Mat6::Identity());
}

}  // namespace

GaussianEstimate ci_at_omega(const GaussianEstimate& a, const GaussianEstimate& b, double omega) {
    const Mat6 ia = checked_inverse(a.covariance, "a");
    const Mat6 ib = checked_inverse(b.covariance, "b");
    const Mat6 info = omega * ia + (1.0 - omega) * ib;
    GaussianEstimate out;
    out.covariance = info.llt().solve(Mat6::Identity());
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    out.mean = out.covariance * (omega * ia * a.mean + (1.0 - omega) * ib * b.mean);
    return out;
}

std::pair<GaussianEstimate, FusionWeight> covariance_intersection(const GaussianEstimate& a,
                                                                  const GaussianEstimate& b) {
    const Mat6 ia = checked_inverse(a.covariance, "a");
    const Mat6 ib = checked_inverse(b.covariance, "b");

    const auto trace_at = [&](double w) {
        const Mat6 info = w * ia + (1.0 - w) * ib;
        return info.llt().solve(Mat6::Identity()).trace();
    };

    // Golden-section search; trace(P_f(w)) is unimodal on [0, 1]. Exact ties
    // shrink both sides so a flat trace (equal covariances) settles at 0.5.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = trace_at(x1), f2 = trace_at(x2);
    while (hi - lo > 1e-4) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = trace_at(x1);
        } else if (f2 < f1) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = trace_at(x2);
        } else {
            lo = x1;
            hi = x2;
            x1 = hi - inv_phi * (hi - lo);
            x2 = lo + inv_phi * (hi - lo);
            f1 = trace_at(x1);
            f2 = trace_at(x2);
        }
    }
    double omega = 0.5 * (lo + hi);
    // The exact endpoints are valid choices the interior search cannot
    // reach; snap only on strict improvement.
    if (trace_at(0.0) < trace_at(omega)) omega = 0.0;
    if (trace_at(1.0) < trace_at(omega)) omega = 1.0;

    return {ci_at_omega(a, b, omega), FusionWeight{omega}};
}

void fuse_at_tracking(Tracker& ego, std::span<const RemoteTrack> remote,
                      const std::string& sender_id, std::int64_t tick) {
    std::vector<Detection> as_detections;
    as_detections.reserve(remote.size());
    for (const RemoteTrack& r : remote) {
        Detection det;
        det.sensor_id = sender_id;
        det.tick = tick;
        det.position = r.estimate.position();
        det.covariance = r.estimate.position_cov();
        det.class_label = r.class_label;
        det.is_clutter = false;
        as_detections.push_back(std::move(det));
    }
    ego.ingest(as_detections);
}

void fuse_post_tracking(Tracker& ego, std::span<const RemoteTrack> remote) {
    // The remote side of the problem is confirmed by construction (only
    // confirmed tracks are transmitted). The ego side includes tentative
    // tracks so that remote-seeded births keep associating with the remote
    // stream and can reach confirmation.
    auto& tracks = ego.tracks();

    Eigen::MatrixXd cost(tracks.size(), remote.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (std::size_t j = 0; j < remote.size(); ++j) {
            cost(i, j) = mahalanobis_cost(tracks[i].estimate, remote[j].estimate);
        }
    }
    const AssignmentResult assoc =
        solve_assignment(make_gated_problem(std::move(cost), ego.params().gate));

    for (const auto& [row, col] : assoc.pairs) {
        Track& t = tracks[row];
        auto [fused, weight] = covariance_intersection(t.estimate, remote[col].estimate);
        (void)weight;
        t.estimate = fused;
        // A fused confirmed remote track is lifecycle corroboration: it keeps
        // the track alive and feeds M-of-N confirmation. It is not a local
        // detection, so the detection count (and with it the score) is left
        // alone; track scores keep reflecting the agent's own evidence.
        t.misses = 0;
        t.recent |= 1u;
        refresh_confirmation(t, ego.params());
    }

    // Remote tracks with no ego counterpart seed new tracks, conservatively
    // inflated since the remote filter's error history is unknown here.
    // Surplus copies of an object the ego already tracks (left over by the
    // one-to-one matching) are dropped instead of seeded; the separation test
    // is Euclidean so that a collapsed covariance cannot smuggle a duplicate
    // past the gate.
    for (int col : assoc.unassigned_cols) {
        bool near_existing = false;
        for (const Track& t : tracks) {
            if ((t.estimate.position() - remote[col].estimate.position()).norm() <=
                ego.params().remote_birth_separation) {
                near_existing = true;
                break;
            }
        }
        if (near_existing) continue;
        Track t;
        t.track_id = ego.allocate_track_id();
        t.estimate = remote[col].estimate;
        t.estimate.covariance *= 2.0;
        t.class_label = remote[col].class_label;
        t.hits = 1;
        t.age = 1;
        t.misses = 0;
        t.status = TrackStatus::kTentative;
        t.recent = 1;
        ego.tracks().push_back(std::move(t));
    }
}

}  // namespace msma
