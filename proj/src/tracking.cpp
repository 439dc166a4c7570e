#include "msma/tracking.hpp"

#include "msma/association.hpp"
#include "msma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>

namespace msma {

namespace {

Mat6 cv_transition(double dt) {
    Mat6 f = Mat6::Identity();
    f(0, 3) = f(1, 4) = f(2, 5) = dt;
    return f;
}

// Discrete white-noise-acceleration process noise of intensity q.
Mat6 cv_process_noise(double dt, double q) {
    const double dt2 = dt * dt;
    Mat6 w = Mat6::Zero();
    for (int i = 0; i < 3; ++i) {
        w(i, i) = q * dt2 * dt2 / 4.0;
        w(i + 3, i + 3) = q * dt2;
        w(i, i + 3) = w(i + 3, i) = q * dt2 * dt / 2.0;
    }
    return w;
}

void symmetrize(Mat6& p) { p = 0.5 * (p + p.transpose()).eval(); }

std::uint32_t window_mask(int n) {
    return n >= 32 ? 0xffffffffu : ((1u << n) - 1u);
}

}  // namespace

void refresh_confirmation(Track& t, const TrackerParams& params) {
    if (t.status != TrackStatus::kTentative) return;
    const int recent_hits = std::popcount(t.recent & window_mask(params.confirm_n));
    if (recent_hits >= params.confirm_m) t.status = TrackStatus::kConfirmed;
}

double Track::score() const {
    if (age <= 0) return 0.0;
    return std::clamp(static_cast<double>(hits) / static_cast<double>(age), 0.0, 1.0);
}

Track predict(const Track& t, double dt, double q) {
    const Mat6 f = cv_transition(dt);
    Track out = t;
    out.estimate.mean = f * t.estimate.mean;
    Mat6 p = f * t.estimate.covariance * f.transpose() + cv_process_noise(dt, q);
    symmetrize(p);
    out.estimate.covariance = p;
    return out;
}

Track update(const Track& t, const Detection& z) {
    const Mat6& p = t.estimate.covariance;
    const Mat3 s = p.topLeftCorner<3, 3>() + z.covariance;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(s);
    if (eig.eigenvalues().minCoeff() < 1e-12) {
        throw SingularInnovation("innovation covariance is numerically singular");
    }
    const Mat3 s_inv = s.llt().solve(Mat3::Identity());
    const Eigen::Matrix<double, 6, 3> k = p.leftCols<3>() * s_inv;

    Track out = t;
    out.estimate.mean = t.estimate.mean + k * (z.position - t.estimate.position());

    Mat6 a = Mat6::Identity();
    a.leftCols<3>() -= k;
    Mat6 post = a * p * a.transpose() + k * z.covariance * k.transpose();
    symmetrize(post);
    out.estimate.covariance = post;

    out.hits += 1;
    out.misses = 0;
    return out;
}

Track make_track_from_detection(const Detection& det, const TrackerParams& params,
                                std::int64_t track_id) {
    Track t;
    t.track_id = track_id;
    t.estimate.mean.head<3>() = det.position;
    t.estimate.covariance = Mat6::Zero();
    t.estimate.covariance.topLeftCorner<3, 3>() = det.covariance;
    t.estimate.covariance.bottomRightCorner<3, 3>() =
        params.birth_velocity_var * Mat3::Identity();
    t.class_label = det.class_label;
    t.hits = 1;
    t.age = 1;
    t.misses = 0;
    t.status = TrackStatus::kTentative;
    t.recent = 1;
    return t;
}

AssignmentResult associate_detections(std::span<const Track> tracks,
                                      std::span<const Detection> detections, double gate) {
    Eigen::MatrixXd cost(tracks.size(), detections.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (std::size_t j = 0; j < detections.size(); ++j) {
            cost(i, j) = mahalanobis_cost(tracks[i].estimate, detections[j]);
        }
    }
    return solve_assignment(make_gated_problem(std::move(cost), gate));
}

void step_tracker(std::vector<Track>& tracks, std::span<const Detection> detections,
                  const AssignmentResult& association, const TrackerParams& params,
                  std::int64_t& next_track_id) {
    for (const auto& [row, col] : association.pairs) {
        tracks[row] = update(tracks[row], detections[col]);
        tracks[row].recent |= 1u;
    }
    for (int row : association.unassigned_rows) {
        tracks[row].misses += 1;
    }
    for (int col : association.unassigned_cols) {
        tracks.push_back(make_track_from_detection(detections[col], params, next_track_id++));
    }
    for (Track& t : tracks) {
        refresh_confirmation(t, params);
        if (t.misses >= params.max_misses) t.status = TrackStatus::kDead;
    }
    std::erase_if(tracks, [](const Track& t) { return t.status == TrackStatus::kDead; });
}

void Tracker::step(std::span<const Detection> detections) {
    for (Track& t : tracks_) {
        t = predict(t, dt_, params_.process_noise_q);
        t.age += 1;
        t.recent <<= 1;
    }
    const AssignmentResult assoc = associate_detections(tracks_, detections, params_.gate);
    step_tracker(tracks_, detections, assoc, params_, next_track_id_);
}

void Tracker::ingest(std::span<const Detection> detections) {
    const AssignmentResult assoc = associate_detections(tracks_, detections, params_.gate);
    for (const auto& [row, col] : assoc.pairs) {
        tracks_[row] = update(tracks_[row], detections[col]);
        tracks_[row].recent |= 1u;
    }
    // Ingested data is another platform's track list, so matching leftovers
    // within the separation radius of a held track are duplicate reports,
    // not new objects. Without this the network re-seeds disagreeing copies
    // of every track it circulates.
    for (int col : assoc.unassigned_cols) {
        bool near_existing = false;
        for (const Track& t : tracks_) {
            if ((t.estimate.position() - detections[col].position).norm() <=
                params_.remote_birth_separation) {
                near_existing = true;
                break;
            }
        }
        if (near_existing) continue;
        tracks_.push_back(make_track_from_detection(detections[col], params_, next_track_id_++));
    }
    for (Track& t : tracks_) refresh_confirmation(t, params_);
}

std::vector<Track> Tracker::confirmed() const {
    std::vector<Track> out;
    for (const Track& t : tracks_) {
        if (t.status == TrackStatus::kConfirmed) out.push_back(t);
    }
    return out;
}

}  // namespace msma
