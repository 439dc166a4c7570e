#include "msma/visibility.hpp"

#include "msma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msma {

namespace {
constexpr float kInf = std::numeric_limits<float>::infinity();
}

DepthImage DepthImage::background(int width, int height) {
    DepthImage d;
    d.width = width;
    d.height = height;
    d.values.assign(static_cast<std::size_t>(width) * height, kInf);
    return d;
}

const char* to_string(Occlusion o) {
    switch (o) {
        case Occlusion::kNone: return "NONE";
        case Occlusion::kPartial: return "PARTIAL";
        case Occlusion::kMost: return "MOST";
        case Occlusion::kComplete: return "COMPLETE";
        case Occlusion::kNotInView: return "NOT_IN_VIEW";
    }
    return "NOT_IN_VIEW";
}

std::optional<Occlusion> occlusion_from_string(const std::string& s) {
    if (s == "NONE") return Occlusion::kNone;
    if (s == "PARTIAL") return Occlusion::kPartial;
    if (s == "MOST") return Occlusion::kMost;
    if (s == "COMPLETE") return Occlusion::kComplete;
    if (s == "NOT_IN_VIEW") return Occlusion::kNotInView;
    return std::nullopt;
}

void VisibilityConfig::validate() const {
    if (!(0.0 < most_min && most_min < partial_min && partial_min < none_min && none_min < 1.0)) {
        throw ValidationError("occlusion thresholds must satisfy 0 < most_min < partial_min < none_min < 1");
    }
    if (tau <= 0.0) throw ValidationError("visibility tau must be positive");
}

Occlusion categorize(double ratio, const VisibilityConfig& cfg) {
    if (ratio >= cfg.none_min) return Occlusion::kNone;
    if (ratio >= cfg.partial_min) return Occlusion::kPartial;
    if (ratio >= cfg.most_min) return Occlusion::kMost;
    return Occlusion::kComplete;
}

std::optional<double> ray_box_range(const Vec3& origin, const Vec3& unit_dir,
                                    const BoundingBox3D& box) {
    // Slab test in the box's local frame (yaw about +z).
    const Mat3 r_bw = rot_z(-box.yaw);
    const Vec3 o = r_bw * (origin - box.center);
    const Vec3 d = r_bw * unit_dir;
    const Vec3 half = 0.5 * box.dimensions;

    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(d[axis]) < 1e-12) {
            if (std::abs(o[axis]) > half[axis]) return std::nullopt;
            continue;
        }
        double t0 = (-half[axis] - o[axis]) / d[axis];
        double t1 = (half[axis] - o[axis]) / d[axis];
        if (t0 > t1) std::swap(t0, t1);
        t_min = std::max(t_min, t0);
        t_max = std::min(t_max, t1);
        if (t_min > t_max) return std::nullopt;
    }
    // t_min == 0 means the origin is inside the box; the visible surface is
    // then the exit face.
    const double t = t_min > 0.0 ? t_min : t_max;
    if (t <= 0.0) return std::nullopt;
    return t;
}

DepthImage render_depth(std::span<const BoundingBox3D> boxes,
                        const CameraCalibration& calib, const Pose& cam_pose) {
    DepthImage depth = DepthImage::background(calib.width, calib.height);
    const Mat3 r_wc = cam_pose.rotation;
    const Mat3 r_cw = r_wc.transpose();
    const Vec3 origin = cam_pose.translation;

    for (const BoundingBox3D& box : boxes) {
        // Pixel range to scan. When all corners are in front, the projected
        // hull bounds the box's image exactly; when the box pierces the image
        // plane the hull of in-front corners may underestimate it, so fall
        // back to the full image.
        int u0 = 0, u1 = calib.width - 1, v0 = 0, v1 = calib.height - 1;
        int in_front = 0, behind = 0;
        for (const Vec3& c : box.corners()) {
            const Vec3 p = r_cw * (c - origin);
            (p.z() > 0.0 ? in_front : behind)++;
        }
        if (in_front == 0) continue;
        if (behind == 0) {
            const auto b2d = project_box(box, calib, cam_pose);
            if (!b2d) continue;
            u0 = b2d->u_min;
            u1 = b2d->u_max;
            v0 = b2d->v_min;
            v1 = b2d->v_max;
        }

        for (int v = v0; v <= v1; ++v) {
            for (int u = u0; u <= u1; ++u) {
                Vec3 dir_cam((u - calib.cx()) / calib.fx(),
                             (v - calib.cy()) / calib.fy(), 1.0);
                const Vec3 dir = (r_wc * dir_cam).normalized();
                if (auto t = ray_box_range(origin, dir, box)) {
                    float& px = depth.at(u, v);
                    px = std::min(px, static_cast<float>(*t));
                }
            }
        }
    }
    return depth;
}

OcclusionResult occlusion_by_depth(const BoundingBox3D& box,
                                   const CameraCalibration& calib,
                                   const Pose& cam_pose, const DepthImage& depth,
                                   const VisibilityConfig& cfg) {
    const auto b2d = project_box(box, calib, cam_pose);
    if (!b2d) return OcclusionResult{0.0, Occlusion::kNotInView};

    // Expected near-surface range: camera-to-center distance minus half the
    // box length.
    const double expected = (cam_pose.translation - box.center).norm() - 0.5 * box.dimensions[0];

    std::int64_t plausible = 0;
    for (int v = b2d->v_min; v <= b2d->v_max; ++v) {
        for (int u = b2d->u_min; u <= b2d->u_max; ++u) {
            const double diff = std::abs(static_cast<double>(depth.at(u, v)) - expected);
            if (diff <= cfg.tau) ++plausible;
        }
    }
    const double ratio = static_cast<double>(plausible) / static_cast<double>(b2d->pixel_count());
    return OcclusionResult{ratio, categorize(ratio, cfg)};
}

std::vector<std::vector<ObjectLabel>> label_frame(std::span<const BoundingBox3D> objects,
                                                  std::span<const SensorView> sensors,
                                                  const VisibilityConfig& cfg) {
    std::vector<std::vector<ObjectLabel>> out;
    out.reserve(sensors.size());
    for (const SensorView& sensor : sensors) {
        const DepthImage depth = render_depth(objects, sensor.calibration, sensor.pose);
        std::vector<ObjectLabel> labels;
        for (const BoundingBox3D& obj : objects) {
            const OcclusionResult occ =
                occlusion_by_depth(obj, sensor.calibration, sensor.pose, depth, cfg);
            if (occ.category == Occlusion::kNone || occ.category == Occlusion::kPartial) {
                labels.push_back(ObjectLabel{obj, occ});
            }
        }
        out.push_back(std::move(labels));
    }
    return out;
}

}  // namespace msma
