#pragma once

#include "msma/geometry.hpp"

#include <span>
#include <vector>

namespace msma {

// ============================================================
// Depth rendering and occlusion labeling
// ============================================================

// Per-pixel range image (Euclidean camera-center-to-surface distance in
// meters). Background pixels hold +infinity.
struct DepthImage {
    int width = 0, height = 0;
    std::vector<float> values;  // row-major

    static DepthImage background(int width, int height);

    float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
    float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
};

enum class Occlusion { kNone, kPartial, kMost, kComplete, kNotInView };

const char* to_string(Occlusion o);
std::optional<Occlusion> occlusion_from_string(const std::string& s);

struct OcclusionResult {
    double ratio = 0.0;  // fraction of projected-box pixels holding a plausible depth
    Occlusion category = Occlusion::kNotInView;
};

struct VisibilityConfig {
    double tau = 5.0;         // depth plausibility threshold (m)
    double none_min = 0.75;   // ratio >= none_min      -> NONE
    double partial_min = 0.25;// ratio >= partial_min   -> PARTIAL
    double most_min = 0.05;   // ratio >= most_min      -> MOST, else COMPLETE

    void validate() const;  // requires 0 < most_min < partial_min < none_min < 1
};

Occlusion categorize(double ratio, const VisibilityConfig& cfg);

// Analytic z-buffer over oriented boxes: each pixel gets the smallest range
// among ray-box intersections through its center, +infinity where nothing is
// hit. Boxes are expressed in the same frame as cam_pose (world).
DepthImage render_depth(std::span<const BoundingBox3D> boxes,
                        const CameraCalibration& calib, const Pose& cam_pose);

// Ray-box intersection helper; returns the nearest positive hit range along
// the (unit) direction, or absent. Exposed for the rendering path and reused
// by tests as a pixel-level probe.
std::optional<double> ray_box_range(const Vec3& origin, const Vec3& unit_dir,
                                    const BoundingBox3D& box);

// Classifies one object's occlusion against a rendered depth image: project
// the box, predict its near-surface range as |camera - center| - length/2,
// and count projected pixels whose depth is within tau of that prediction.
OcclusionResult occlusion_by_depth(const BoundingBox3D& box,
                                   const CameraCalibration& calib,
                                   const Pose& cam_pose, const DepthImage& depth,
                                   const VisibilityConfig& cfg);

struct ObjectLabel {
    BoundingBox3D box;  // world frame, id preserved
    OcclusionResult occlusion;
};

struct SensorView {
    CameraCalibration calibration;
    Pose pose;  // camera frame in world
};

// Renders each sensor's depth image and returns, per sensor, the objects that
// are visible from it (occlusion NONE or PARTIAL). Object ids are preserved
// so labels are consistent across sensors.
std::vector<std::vector<ObjectLabel>> label_frame(std::span<const BoundingBox3D> objects,
                                                  std::span<const SensorView> sensors,
                                                  const VisibilityConfig& cfg);

}  // namespace msma
