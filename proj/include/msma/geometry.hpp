#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace msma {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kOrthoTol = 1e-9;

// ============================================================
// Rigid transforms and the reference frame chain
// ============================================================

// Rotation about +z / +y / +x by angle (radians).
Mat3 rot_z(double angle);
Mat3 rot_y(double angle);
Mat3 rot_x(double angle);

bool is_orthonormal(const Mat3& r, double tol = kOrthoTol);

// Gram-Schmidt re-orthonormalization (column-wise), preserving det = +1.
Mat3 orthonormalized(const Mat3& r);

struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return Pose{}; }

    // Map a point from this pose's frame into its parent frame.
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// Result applies b then a: compose(a, b).apply(p) == a.apply(b.apply(p)).
// Re-orthonormalizes the rotation when drift exceeds kOrthoTol.
Pose compose(const Pose& a, const Pose& b);

Pose inverse(const Pose& p);

struct ReferenceFrame {
    std::string id;
    std::optional<std::string> parent;  // absent only for the world frame
    Pose pose_in_parent;
};

// Forest of frames rooted at a unique world frame. Lookups walk parent chains
// to the common ancestor, so registration between any two connected frames is
// a single chain of pose compositions.
class FrameTree {
public:
    explicit FrameTree(std::string world_id = "world");

    const std::string& world_id() const { return world_id_; }

    // Adds a non-world frame. Throws ValidationError on duplicate ids, on a
    // frame that parents itself, or when the insertion closes a cycle among
    // known frames.
    void add(ReferenceFrame frame);

    bool contains(const std::string& id) const;

    // Rigid transform mapping points expressed in `from` into `to`.
    // Throws UnknownFrame / DisconnectedFrames.
    Pose transform_to(const std::string& from, const std::string& to) const;

private:
    // Chain of (frame id, pose_in_parent) from `id` up to its root.
    std::vector<std::pair<std::string, Pose>> chain_to_root(const std::string& id) const;

    std::string world_id_;
    std::map<std::string, ReferenceFrame> frames_;
};

// ============================================================
// Boxes and projective cameras
// ============================================================

enum class ClassLabel { kCar, kPedestrian, kTruck };

const char* to_string(ClassLabel c);
std::optional<ClassLabel> class_label_from_string(const std::string& s);

struct BoundingBox3D {
    Vec3 center = Vec3::Zero();     // expressed in frame_id
    Vec3 dimensions = Vec3::Ones(); // length (along yaw), width, height; all > 0
    double yaw = 0.0;               // about +z of frame_id
    std::int64_t object_id = 0;
    ClassLabel class_label = ClassLabel::kCar;
    std::string frame_id = "world";

    std::array<Vec3, 8> corners() const;
};

// Inclusive integer pixel range; a pixel (u, v) belongs to the box when its
// integer-coordinate center lies inside the clamped projected hull.
struct BoundingBox2D {
    int u_min = 0, v_min = 0, u_max = 0, v_max = 0;

    int width() const { return u_max - u_min + 1; }
    int height() const { return v_max - v_min + 1; }
    std::int64_t pixel_count() const {
        return static_cast<std::int64_t>(width()) * height();
    }
};

// Pinhole camera, +z forward, +x right, +y down. Pixel centers sit at integer
// coordinates: u = fx * x/z + cx.
struct CameraCalibration {
    Mat3 intrinsics = Mat3::Identity();
    int width = 0, height = 0;
    std::string frame_id;

    static CameraCalibration make(double fx, double fy, double cx, double cy,
                                  int width, int height, std::string frame_id = "");

    double fx() const { return intrinsics(0, 0); }
    double fy() const { return intrinsics(1, 1); }
    double cx() const { return intrinsics(0, 2); }
    double cy() const { return intrinsics(1, 2); }

    // Throws ValidationError when fx/fy <= 0 or the principal point is
    // outside the image.
    void validate() const;
};

// Projects the 8 corners through the pinhole model and returns the
// axis-aligned pixel hull clamped to image bounds. Corners behind the image
// plane (z <= 0) are dropped before the hull is taken; absent when no corner
// is in front or no pixel center falls inside the clamped hull.
// `cam_pose` is the pose of the camera frame in the box's frame.
std::optional<BoundingBox2D> project_box(const BoundingBox3D& box,
                                         const CameraCalibration& calib,
                                         const Pose& cam_pose);

}  // namespace msma
