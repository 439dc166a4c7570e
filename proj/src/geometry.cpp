#include "msma/geometry.hpp"

#include "msma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msma {

Mat3 rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

Mat3 rot_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return r;
}

Mat3 rot_x(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}

bool is_orthonormal(const Mat3& r, double tol) {
    const Mat3 err = r.transpose() * r - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 orthonormalized(const Mat3& r) {
    Vec3 c0 = r.col(0).normalized();
    Vec3 c1 = (r.col(1) - c0 * c0.dot(r.col(1))).normalized();
    Vec3 c2 = c0.cross(c1);  // right-handed by construction
    Mat3 out;
    out.col(0) = c0;
    out.col(1) = c1;
    out.col(2) = c2;
    return out;
}

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    if (!is_orthonormal(out.rotation)) {
        out.rotation = orthonormalized(out.rotation);
    }
    return out;
}

Pose inverse(const Pose& p) {
    Pose out;
    out.rotation = p.rotation.transpose();
    out.translation = -(out.rotation * p.translation);
    return out;
}

// ------------------------------------------------------------
// FrameTree
// ------------------------------------------------------------

FrameTree::FrameTree(std::string world_id) : world_id_(std::move(world_id)) {}

void FrameTree::add(ReferenceFrame frame) {
    if (frame.id == world_id_) {
        throw ValidationError("frame id collides with the world frame: " + frame.id);
    }
    if (!frame.parent.has_value()) {
        throw ValidationError("non-world frame must have a parent: " + frame.id);
    }
    if (*frame.parent == frame.id) {
        throw ValidationError("frame parents itself: " + frame.id);
    }
    if (frames_.count(frame.id)) {
        throw ValidationError("duplicate frame id: " + frame.id);
    }
    // Cycle check over frames known so far.
    std::string cur = *frame.parent;
    std::size_t steps = 0;
    while (cur != world_id_) {
        if (cur == frame.id || steps++ > frames_.size() + 1) {
            throw ValidationError("frame insertion closes a cycle: " + frame.id);
        }
        auto it = frames_.find(cur);
        if (it == frames_.end()) break;  // dangling parent, resolved at query time
        cur = it->second.parent.value();
    }
    frames_.emplace(frame.id, std::move(frame));
}

bool FrameTree::contains(const std::string& id) const {
    return id == world_id_ || frames_.count(id) > 0;
}

std::vector<std::pair<std::string, Pose>> FrameTree::chain_to_root(const std::string& id) const {
    std::vector<std::pair<std::string, Pose>> chain;
    std::string cur = id;
    while (cur != world_id_) {
        auto it = frames_.find(cur);
        if (it == frames_.end()) {
            // Dangling subtree: `cur` is its root.
            break;
        }
        chain.emplace_back(cur, it->second.pose_in_parent);
        cur = it->second.parent.value();
    }
    chain.emplace_back(cur, Pose::identity());  // the root itself
    return chain;
}

Pose FrameTree::transform_to(const std::string& from, const std::string& to) const {
    if (!contains(from)) throw UnknownFrame(from);
    if (!contains(to)) throw UnknownFrame(to);

    const auto up_from = chain_to_root(from);
    const auto up_to = chain_to_root(to);

    // Deepest common ancestor: scan the `from` chain in order (deep to root)
    // and stop at the first frame the `to` chain also passes through.
    std::size_t i_from = up_from.size(), i_to = up_to.size();
    for (std::size_t i = 0; i < up_from.size(); ++i) {
        for (std::size_t j = 0; j < up_to.size(); ++j) {
            if (up_from[i].first == up_to[j].first) {
                i_from = i;
                i_to = j;
                goto found;
            }
        }
    }
found:
    if (i_from == up_from.size()) throw DisconnectedFrames(from, to);

    // ancestor_from_X = composition of pose_in_parent links from X up to the
    // common ancestor (exclusive), leaf-first so parents apply last.
    Pose anc_from_a = Pose::identity();
    for (std::size_t i = 0; i < i_from; ++i) {
        anc_from_a = compose(up_from[i].second, anc_from_a);
    }
    Pose anc_from_b = Pose::identity();
    for (std::size_t j = 0; j < i_to; ++j) {
        anc_from_b = compose(up_to[j].second, anc_from_b);
    }
    return compose(inverse(anc_from_b), anc_from_a);
}

// ------------------------------------------------------------
// Boxes and cameras
// ------------------------------------------------------------

const char* to_string(ClassLabel c) {
    switch (c) {
        case ClassLabel::kCar: return "car";
        case ClassLabel::kPedestrian: return "pedestrian";
        case ClassLabel::kTruck: return "truck";
    }
    return "car";
}

std::optional<ClassLabel> class_label_from_string(const std::string& s) {
    if (s == "car") return ClassLabel::kCar;
    if (s == "pedestrian") return ClassLabel::kPedestrian;
    if (s == "truck") return ClassLabel::kTruck;
    return std::nullopt;
}

std::array<Vec3, 8> BoundingBox3D::corners() const {
    const Vec3 fwd(std::cos(yaw), std::sin(yaw), 0.0);
    const Vec3 left(-std::sin(yaw), std::cos(yaw), 0.0);
    const Vec3 up(0.0, 0.0, 1.0);
    const double hl = 0.5 * dimensions[0];
    const double hw = 0.5 * dimensions[1];
    const double hh = 0.5 * dimensions[2];
    std::array<Vec3, 8> out;
    int k = 0;
    for (double sl : {-1.0, 1.0})
        for (double sw : {-1.0, 1.0})
            for (double sh : {-1.0, 1.0})
                out[k++] = center + fwd * (sl * hl) + left * (sw * hw) + up * (sh * hh);
    return out;
}

CameraCalibration CameraCalibration::make(double fx, double fy, double cx, double cy,
                                          int width, int height, std::string frame_id) {
    CameraCalibration c;
    c.intrinsics << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    c.width = width;
    c.height = height;
    c.frame_id = std::move(frame_id);
    c.validate();
    return c;
}

void CameraCalibration::validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("camera image size must be positive");
    if (fx() <= 0 || fy() <= 0) throw ValidationError("camera focal lengths must be positive");
    if (cx() <= 0 || cx() >= width || cy() <= 0 || cy() >= height) {
        throw ValidationError("camera principal point must lie inside the image");
    }
}

std::optional<BoundingBox2D> project_box(const BoundingBox3D& box,
                                         const CameraCalibration& calib,
                                         const Pose& cam_pose) {
    const Pose world_from_cam = cam_pose;
    const Mat3 r_cw = world_from_cam.rotation.transpose();

    double u_lo = std::numeric_limits<double>::infinity();
    double u_hi = -std::numeric_limits<double>::infinity();
    double v_lo = std::numeric_limits<double>::infinity();
    double v_hi = -std::numeric_limits<double>::infinity();
    int in_front = 0;

    for (const Vec3& c : box.corners()) {
        const Vec3 p = r_cw * (c - world_from_cam.translation);
        if (p.z() <= 0.0) continue;
        ++in_front;
        const double u = calib.fx() * p.x() / p.z() + calib.cx();
        const double v = calib.fy() * p.y() / p.z() + calib.cy();
        u_lo = std::min(u_lo, u);
        u_hi = std::max(u_hi, u);
        v_lo = std::min(v_lo, v);
        v_hi = std::max(v_hi, v);
    }
    if (in_front == 0) return std::nullopt;

    const int u0 = static_cast<int>(std::ceil(std::max(u_lo, 0.0)));
    const int u1 = static_cast<int>(std::floor(std::min(u_hi, static_cast<double>(calib.width - 1))));
    const int v0 = static_cast<int>(std::ceil(std::max(v_lo, 0.0)));
    const int v1 = static_cast<int>(std::floor(std::min(v_hi, static_cast<double>(calib.height - 1))));
    if (u0 > u1 || v0 > v1) return std::nullopt;

    return BoundingBox2D{u0, v0, u1, v1};
}

}  // namespace msma
