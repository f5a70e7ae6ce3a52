// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_CAMERA_HPP
#define VOXBEAM_CAMERA_HPP

#include <optional>

#include "math.hpp"

namespace voxbeam {

/// Pinhole camera. Pixel (i, j) covers [i, i+1) x [j, j+1) with j growing
/// downwards; depth is Euclidean distance from the camera position.
struct Camera {
    Vec3d position;
    Vec3d forward{0, 0, -1};
    Vec3d up{0, 1, 0};
    double vfov = 0.7;  // radians
    int width = 64;
    int height = 64;
    double near = 1e-3;

    Camera() = default;
    Camera(Vec3d pos, Vec3d fwd, Vec3d up_hint, double vfov_rad, int w, int h, double near_plane = 1e-3)
        : position(pos), vfov(vfov_rad), width(w), height(h), near(near_plane) {
        if (!(vfov_rad > 0 && vfov_rad < kPi)) throw Error("camera: vfov must lie in (0, pi)");
        if (w < 1 || h < 1) throw Error("camera: image size must be positive");
        if (!(near_plane > 0)) throw Error("camera: near must be positive");
        forward = normalize(fwd);
        Vec3d right = normalize(cross(forward, up_hint));
        if (length(right) == 0) throw Error("camera: up is parallel to forward");
        up = cross(right, forward);
    }

    Vec3d right() const { return cross(forward, up); }
    double focal_px() const { return (height / 2.0) / std::tan(vfov / 2); }

    Vec3d direction(double px, double py) const {
        double f = focal_px();
        double xc = (px - width / 2.0) / f;
        double yc = -(py - height / 2.0) / f;
        return normalize(forward + right() * xc + up * yc);
    }
    Ray ray(double px, double py) const { return {position, direction(px, py)}; }

    friend bool operator==(const Camera&, const Camera&) = default;
};

struct Projection {
    double px = 0, py = 0;
    double depth = 0;  // Euclidean distance
};

/// Pinhole projection; nullopt when behind the near plane or off the viewport.
inline std::optional<Projection> project(const Camera& cam, const Vec3d& x) {
    Vec3d v = x - cam.position;
    double zc = dot(v, cam.forward);
    if (!(zc >= cam.near)) return std::nullopt;
    double f = cam.focal_px();
    double px = cam.width / 2.0 + f * dot(v, cam.right()) / zc;
    double py = cam.height / 2.0 - f * dot(v, cam.up) / zc;
    if (!(px >= 0 && px < cam.width && py >= 0 && py < cam.height)) return std::nullopt;
    return Projection{px, py, length(v)};
}

inline Vec3d unproject(const Camera& cam, double px, double py, double depth) {
    return cam.position + cam.direction(px, py) * depth;
}

enum class Eye { Left = 0, Right = 1 };

inline Eye other(Eye e) { return e == Eye::Left ? Eye::Right : Eye::Left; }
inline const char* eye_tag(Eye e) { return e == Eye::Left ? "L" : "R"; }

struct Pose {
    Vec3d position;
    Quat orientation;  // camera-to-world; the rig looks down its local -z
    friend bool operator==(const Pose&, const Pose&) = default;
};

/// Two parallel pinhole cameras offset by -/+ ipd/2 along the rig's right axis.
struct StereoRig {
    Pose pose;
    double ipd = 0.1;
    double vfov = 0.7;
    int width = 64;
    int height = 64;
    double near = 1e-3;

    Camera eye(Eye e) const {
        Vec3d forward = pose.orientation.rotate({0, 0, -1});
        Vec3d up = pose.orientation.rotate({0, 1, 0});
        Vec3d right = pose.orientation.rotate({1, 0, 0});
        double side = e == Eye::Left ? -0.5 : 0.5;
        return Camera(pose.position + right * (side * ipd), forward, up, vfov, width, height, near);
    }
};

/// Pose at `position` looking at `target`.
inline Pose look_at(const Vec3d& position, const Vec3d& target, const Vec3d& up = {0, 1, 0}) {
    return {position, look_rotation(target - position, up)};
}

}  // namespace voxbeam

#endif
