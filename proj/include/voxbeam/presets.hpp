// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_PRESETS_HPP
#define VOXBEAM_PRESETS_HPP

#include <map>
#include <string>
#include <vector>

#include "envlight.hpp"
#include "volume.hpp"

namespace voxbeam::presets {

/// Synthetic test volume on [-0.5, 0.5]^3: a soft spherical shell around a
/// few dense blobs. Deterministic for a given size.
inline VolumeGrid blob_volume(int n = 48) {
    std::vector<float> v(size_t(n) * size_t(n) * size_t(n));
    struct Blob {
        Vec3d c;
        double r, amp;
    };
    const Blob blobs[] = {{{0.12, 0.05, -0.05}, 0.16, 0.95}, {{-0.15, -0.1, 0.1}, 0.13, 0.75}, {{-0.02, 0.2, 0.14}, 0.1, 0.6}};
    double h = 1.0 / (n - 1);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                Vec3d p{i * h - 0.5, j * h - 0.5, k * h - 0.5};
                double r = length(p);
                double shell = 0.28 * std::exp(-std::pow((r - 0.36) / 0.035, 2));
                double s = shell;
                for (const Blob& b : blobs) s += b.amp * std::exp(-length_squared(p - b.c) / (b.r * b.r));
                v[(size_t(k) * size_t(n) + size_t(j)) * size_t(n) + size_t(i)] = float(std::clamp(s, 0.0, 1.0));
            }
        }
    }
    return VolumeGrid({n, n, n}, Vec3d(h), Vec3d(-0.5), std::move(v), 16);
}

inline TransferFunction transfer_function(const std::string& name) {
    if (name == "default") {
        return TransferFunction({{0.0, {1.0f, 1.0f, 1.0f}, 0.0},
                                 {0.15, {0.9f, 0.85f, 0.8f}, 0.0},
                                 {0.3, {0.95f, 0.7f, 0.5f}, 0.1},
                                 {0.6, {0.6f, 0.75f, 0.95f}, 0.5},
                                 {1.0, {0.95f, 0.95f, 0.9f}, 1.0}},
                                40.0);
    }
    if (name == "bone") {
        return TransferFunction({{0.0, {1.0f, 1.0f, 1.0f}, 0.0},
                                 {0.3, {0.9f, 0.9f, 0.85f}, 0.0},
                                 {0.5, {0.95f, 0.92f, 0.85f}, 0.9},
                                 {1.0, {1.0f, 1.0f, 0.95f}, 1.0}},
                                30.0);
    }
    if (name == "soft") {
        return TransferFunction({{0.0, {0.6f, 0.8f, 1.0f}, 0.0}, {0.1, {0.6f, 0.8f, 1.0f}, 0.05}, {1.0, {1.0f, 0.6f, 0.6f}, 0.6}},
                                8.0);
    }
    throw Error("unknown transfer function preset '" + name + "'");
}

inline std::vector<std::string> transfer_function_names() { return {"default", "bone", "soft"}; }

struct PanoramaLight {
    Vec3d direction;
    double radius_rad;
    Rgb color;
};

/// Procedural LDR room: sky/ground gradient plus saturated light discs.
inline RadianceMap procedural_panorama(Rgb sky, Rgb ground, const std::vector<PanoramaLight>& lights, int width = 512) {
    ImageRgb img = render_equirect(width, width / 2, [&](const Vec3d& d) {
        double t = 0.5 * (d.y + 1.0);
        Rgb c = ground * float(1 - t) + sky * float(t);
        // A little low-frequency structure so patches are not flat.
        c *= float(0.85 + 0.15 * std::cos(3 * std::atan2(d.z, d.x)) * std::sqrt(std::max(0.0, 1 - d.y * d.y)));
        for (const auto& l : lights) {
            double ang = std::acos(std::clamp(dot(d, normalize(l.direction)), -1.0, 1.0));
            if (ang < l.radius_rad) {
                c = l.color;
            } else if (ang < 2 * l.radius_rad) {
                double f = (ang - l.radius_rad) / l.radius_rad;
                c = l.color * float(1 - f) + c * float(f);
            }
        }
        return Rgb{std::clamp(c.x, 0.0f, 1.0f), std::clamp(c.y, 0.0f, 1.0f), std::clamp(c.z, 0.0f, 1.0f)};
    });
    return RadianceMap(std::move(img), MapKind::Ldr, MapFrame::World);
}

inline RadianceMap panorama(const std::string& name, int width = 512) {
    if (name == "studio") {
        return procedural_panorama({0.55f, 0.55f, 0.6f}, {0.25f, 0.22f, 0.2f},
                                   {{{0.2, 1.0, 0.3}, 0.12, {1, 1, 1}}, {{-1.0, 0.3, -0.4}, 0.18, {0.95f, 0.95f, 1.0f}}}, width);
    }
    if (name == "sunset") {
        return procedural_panorama({0.45f, 0.3f, 0.45f}, {0.15f, 0.1f, 0.08f}, {{{0.3, 0.12, 1.0}, 0.1, {1.0f, 0.92f, 0.8f}}},
                                   width);
    }
    if (name == "night") {
        return procedural_panorama({0.05f, 0.06f, 0.1f}, {0.03f, 0.03f, 0.03f}, {{{-0.6, 0.7, 0.5}, 0.07, {1, 1, 1}}}, width);
    }
    if (name == "gray") return RadianceMap::constant(width, Rgb(0.5f), MapKind::Ldr, MapFrame::World);
    throw Error("unknown environment preset '" + name + "'");
}

inline std::vector<std::string> panorama_names() { return {"studio", "sunset", "night", "gray"}; }

}  // namespace voxbeam::presets

#endif
