// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_REPROJECTION_HPP
#define VOXBEAM_REPROJECTION_HPP

#include <array>
#include <memory>
#include <optional>

#include "camera.hpp"
#include "envlight.hpp"
#include "render.hpp"

namespace voxbeam {

/// What the denoiser keeps from frame t-1.
struct FrameHistory {
    int index = -1;
    std::array<ImageRgb, 2> denoised;  // v(., 2)
    std::array<GBuffer, 2> gbuffer;
    std::array<Camera, 2> camera;
    Vec3d volume_offset;
    std::shared_ptr<const RadianceMap> hdr;
};

struct ReprojectionParams {
    double depth_tolerance = 0.05;   // relative
    double albedo_tolerance = 0.2;   // max-norm
};

/// One reprojected sample: pixel coordinates, validity and the values
/// resampled there (bilinear over covered taps).
struct ReprojectionTarget {
    bool valid = false;
    double px = 0, py = 0;
    Rgb radiance;
    GBufferSample features;
};

/// The four-sample set of a source pixel k in eye E at frame t:
/// stereo  = k_O^t     <- pi_O^t(x(k_E^t))
/// temporal = k_E^{t-1} <- pi_E^{t-1}(x(k_E^t))
/// temporal_partner = k_O^{t-1} <- pi_O^{t-1}(x(k_E^{t-1}))
struct ReprojectionSet {
    int px = 0, py = 0;
    Eye eye = Eye::Left;
    ReprojectionTarget stereo, temporal, temporal_partner;
};

/// Bilinear resampling restricted to covered taps (weights renormalized).
/// The gradient is resampled as a direction.
/// Returns nullopt when none of the four taps is covered.
inline std::optional<std::pair<Rgb, GBufferSample>> resample_covered(const GBuffer& g, const ImageRgb* radiance, double px,
                                                                     double py) {
    double fx = px - 0.5, fy = py - 0.5;
    int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
    double tx = fx - x0, ty = fy - y0;
    Vec3d rad, x, albedo, grad;
    double z = 0, cov = 0, wsum = 0;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            int sx = std::clamp(x0 + dx, 0, g.width() - 1), sy = std::clamp(y0 + dy, 0, g.height() - 1);
            double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty);
            if (w <= 0 || !g.covered(sx, sy)) continue;
            GBufferSample s = g.at(sx, sy);
            if (radiance) rad += to_d((*radiance)(sx, sy)) * w;
            x += to_d(s.x) * w;
            albedo += to_d(s.albedo) * w;
            // Directions only: magnitudes would bias the blend toward steep taps.
            double gl = length(to_d(s.gradient));
            if (gl > 0) grad += to_d(s.gradient) * (w / gl);
            z += s.z * w;
            cov += s.coverage * w;
            wsum += w;
        }
    }
    if (wsum <= 0) return std::nullopt;
    double inv = 1.0 / wsum;
    GBufferSample s{to_f(x * inv), float(z * inv), to_f(albedo * inv), to_f(grad * inv), float(cov * inv)};
    return std::pair{to_f(rad * inv), s};
}

namespace detail {

/// Projects `x` into `cam`, checks the nearest target pixel for depth and
/// albedo agreement, and resamples values there.
inline ReprojectionTarget reproject(const Vec3d& x, const Camera& cam, const GBuffer& g, const ImageRgb& radiance,
                                    const Rgb& source_albedo, const ReprojectionParams& p) {
    ReprojectionTarget t;
    auto proj = project(cam, x);
    if (!proj) return t;
    t.px = proj->px;
    t.py = proj->py;
    int nx = std::min(int(proj->px), cam.width - 1), ny = std::min(int(proj->py), cam.height - 1);
    if (!g.covered(nx, ny)) return t;
    double z_target = g.z(nx, ny);
    if (!(std::abs(z_target - proj->depth) / proj->depth < p.depth_tolerance)) return t;
    if (!(max_component(abs(g.albedo(nx, ny) - source_albedo)) < p.albedo_tolerance)) return t;
    auto values = resample_covered(g, &radiance, proj->px, proj->py);
    if (!values) return t;
    t.radiance = values->first;
    t.features = values->second;
    t.valid = true;
    return t;
}

}  // namespace detail

/// Builds the reprojection set of pixel (px, py) of `eye`. Without history
/// only the stereo target can be valid. The stereo target resamples the
/// partner eye's raw radiance; temporal targets resample v(., 2) of t-1.
inline ReprojectionSet build_reprojection(int px, int py, Eye eye, const StereoFrame& current, const FrameHistory* history,
                                          const ReprojectionParams& params = {}) {
    ReprojectionSet set;
    set.px = px;
    set.py = py;
    set.eye = eye;
    const EyeImage& src = current.eye(eye);
    if (!src.gbuffer.covered(px, py)) return set;
    GBufferSample s = src.gbuffer.at(px, py);
    Vec3d x = to_d(s.x);
    Eye o = other(eye);
    const EyeImage& partner = current.eye(o);
    set.stereo = detail::reproject(x, partner.camera, partner.gbuffer, partner.radiance, s.albedo, params);
    if (!history) return set;

    // Rigid volume motion: express x where that material sat at t-1.
    Vec3d shift = history->volume_offset - current.volume_offset;
    Vec3d x_prev = x + shift;
    size_t e = size_t(eye), oi = size_t(o);
    set.temporal = detail::reproject(x_prev, history->camera[e], history->gbuffer[e], history->denoised[e], s.albedo, params);

    // x(k_E^{t-1}) read from the history G-buffer at the reprojected pixel.
    auto proj = project(history->camera[e], x_prev);
    if (!proj) return set;
    int nx = std::min(int(proj->px), history->camera[e].width - 1);
    int ny = std::min(int(proj->py), history->camera[e].height - 1);
    if (!history->gbuffer[e].covered(nx, ny)) return set;
    Vec3d x_hist = to_d(history->gbuffer[e].x(nx, ny));
    set.temporal_partner =
        detail::reproject(x_hist, history->camera[oi], history->gbuffer[oi], history->denoised[oi], s.albedo, params);
    return set;
}

using ReprojectionField = Image<ReprojectionSet>;

inline ReprojectionField build_reprojection_field(Eye eye, const StereoFrame& current, const FrameHistory* history,
                                                  const ReprojectionParams& params = {}) {
    const Camera& cam = current.eye(eye).camera;
    ReprojectionField field(cam.width, cam.height);
    parallel_for(cam.height, [&](int py) {
        for (int px = 0; px < cam.width; ++px) field(px, py) = build_reprojection(px, py, eye, current, history, params);
    });
    return field;
}

/// Debug view: red = stereo valid, green = temporal valid, blue = temporal partner valid.
inline ImageRgb validity_mask(const ReprojectionField& field) {
    ImageRgb out(field.width, field.height);
    for (size_t i = 0; i < field.size(); ++i) {
        const auto& s = field.pixels[i];
        out.pixels[i] = {s.stereo.valid ? 1.0f : 0.0f, s.temporal.valid ? 1.0f : 0.0f, s.temporal_partner.valid ? 1.0f : 0.0f};
    }
    return out;
}

}  // namespace voxbeam

#endif
