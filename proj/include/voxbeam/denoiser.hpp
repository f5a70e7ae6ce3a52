// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_DENOISER_HPP
#define VOXBEAM_DENOISER_HPP

#include <array>
#include <cmath>

#include "reprojection.hpp"

namespace voxbeam {

struct BilateralParams {
    int radius = 2;
    double sigma_albedo = 0.1;
    double sigma_gradient = 0.5;
    double sigma_depth = 0.05;
    double alpha = 0.5;
    double beta = 2.0;
    double temporal_multiplier = 1.0;  // scales w_v; 1 reproduces the plain formula

    void validate() const {
        if (radius < 0) throw Error("denoiser: radius must be >= 0");
        if (!(sigma_albedo > 0 && sigma_gradient > 0 && sigma_depth > 0)) throw Error("denoiser: bandwidths must be positive");
        if (!(temporal_multiplier >= 0)) throw Error("denoiser: temporal multiplier must be >= 0");
    }
};

/// Edge-stopping weight from albedo, gradient direction and relative depth.
/// Between adjacent frames this is the temporal similarity zeta.
inline double bilateral_weight(const GBufferSample& a, const GBufferSample& b, const BilateralParams& p) {
    if (!a.covered() || !b.covered()) return 0.0;
    Vec3d da = to_d(a.albedo) - to_d(b.albedo);
    Vec3d dg = gradient_normal(to_d(a.gradient)) - gradient_normal(to_d(b.gradient));
    double dz = (double(a.z) - double(b.z)) / double(a.z);
    return std::exp(-dot(da, da) / (2 * p.sigma_albedo * p.sigma_albedo)) *
           std::exp(-dot(dg, dg) / (2 * p.sigma_gradient * p.sigma_gradient)) *
           std::exp(-(dz * dz) / (2 * p.sigma_depth * p.sigma_depth));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Weight of the previous frame's denoised sample: sigmoid(1 / (T - 1)) * zeta.
/// The current sample's weight is 1.
inline double temporal_weight(double T, double zeta, double multiplier = 1.0) {
    if (!(T >= 0.0 && T <= 1.0 - kTEpsilon)) throw Error("temporal_weight: T must lie in [0, 1 - 1e-6]");
    return sigmoid(1.0 / (T - 1.0)) * zeta * multiplier;
}

/// Inter-screen blend factor alpha * (beta - exp(-|dgamma|)), clamped to [0, 1].
inline double inter_screen_lambda(double albedo_distance, double alpha = 0.5, double beta = 2.0) {
    return std::clamp(alpha * (beta - std::exp(-albedo_distance)), 0.0, 1.0);
}

using StereoImages = std::array<ImageRgb, 2>;
using StereoReprojection = std::array<ReprojectionField, 2>;

/// Same-eye bilateral average over the (2r+1)^2 neighbourhood. Uncovered
/// pixels pass through.
inline ImageRgb spatial_pass(const ImageRgb& v, const GBuffer& g, const BilateralParams& p) {
    ImageRgb out = v;
    parallel_for(v.height, [&](int y) {
        for (int x = 0; x < v.width; ++x) {
            if (!g.covered(x, y)) continue;
            GBufferSample c = g.at(x, y);
            Vec3d acc;
            double wsum = 0;
            for (int dy = -p.radius; dy <= p.radius; ++dy) {
                int ny = y + dy;
                if (ny < 0 || ny >= v.height) continue;
                for (int dx = -p.radius; dx <= p.radius; ++dx) {
                    int nx = x + dx;
                    if (nx < 0 || nx >= v.width) continue;
                    double w = (dx == 0 && dy == 0) ? 1.0 : bilateral_weight(c, g.at(nx, ny), p);
                    if (w <= 0) continue;
                    acc += to_d(v(nx, ny)) * w;
                    wsum += w;
                }
            }
            out(x, y) = to_f(acc / wsum);
        }
    });
    return out;
}

struct D1Result {
    StereoImages spatial;     // after the spatial pass
    StereoImages stereo;      // v~(., 1): spatial + cross-screen
    StereoImages output;      // v(., 1)
};

/// First step: spatial filtering, cross-screen bilateral blend with the
/// partner eye's spatially filtered value at the stereo target, then the
/// temporal blend (v~ + w_v v_prev) / (1 + w_v).
inline D1Result denoise_d1(const StereoFrame& frame, const FrameHistory* history, const StereoReprojection& reproj,
                           const BilateralParams& p) {
    p.validate();
    D1Result r;
    for (Eye e : {Eye::Left, Eye::Right}) {
        r.spatial[size_t(e)] = spatial_pass(frame.eye(e).radiance, frame.eye(e).gbuffer, p);
    }
    for (Eye e : {Eye::Left, Eye::Right}) {
        size_t ei = size_t(e);
        Eye o = other(e);
        const GBuffer& g = frame.eye(e).gbuffer;
        const GBuffer& go = frame.eye(o).gbuffer;
        const ImageRgb& spatial = r.spatial[ei];
        const ImageRgb& partner_spatial = r.spatial[size_t(o)];
        ImageRgb stereo = spatial, out = spatial;
        parallel_for(spatial.height, [&](int y) {
            for (int x = 0; x < spatial.width; ++x) {
                if (!g.covered(x, y)) continue;
                GBufferSample c = g.at(x, y);
                const ReprojectionSet& set = reproj[ei](x, y);
                Vec3d v = to_d(spatial(x, y));
                if (set.stereo.valid) {
                    double w = bilateral_weight(c, set.stereo.features, p);
                    if (w > 0) {
                        auto partner = resample_covered(go, &partner_spatial, set.stereo.px, set.stereo.py);
                        if (partner) v = (v + to_d(partner->first) * w) / (1.0 + w);
                    }
                }
                stereo(x, y) = to_f(v);
                if (history && set.temporal.valid) {
                    double zeta = bilateral_weight(c, set.temporal.features, p);
                    double wv = temporal_weight(frame.T, zeta, p.temporal_multiplier);
                    v = (v + to_d(set.temporal.radiance) * wv) / (1.0 + wv);
                }
                out(x, y) = to_f(v);
            }
        });
        r.stereo[ei] = std::move(stereo);
        r.output[ei] = std::move(out);
    }
    return r;
}

/// Second step: v(k_E, 2) = lambda v(k_E, 1) + (1 - lambda) v(k_O, 1), with
/// the partner value resampled at the stereo target; lambda = 1 when the
/// stereo target is invalid.
inline StereoImages denoise_d2(const StereoImages& v1, const StereoFrame& frame, const StereoReprojection& reproj,
                               const BilateralParams& p) {
    StereoImages out = v1;
    for (Eye e : {Eye::Left, Eye::Right}) {
        size_t ei = size_t(e);
        Eye o = other(e);
        const GBuffer& g = frame.eye(e).gbuffer;
        const GBuffer& go = frame.eye(o).gbuffer;
        parallel_for(v1[ei].height, [&](int y) {
            for (int x = 0; x < v1[ei].width; ++x) {
                if (!g.covered(x, y)) continue;
                const ReprojectionSet& set = reproj[ei](x, y);
                if (!set.stereo.valid) continue;
                auto partner = resample_covered(go, &v1[size_t(o)], set.stereo.px, set.stereo.py);
                if (!partner) continue;
                double dg = length(to_d(g.albedo(x, y)) - to_d(partner->second.albedo));
                double lambda = inter_screen_lambda(dg, p.alpha, p.beta);
                out[ei](x, y) = to_f(to_d(v1[ei](x, y)) * lambda + to_d(partner->first) * (1.0 - lambda));
            }
        });
    }
    return out;
}

struct DenoiseResult {
    StereoReprojection reprojection;
    D1Result d1;
    StereoImages output;  // v(., 2)
};

/// Runs reprojection, D1 and D2 for one frame against an optional history.
inline DenoiseResult denoise_frame(const StereoFrame& frame, const FrameHistory* history, const BilateralParams& p,
                                   const ReprojectionParams& rp = {}) {
    DenoiseResult r;
    for (Eye e : {Eye::Left, Eye::Right}) r.reprojection[size_t(e)] = build_reprojection_field(e, frame, history, rp);
    r.d1 = denoise_d1(frame, history, r.reprojection, p);
    r.output = denoise_d2(r.d1.output, frame, r.reprojection, p);
    return r;
}

/// Stateful wrapper that advances the history one frame at a time.
class StereoDenoiser {
public:
    StereoDenoiser() = default;
    StereoDenoiser(BilateralParams p, ReprojectionParams rp) : params_(p), reproj_params_(rp) {}

    BilateralParams& params() { return params_; }
    ReprojectionParams& reprojection_params() { return reproj_params_; }
    const FrameHistory* history() const { return history_ ? &*history_ : nullptr; }
    void reset() { history_.reset(); }

    DenoiseResult process(const StereoFrame& frame, std::shared_ptr<const RadianceMap> hdr = nullptr) {
        DenoiseResult r = denoise_frame(frame, history(), params_, reproj_params_);
        FrameHistory h;
        h.index = frame.index;
        h.denoised = r.output;
        for (Eye e : {Eye::Left, Eye::Right}) {
            h.gbuffer[size_t(e)] = frame.eye(e).gbuffer;
            h.camera[size_t(e)] = frame.eye(e).camera;
        }
        h.volume_offset = frame.volume_offset;
        h.hdr = std::move(hdr);
        history_ = std::move(h);
        return r;
    }

private:
    BilateralParams params_;
    ReprojectionParams reproj_params_;
    std::optional<FrameHistory> history_;
};

}  // namespace voxbeam

#endif
