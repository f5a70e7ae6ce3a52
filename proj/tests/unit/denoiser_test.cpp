// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "voxbeam/denoiser.hpp"
#include "voxbeam/presets.hpp"

using namespace voxbeam;

namespace {

GBufferSample sample(Rgb albedo, Vec3f gradient, float z) { return {Vec3f{}, z, albedo, gradient, 1.0f}; }

std::shared_ptr<const VolumeGrid> constant_grid(int n, float value, double size) {
    return std::make_shared<const VolumeGrid>(Vec3i{n, n, n}, Vec3d(size / (n - 1)), Vec3d(-size / 2),
                                              std::vector<float>(size_t(n) * n * n, value));
}

EnvLighting gray_env() { return EnvLighting(RadianceMap::constant(16, Rgb(0.5f), MapKind::Hdr, MapFrame::Warped)); }

StereoRig small_rig(int n = 32) {
    StereoRig rig;
    rig.pose = look_at({0.3, 0.25, 1.6}, {0, 0, 0});
    rig.width = rig.height = n;
    rig.vfov = 0.6;
    return rig;
}

StereoFrame cube_frame() {
    Scene s{constant_grid(8, 1.0f, 0.6), TransferFunction({{0, Rgb(0.7f), 1}, {1, Rgb(0.7f), 1}}, 400.0), {}};
    RenderSettings rs;
    rs.mode = RenderMode::AbsorptionEmission;
    return render(s, gray_env(), small_rig(), 0, rs);
}

Scene blob_scene() { return {std::make_shared<const VolumeGrid>(presets::blob_volume(24)), presets::transfer_function("default"), {}}; }

EnvLighting studio_env() {
    RadianceMap m = presets::panorama("studio", 128);
    m.frame = MapFrame::Warped;
    return EnvLighting(estimate_hdr(m));
}

void fill(ImageRgb& img, Rgb v) { std::fill(img.pixels.begin(), img.pixels.end(), v); }

StereoReprojection fields(const StereoFrame& f, const FrameHistory* h) {
    return {build_reprojection_field(Eye::Left, f, h), build_reprojection_field(Eye::Right, f, h)};
}

double mse(const ImageRgb& a, const ImageRgb& b, const GBuffer& g) {
    double s = 0;
    int n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (!g.covered(x, y)) continue;
            Vec3d d = to_d(a(x, y)) - to_d(b(x, y));
            s += dot(d, d) / 3;
            ++n;
        }
    return s / n;
}

}  // namespace

TEST(BilateralWeight, IdenticalSamplesWeighOne) {
    BilateralParams p;
    GBufferSample a = sample(Rgb(0.3f, 0.5f, 0.2f), {0.1f, -1.0f, 0.4f}, 2.0f);
    EXPECT_DOUBLE_EQ(bilateral_weight(a, a, p), 1.0);
}

TEST(BilateralWeight, UncoveredWeighsZero) {
    BilateralParams p;
    GBufferSample a = sample(Rgb(0.3f), {0, 1, 0}, 2.0f);
    GBufferSample b = a;
    b.coverage = 0.2f;
    EXPECT_EQ(bilateral_weight(a, b, p), 0.0);
    EXPECT_EQ(bilateral_weight(b, a, p), 0.0);
}

TEST(BilateralWeight, OneSigmaAlbedoStepIsGaussian) {
    BilateralParams p;
    p.sigma_albedo = 0.125;  // exact in float
    GBufferSample a = sample(Rgb(0.25f), {0, 1, 0}, 2.0f);
    GBufferSample b = a;
    b.albedo.x += 0.125f;
    EXPECT_NEAR(bilateral_weight(a, b, p), std::exp(-0.5), 1e-12);
}

TEST(BilateralWeight, DepthAndGradientTerms) {
    BilateralParams p;
    GBufferSample a = sample(Rgb(0.25f), {0, 1, 0}, 2.0f);
    GBufferSample b = a;
    b.z = 2.0f * float(1 + p.sigma_depth);
    EXPECT_NEAR(bilateral_weight(a, b, p), std::exp(-0.5), 1e-6);
    GBufferSample c = a;
    c.gradient = {0, -1, 0};  // opposite normal: |dn| = 2
    EXPECT_NEAR(bilateral_weight(a, c, p), std::exp(-4.0 / (2 * p.sigma_gradient * p.sigma_gradient)), 1e-12);
    // Gradient magnitude alone does not matter.
    GBufferSample d = a;
    d.gradient = {0, 7, 0};
    EXPECT_NEAR(bilateral_weight(a, d, p), 1.0, 1e-12);
}

TEST(TemporalWeight, KnownValues) {
    EXPECT_NEAR(temporal_weight(0.0, 1.0), 1.0 / (1.0 + std::exp(1.0)), 1e-12);
    EXPECT_NEAR(temporal_weight(0.0, 0.5), 0.5 / (1.0 + std::exp(1.0)), 1e-12);
    EXPECT_NEAR(temporal_weight(0.0, 1.0, 3.0), 3.0 / (1.0 + std::exp(1.0)), 1e-12);
    EXPECT_LT(temporal_weight(1.0 - 1e-6, 1.0), 1e-300);
    EXPECT_EQ(temporal_weight(0.3, 0.0), 0.0);
}

TEST(TemporalWeight, StrictlyDecreasingInT) {
    double prev = temporal_weight(0.0, 1.0);
    for (int i = 1; i < 100; ++i) {
        double T = 0.99 * i / 99.0;
        double w = temporal_weight(T, 1.0);
        EXPECT_LT(w, prev) << T;
        EXPECT_GE(w, 0.0);
        prev = w;
    }
}

TEST(TemporalWeight, RejectsOutOfRangeT) {
    EXPECT_THROW(temporal_weight(-0.01, 1.0), Error);
    EXPECT_THROW(temporal_weight(1.0, 1.0), Error);
    EXPECT_THROW(temporal_weight(std::nan(""), 1.0), Error);
}

TEST(InterScreenLambda, KnownValuesAndRange) {
    EXPECT_NEAR(inter_screen_lambda(0.0), 0.5, 1e-15);
    EXPECT_NEAR(inter_screen_lambda(std::log(2.0)), 0.75, 1e-15);
    EXPECT_NEAR(inter_screen_lambda(50.0), 1.0, 1e-15);
    double prev = 0.5;
    for (int i = 0; i <= 100; ++i) {
        double d = 0.05 * i;
        double l = inter_screen_lambda(d);
        EXPECT_GE(l, 0.5);
        EXPECT_LE(l, 1.0);
        EXPECT_GE(l, prev);
        prev = l;
    }
    // Other alpha/beta are clamped into [0, 1].
    EXPECT_EQ(inter_screen_lambda(0.0, 2.0, 3.0), 1.0);
    EXPECT_EQ(inter_screen_lambda(0.0, 0.5, 0.0), 0.0);
}

TEST(SpatialPass, OutputStaysInsideNeighbourhoodRange) {
    StereoFrame f = render(blob_scene(), studio_env(), small_rig(), 0, RenderSettings{});
    BilateralParams p;
    const EyeImage& e = f.eye(Eye::Left);
    ImageRgb out = spatial_pass(e.radiance, e.gbuffer, p);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            if (!e.gbuffer.covered(x, y)) {
                EXPECT_EQ(out(x, y), e.radiance(x, y));
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                float lo = INFINITY, hi = -INFINITY;
                for (int dy = -p.radius; dy <= p.radius; ++dy)
                    for (int dx = -p.radius; dx <= p.radius; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= out.width || ny >= out.height) continue;
                        lo = std::min(lo, e.radiance(nx, ny)[c]);
                        hi = std::max(hi, e.radiance(nx, ny)[c]);
                    }
                EXPECT_GE(out(x, y)[c], lo - 1e-6f);
                EXPECT_LE(out(x, y)[c], hi + 1e-6f);
            }
        }
}

TEST(DenoiseD1, ConstantInputIsUnchanged) {
    StereoFrame f = cube_frame();
    for (Eye e : {Eye::Left, Eye::Right}) fill(f.eye(e).radiance, Rgb(0.4f, 0.2f, 0.7f));
    FrameHistory h;
    h.index = -1;
    for (Eye e : {Eye::Left, Eye::Right}) {
        h.denoised[size_t(e)] = f.eye(e).radiance;
        h.gbuffer[size_t(e)] = f.eye(e).gbuffer;
        h.camera[size_t(e)] = f.eye(e).camera;
    }
    BilateralParams p;
    DenoiseResult r = denoise_frame(f, &h, p);
    for (Eye e : {Eye::Left, Eye::Right})
        for (const Rgb& v : r.output[size_t(e)].pixels) {
            EXPECT_NEAR(v.x, 0.4f, 1e-6f);
            EXPECT_NEAR(v.y, 0.2f, 1e-6f);
            EXPECT_NEAR(v.z, 0.7f, 1e-6f);
        }
}

TEST(DenoiseD1, InvalidTargetsReduceToSpatialPass) {
    StereoFrame f = render(blob_scene(), studio_env(), small_rig(), 0, RenderSettings{});
    BilateralParams p;
    StereoReprojection none = {ReprojectionField(32, 32), ReprojectionField(32, 32)};
    D1Result r = denoise_d1(f, nullptr, none, p);
    for (Eye e : {Eye::Left, Eye::Right}) {
        ImageRgb spatial = spatial_pass(f.eye(e).radiance, f.eye(e).gbuffer, p);
        EXPECT_EQ(r.output[size_t(e)], spatial);
        EXPECT_EQ(r.stereo[size_t(e)], spatial);
    }
}

TEST(DenoiseD1, TemporalBlendFollowsWeightFormula) {
    StereoFrame f = cube_frame();
    f.T = 0.2;
    for (Eye e : {Eye::Left, Eye::Right}) fill(f.eye(e).radiance, Rgb(1.0f));
    FrameHistory h;
    for (Eye e : {Eye::Left, Eye::Right}) {
        h.denoised[size_t(e)] = f.eye(e).radiance;
        fill(h.denoised[size_t(e)], Rgb(3.0f));
        h.gbuffer[size_t(e)] = f.eye(e).gbuffer;
        h.camera[size_t(e)] = f.eye(e).camera;
    }
    BilateralParams p;
    StereoReprojection reproj = fields(f, &h);
    D1Result r = denoise_d1(f, &h, reproj, p);
    double wv = temporal_weight(0.2, 1.0);  // same geometry: zeta = 1
    double expect = (1.0 + 3.0 * wv) / (1.0 + wv);
    int checked = 0;
    const GBuffer& g = f.eye(Eye::Left).gbuffer;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            if (!g.covered(x, y) || !reproj[0](x, y).temporal.valid) continue;
            EXPECT_NEAR(r.output[0](x, y).x, expect, 1e-5);
            ++checked;
        }
    EXPECT_GT(checked, 50);
}

TEST(DenoiseD2, EqualAlbedoGivesMean) {
    StereoFrame f = cube_frame();
    StereoReprojection reproj = fields(f, nullptr);
    StereoImages v1 = {f.eye(Eye::Left).radiance, f.eye(Eye::Right).radiance};
    fill(v1[0], Rgb(1.0f));
    fill(v1[1], Rgb(3.0f));
    StereoImages out = denoise_d2(v1, f, reproj, BilateralParams{});
    int checked = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            if (!reproj[0](x, y).stereo.valid) {
                EXPECT_EQ(out[0](x, y), v1[0](x, y));
                continue;
            }
            EXPECT_NEAR(out[0](x, y).x, 2.0f, 1e-6f);
            ++checked;
        }
    EXPECT_GT(checked, 50);
}

TEST(DenoiseD2, ConstantIsIdempotentAndBounded) {
    StereoFrame f = render(blob_scene(), studio_env(), small_rig(), 0, RenderSettings{});
    StereoReprojection reproj = fields(f, nullptr);
    BilateralParams p;
    StereoImages c = {f.eye(Eye::Left).radiance, f.eye(Eye::Right).radiance};
    fill(c[0], Rgb(0.6f));
    fill(c[1], Rgb(0.6f));
    EXPECT_EQ(denoise_d2(c, f, reproj, p)[0], c[0]);

    StereoImages v1 = {f.eye(Eye::Left).radiance, f.eye(Eye::Right).radiance};
    StereoImages out = denoise_d2(v1, f, reproj, p);
    for (Eye e : {Eye::Left, Eye::Right}) {
        size_t ei = size_t(e);
        const GBuffer& go = f.eye(other(e)).gbuffer;
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                const auto& s = reproj[ei](x, y);
                if (!s.stereo.valid) continue;
                auto partner = resample_covered(go, &v1[size_t(other(e))], s.stereo.px, s.stereo.py);
                ASSERT_TRUE(partner);
                for (int k = 0; k < 3; ++k) {
                    float a = v1[ei](x, y)[k], b = partner->first[k];
                    EXPECT_GE(out[ei](x, y)[k], std::min(a, b) - 1e-5f);
                    EXPECT_LE(out[ei](x, y)[k], std::max(a, b) + 1e-5f);
                }
            }
    }
}

TEST(DenoiseD2, ReducesInterEyeDisagreement) {
    StereoFrame f = render(blob_scene(), studio_env(), small_rig(), 0, RenderSettings{});
    DenoiseResult r = denoise_frame(f, nullptr, BilateralParams{});
    auto disagreement = [&](const StereoImages& v) {
        double s = 0;
        int n = 0;
        const GBuffer& gr = f.eye(Eye::Right).gbuffer;
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                const auto& st = r.reprojection[0](x, y).stereo;
                if (!st.valid) continue;
                auto partner = resample_covered(gr, &v[1], st.px, st.py);
                s += length(to_d(v[0](x, y)) - to_d(partner->first));
                ++n;
            }
        return s / n;
    };
    EXPECT_LT(disagreement(r.output), disagreement(r.d1.output));
}

TEST(Denoiser, ReducesErrorAgainstReference) {
    Scene scene = blob_scene();
    EnvLighting env = studio_env();
    RenderSettings noisy, ref;
    ref.spp = 128;
    ref.seed = 99;
    StereoFrame f = render(scene, env, small_rig(), 0, noisy);
    StereoFrame r = render(scene, env, small_rig(), 0, ref);
    DenoiseResult d = denoise_frame(f, nullptr, BilateralParams{});
    for (Eye e : {Eye::Left, Eye::Right}) {
        const GBuffer& g = f.eye(e).gbuffer;
        double raw = mse(f.eye(e).radiance, r.eye(e).radiance, g);
        double out = mse(d.output[size_t(e)], r.eye(e).radiance, g);
        EXPECT_LT(out, 0.6 * raw) << eye_tag(e);
    }
}

TEST(StereoDenoiser, KeepsOneFrameOfHistory) {
    StereoDenoiser dn;
    StereoFrame f0 = render(blob_scene(), studio_env(), small_rig(), 0, RenderSettings{});
    EXPECT_EQ(dn.history(), nullptr);
    DenoiseResult r0 = dn.process(f0);
    ASSERT_NE(dn.history(), nullptr);
    EXPECT_EQ(dn.history()->index, 0);
    EXPECT_EQ(dn.history()->denoised[0], r0.output[0]);
    StereoFrame f1 = render(blob_scene(), studio_env(), small_rig(), 1, RenderSettings{});
    DenoiseResult r1 = dn.process(f1);
    int temporal = 0;
    for (const auto& s : r1.reprojection[0].pixels) temporal += s.temporal.valid;
    EXPECT_GT(temporal, 50);
    EXPECT_EQ(dn.history()->index, 1);
    dn.reset();
    EXPECT_EQ(dn.history(), nullptr);
}

TEST(BilateralParams, Validation) {
    BilateralParams p;
    p.radius = -1;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.sigma_depth = 0;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.temporal_multiplier = -1;
    EXPECT_THROW(p.validate(), Error);
}
