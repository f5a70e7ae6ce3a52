// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_RENDER_HPP
#define VOXBEAM_RENDER_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camera.hpp"
#include "envlight.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "volume.hpp"

namespace voxbeam {

enum class RenderMode { AbsorptionEmission, GradientPhong, PrefilteredEnv, VptEnv };

inline std::string to_string(RenderMode m) {
    switch (m) {
        case RenderMode::AbsorptionEmission: return "ABSORPTION_EMISSION";
        case RenderMode::GradientPhong: return "GRADIENT_PHONG";
        case RenderMode::PrefilteredEnv: return "PREFILTERED_ENV";
        case RenderMode::VptEnv: return "VPT_ENV";
    }
    return "?";
}

/// Case-insensitive; hyphens and underscores are interchangeable.
inline RenderMode parse_render_mode(std::string s) {
    std::string original = s;
    std::replace(s.begin(), s.end(), '-', '_');
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::toupper(c)); });
    for (auto m : {RenderMode::AbsorptionEmission, RenderMode::GradientPhong, RenderMode::PrefilteredEnv, RenderMode::VptEnv}) {
        if (to_string(m) == s) return m;
    }
    throw Error("unknown render mode '" + original + "'");
}

/// Volume placed in the world: grid + classification + rigid translation.
struct Scene {
    std::shared_ptr<const VolumeGrid> grid;
    TransferFunction tf;
    Vec3d offset;

    Bounds3 bounds() const {
        Bounds3 b = grid->bounds();
        return {b.lo + offset, b.hi + offset};
    }
    double sigma_max() const { return tf.sigma_max(); }
    double density(const Vec3d& p) const { return tf.extinction(grid->sample(p - offset)); }
    Classified classify(const Vec3d& p) const { return tf.classify(grid->sample(p - offset)); }
    Vec3d gradient(const Vec3d& p) const { return grid->gradient(p - offset); }
    double voxel() const { return grid->min_spacing(); }
};

/// Environment illumination for rendering: HDR map, its sampler, and the LDR
/// pre-filtered levels used by the PREFILTERED_ENV baseline.
struct EnvLighting {
    std::shared_ptr<const RadianceMap> hdr;
    EnvSampler sampler;
    std::vector<RadianceMap> prefiltered;

    EnvLighting() = default;
    explicit EnvLighting(RadianceMap hdr_map, std::vector<RadianceMap> levels = {})
        : hdr(std::make_shared<const RadianceMap>(std::move(hdr_map))), sampler(hdr), prefiltered(std::move(levels)) {}

    Rgb background(const Vec3d& d) const { return lookup_bilinear(hdr->image, d); }
};

struct PhongParams {
    double ambient = 0.3;
    double diffuse = 0.7;
    double specular = 0.2;
    double shininess = 16.0;
};

struct RenderSettings {
    RenderMode mode = RenderMode::VptEnv;
    int spp = 2;
    uint64_t seed = 1;
    double march_step = 0.5;    // in voxels, for the deterministic marchers
    double gbuffer_step = 0.5;  // in voxels
    double phase_g = 0.0;       // Henyey-Greenstein asymmetry; 0 = isotropic
    int step_cap = 100000;
    PhongParams phong;
};

// ---------------------------------------------------------------------------
// Transmittance
// ---------------------------------------------------------------------------

/// Ratio tracking over [0, tmax) along `ray`.
inline double ratio_tracking(const Ray& ray, double tmax, const Scene& scene, Rng& rng, int step_cap = 100000) {
    double smax = scene.sigma_max();
    double tr = 1.0;
    double t = 0;
    for (int i = 0; i < step_cap; ++i) {
        t -= std::log(1.0 - rng.uniform()) / smax;
        if (t >= tmax) break;
        tr *= 1.0 - scene.density(ray.at(t)) / smax;
        if (tr <= 0) return 0.0;
    }
    return tr;
}

/// Unbiased estimate of exp(-integral of sigma_t) between a and b.
inline double transmittance(const Vec3d& a, const Vec3d& b, const Scene& scene, Rng& rng) {
    Vec3d d = b - a;
    double len = length(d);
    if (len == 0) return 1.0;
    Ray ray{a, d / len};
    double t0, t1;
    if (!scene.bounds().intersect(ray, t0, t1)) return 1.0;
    t1 = std::min(t1, len);
    if (t0 >= t1) return 1.0;
    return ratio_tracking({ray.at(t0), ray.dir}, t1 - t0, scene, rng);
}

/// Midpoint-rule exp(-integral of sigma_t) with `steps` equal intervals.
inline double transmittance_deterministic(const Vec3d& a, const Vec3d& b, const Scene& scene, int steps = 4096) {
    Vec3d d = b - a;
    double len = length(d);
    double h = len / steps, tau = 0;
    for (int i = 0; i < steps; ++i) tau += scene.density(a + d * ((i + 0.5) / steps)) * h;
    return std::exp(-tau);
}

// ---------------------------------------------------------------------------
// VPT single scattering
// ---------------------------------------------------------------------------

inline double hg_phase(double cos_theta, double g) {
    if (g == 0.0) return 1.0 / (4 * kPi);
    double denom = 1 + g * g - 2 * g * cos_theta;
    return (1 - g * g) / (4 * kPi * denom * std::sqrt(denom));
}

/// Delta tracking to the first real collision, then one environment sample
/// (next-event estimation) shadowed by ratio tracking. Escaping paths return
/// the environment along the ray. No further bounces.
inline Vec3d trace_vpt(const Ray& ray, const Scene& scene, const EnvLighting& env, Rng& rng, double phase_g = 0.0,
                       int step_cap = 100000) {
    Vec3d background = to_d(env.background(ray.dir));
    double t0, t1;
    Bounds3 box = scene.bounds();
    if (!box.intersect(ray, t0, t1)) return background;
    double smax = scene.sigma_max();
    double t = t0;
    for (int i = 0; i < step_cap; ++i) {
        t -= std::log(1.0 - rng.uniform()) / smax;
        if (t >= t1) return background;
        Vec3d x = ray.at(t);
        Classified c = scene.classify(x);
        if (rng.uniform() * smax >= c.sigma_t) continue;  // null collision
        double u1 = rng.uniform(), u2 = rng.uniform();
        EnvSample light = env.sampler.sample(u1, u2);
        Ray shadow{x, light.direction};
        double s0, s1;
        double tr = box.intersect(shadow, s0, s1) ? ratio_tracking(shadow, s1, scene, rng, step_cap) : 1.0;
        double phase = hg_phase(dot(light.direction, ray.dir), phase_g);
        return to_d(c.albedo) * to_d(light.radiance) * (phase * tr / light.pdf);
    }
    return background;
}

// ---------------------------------------------------------------------------
// Deterministic baselines
// ---------------------------------------------------------------------------

/// Outward surface normal from the scalar gradient; zero stays zero.
inline Vec3d gradient_normal(const Vec3d& g) { return -normalize(g); }

/// Phong with a headlight: light and view both point back along the ray.
/// Two-sided diffuse; zero gradient gives the ambient term alone.
inline Vec3d phong_shade(const Vec3d& albedo, const Vec3d& gradient, const Vec3d& to_light, const Vec3d& to_eye,
                         const PhongParams& p) {
    Vec3d n = gradient_normal(gradient);
    if (length_squared(n) == 0) return albedo * p.ambient;
    double ndotl = dot(n, to_light);
    if (ndotl < 0) {
        n = -n;
        ndotl = -ndotl;
    }
    Vec3d r = n * (2 * ndotl) - to_light;
    double spec = std::pow(std::max(0.0, dot(r, to_eye)), p.shininess);
    return albedo * (p.ambient + p.diffuse * ndotl) + Vec3d(p.specular * spec);
}

/// Diffuse image-based light from the blurriest pre-filtered level.
inline Vec3d prefiltered_shade(const Vec3d& albedo, const Vec3d& gradient, const RadianceMap& level, const Vec3d& level_mean) {
    Vec3d n = gradient_normal(gradient);
    Vec3d irradiance = length_squared(n) == 0 ? level_mean : to_d(lookup_bilinear(level.image, n));
    return albedo * irradiance;
}

inline Vec3d image_mean(const ImageRgb& img) {
    Vec3d s;
    for (const Rgb& c : img.pixels) s += to_d(c);
    return s / double(img.size());
}

/// Front-to-back over-operator compositing with a fixed step. `shade`
/// returns the colour of a sample given (position, classification).
template <typename Shade>
Vec3d march_composite(const Ray& ray, const Scene& scene, const EnvLighting& env, double step, Shade&& shade) {
    Vec3d background = to_d(env.background(ray.dir));
    double t0, t1;
    if (!scene.bounds().intersect(ray, t0, t1)) return background;
    Vec3d color;
    double alpha = 0;
    for (double t = t0 + step / 2; t < t1; t += step) {
        Vec3d x = ray.at(t);
        Classified c = scene.classify(x);
        if (c.sigma_t <= 0) continue;
        double a = 1.0 - std::exp(-c.sigma_t * step);
        color += shade(x, c) * ((1 - alpha) * a);
        alpha += (1 - alpha) * a;
        if (alpha >= 0.9999) break;
    }
    return color + background * (1 - alpha);
}

inline Vec3d shade_absorption_emission(const Ray& ray, const Scene& scene, const EnvLighting& env, double step) {
    return march_composite(ray, scene, env, step, [](const Vec3d&, const Classified& c) { return to_d(c.albedo); });
}

inline Vec3d shade_gradient_phong(const Ray& ray, const Scene& scene, const EnvLighting& env, double step,
                                  const PhongParams& params) {
    Vec3d to_light = -ray.dir;
    return march_composite(ray, scene, env, step, [&](const Vec3d& x, const Classified& c) {
        return phong_shade(to_d(c.albedo), scene.gradient(x), to_light, to_light, params);
    });
}

inline Vec3d shade_prefiltered_env(const Ray& ray, const Scene& scene, const EnvLighting& env, double step) {
    if (env.prefiltered.empty()) throw Error("PREFILTERED_ENV requires pre-filtered environment levels");
    const RadianceMap& level = env.prefiltered.back();
    Vec3d mean = image_mean(level.image);
    return march_composite(ray, scene, env, step, [&](const Vec3d& x, const Classified& c) {
        return prefiltered_shade(to_d(c.albedo), scene.gradient(x), level, mean);
    });
}

// ---------------------------------------------------------------------------
// G-buffer
// ---------------------------------------------------------------------------

inline constexpr float kCoverageThreshold = 0.5f;

struct GBufferSample {
    Vec3f x;
    float z = std::numeric_limits<float>::infinity();
    Rgb albedo;
    Vec3f gradient;
    float coverage = 0;
    bool covered() const { return coverage >= kCoverageThreshold; }
};

/// Deterministic first-scatter proxy: the point where accumulated opacity
/// reaches 0.5, refined inside the crossing step assuming constant
/// extinction there. Coverage is the opacity accumulated along the ray.
inline GBufferSample gbuffer_first_scatter(const Ray& ray, const Scene& scene, double step) {
    GBufferSample g;
    double t0, t1;
    if (!scene.bounds().intersect(ray, t0, t1)) return g;
    double alpha = 0;
    bool found = false;
    for (double t = t0; t < t1; t += step) {
        double h = std::min(step, t1 - t);
        double sigma = scene.density(ray.at(t + h / 2));
        if (sigma <= 0) continue;
        double a = 1.0 - std::exp(-sigma * h);
        double next = alpha + (1 - alpha) * a;
        if (!found && next >= kCoverageThreshold) {
            double need = (kCoverageThreshold - alpha) / (1 - alpha);
            double s = need >= 1.0 ? 0.0 : std::min(h, -std::log(1 - need) / sigma);
            Vec3d x = ray.at(t + s);
            Classified c = scene.classify(x);
            g.x = to_f(x);
            g.z = float(t + s);
            g.albedo = c.albedo;
            g.gradient = to_f(scene.gradient(x));
            found = true;
        }
        alpha = next;
        if (alpha >= 0.9999) break;
    }
    g.coverage = float(alpha);
    if (!found) g = GBufferSample{Vec3f{}, std::numeric_limits<float>::infinity(), Rgb{}, Vec3f{}, float(alpha)};
    return g;
}

struct GBuffer {
    Image<Vec3f> x;
    Image<float> z;
    ImageRgb albedo;
    Image<Vec3f> gradient;
    Image<float> coverage;

    GBuffer() = default;
    GBuffer(int w, int h)
        : x(w, h), z(w, h, std::numeric_limits<float>::infinity()), albedo(w, h), gradient(w, h), coverage(w, h, 0.0f) {}

    int width() const { return z.width; }
    int height() const { return z.height; }

    GBufferSample at(int px, int py) const {
        size_t i = z.index(px, py);
        return {x.pixels[i], z.pixels[i], albedo.pixels[i], gradient.pixels[i], coverage.pixels[i]};
    }
    void set(int px, int py, const GBufferSample& s) {
        size_t i = z.index(px, py);
        x.pixels[i] = s.x;
        z.pixels[i] = s.z;
        albedo.pixels[i] = s.albedo;
        gradient.pixels[i] = s.gradient;
        coverage.pixels[i] = s.coverage;
    }
    bool covered(int px, int py) const { return coverage(px, py) >= kCoverageThreshold; }

    friend bool operator==(const GBuffer&, const GBuffer&) = default;
};

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

struct EyeImage {
    ImageRgb radiance;
    GBuffer gbuffer;
    Camera camera;
};

struct StereoFrame {
    int index = 0;
    double T = 0;
    uint64_t seed = 0;
    RenderMode mode = RenderMode::VptEnv;
    Vec3d volume_offset;
    std::array<EyeImage, 2> eyes;

    EyeImage& eye(Eye e) { return eyes[size_t(e)]; }
    const EyeImage& eye(Eye e) const { return eyes[size_t(e)]; }
};

/// Radiance of one pixel sample in the given mode.
inline Vec3d shade_pixel(const Ray& ray, const Scene& scene, const EnvLighting& env, const RenderSettings& s, Rng& rng) {
    double step = s.march_step * scene.voxel();
    switch (s.mode) {
        case RenderMode::AbsorptionEmission: return shade_absorption_emission(ray, scene, env, step);
        case RenderMode::GradientPhong: return shade_gradient_phong(ray, scene, env, step, s.phong);
        case RenderMode::PrefilteredEnv: return shade_prefiltered_env(ray, scene, env, step);
        case RenderMode::VptEnv: return trace_vpt(ray, scene, env, rng, s.phase_g, s.step_cap);
    }
    return {};
}

/// Renders one eye. Primary rays pass through pixel centres; only VPT is
/// stochastic, with one RNG stream per (seed, frame, eye, pixel, sample).
inline EyeImage render_eye(const Scene& scene, const EnvLighting& env, const Camera& cam, Eye eye, int frame_index,
                           const RenderSettings& s) {
    if (s.spp < 1) throw Error("render: spp must be >= 1");
    if (s.mode == RenderMode::PrefilteredEnv && env.prefiltered.empty()) {
        throw Error("render: PREFILTERED_ENV requires pre-filtered environment levels");
    }
    EyeImage out{ImageRgb(cam.width, cam.height), GBuffer(cam.width, cam.height), cam};
    Bounds3 box = scene.bounds();
    double gstep = s.gbuffer_step * scene.voxel();
    int samples = s.mode == RenderMode::VptEnv ? s.spp : 1;
    parallel_for(cam.height, [&](int py) {
        for (int px = 0; px < cam.width; ++px) {
            Ray ray = cam.ray(px + 0.5, py + 0.5);
            double t0, t1;
            if (!box.intersect(ray, t0, t1)) {
                out.radiance(px, py) = env.background(ray.dir);
                continue;
            }
            out.gbuffer.set(px, py, gbuffer_first_scatter(ray, scene, gstep));
            uint64_t pixel = uint64_t(py) * uint64_t(cam.width) + uint64_t(px);
            Vec3d sum;
            for (int k = 0; k < samples; ++k) {
                Rng rng = Rng::keyed({s.seed, uint64_t(frame_index), uint64_t(eye), pixel, uint64_t(k)});
                sum += shade_pixel(ray, scene, env, s, rng);
            }
            out.radiance(px, py) = to_f(sum / double(samples));
        }
    });
    return out;
}

inline StereoFrame render(const Scene& scene, const EnvLighting& env, const StereoRig& rig, int frame_index,
                          const RenderSettings& s, double T = 0.0) {
    StereoFrame f;
    f.index = frame_index;
    f.T = T;
    f.seed = s.seed;
    f.mode = s.mode;
    f.volume_offset = scene.offset;
    for (Eye e : {Eye::Left, Eye::Right}) f.eye(e) = render_eye(scene, env, rig.eye(e), e, frame_index, s);
    return f;
}

}  // namespace voxbeam

#endif
