// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_PIPELINE_HPP
#define VOXBEAM_PIPELINE_HPP

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "config.hpp"
#include "denoiser.hpp"
#include "envlight.hpp"
#include "image_io.hpp"
#include "presets.hpp"
#include "render.hpp"
#include "volume.hpp"

namespace voxbeam {

/// One frame's raw environment input: an equirect panorama or a fisheye pair.
using EnvCapture = std::variant<RadianceMap, FisheyePair>;

inline std::string frame_tag(int t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05d", t);
    return buf;
}

/// Resamples a panorama to `width` x width/2 if needed.
inline RadianceMap resize_panorama(const RadianceMap& map, int width) {
    if (map.width() == width) return map;
    return RadianceMap(render_equirect(width, width / 2, [&](const Vec3d& d) { return lookup_bilinear(map.image, d); }),
                       map.kind, map.frame);
}

inline ImageRgb read_image(const fs::path& path) {
    std::string ext = path.extension().string();
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".png") return read_png(path);
    throw Error(path.string() + ": unsupported image format (expected .png or .pfm)");
}

// ---------------------------------------------------------------------------
// Environment inputs
// ---------------------------------------------------------------------------

/// Fisheye capture directory: front_NNNNN.{png,pfm} / back_NNNNN.{png,pfm},
/// numbered from 0 without gaps.
class FisheyeSequence {
public:
    FisheyeSequence() = default;
    FisheyeSequence(fs::path dir, double fov_deg) : dir_(std::move(dir)), fov_deg_(fov_deg) {
        if (!fs::is_directory(dir_)) throw Error("fisheye sequence: no such directory " + dir_.string());
        while (!find(count_, "front").empty() && !find(count_, "back").empty()) ++count_;
        if (count_ == 0) throw Error("fisheye sequence: " + dir_.string() + " has no front_00000/back_00000 pair");
    }

    int size() const { return count_; }

    /// Frames past the end hold the last capture.
    FisheyePair load(int i) const {
        i = std::clamp(i, 0, count_ - 1);
        FisheyePair pair;
        pair.front = read_image(find(i, "front"));
        pair.back = read_image(find(i, "back"));
        pair.fov_deg = fov_deg_;
        pair.validate();
        return pair;
    }

private:
    fs::path find(int i, const char* lens) const {
        for (const char* ext : {".png", ".pfm"}) {
            fs::path p = dir_ / (std::string(lens) + "_" + frame_tag(i) + ext);
            if (fs::exists(p)) return p;
        }
        return {};
    }

    fs::path dir_;
    double fov_deg_ = 200.0;
    int count_ = 0;
};

/// Resolves the environment schedule of a config to per-frame captures.
/// Construction checks every source so missing files fail before frame 0.
class EnvProvider {
public:
    explicit EnvProvider(const SessionConfig& cfg) : pano_width_(cfg.pano_width) {
        for (const auto& entry : cfg.environment) {
            Slot slot{entry.from_frame, entry.source, {}, {}};
            switch (entry.source.type) {
                case EnvSource::Type::Preset:
                    slot.panorama = with_frame(presets::panorama(entry.source.name, pano_width_), entry.source.frame);
                    break;
                case EnvSource::Type::Panorama:
                    slot.panorama = load_panorama(cfg.resolve(entry.source.path), entry.source.frame);
                    break;
                case EnvSource::Type::FisheyeSequence:
                    slot.sequence = FisheyeSequence(cfg.resolve(entry.source.path), entry.source.fov_deg);
                    break;
            }
            slots_.push_back(std::move(slot));
        }
        std::stable_sort(slots_.begin(), slots_.end(), [](const Slot& a, const Slot& b) { return a.from < b.from; });
    }

    RadianceMap load_panorama(const fs::path& path, MapFrame frame) const {
        if (!fs::exists(path)) throw Error("environment panorama not found: " + path.string());
        ImageRgb img = read_image(path);
        if (img.width != 2 * img.height) throw Error(path.string() + ": panorama must be 2:1");
        return resize_panorama(RadianceMap(std::move(img), MapKind::Ldr, frame), pano_width_);
    }

    /// The capture for frame t and the frame it is expressed in.
    EnvCapture capture(int t) const {
        const Slot* s = &slots_.front();
        for (const auto& slot : slots_) {
            if (slot.from <= t) s = &slot;
        }
        if (s->panorama) return *s->panorama;
        return s->sequence.load(t - s->from);
    }

    MapFrame frame_at(int t) const {
        const Slot* s = &slots_.front();
        for (const auto& slot : slots_) {
            if (slot.from <= t) s = &slot;
        }
        return s->source.frame;
    }

private:
    static RadianceMap with_frame(RadianceMap m, MapFrame f) {
        m.frame = f;
        return m;
    }

    struct Slot {
        int from;
        EnvSource source;
        std::optional<RadianceMap> panorama;
        FisheyeSequence sequence;
    };
    int pano_width_;
    std::vector<Slot> slots_;
};

// ---------------------------------------------------------------------------
// Frame pipeline
// ---------------------------------------------------------------------------

struct SceneAssets {
    std::shared_ptr<const VolumeGrid> grid;
    TransferFunction tf;
};

inline SceneAssets load_scene_assets(const SessionConfig& cfg) {
    SceneAssets a;
    if (cfg.volume_path.empty()) {
        a.grid = std::make_shared<const VolumeGrid>(presets::blob_volume(cfg.preset_volume_size));
    } else {
        fs::path p = cfg.resolve(cfg.volume_path);
        if (!fs::exists(p)) throw Error("volume not found: " + p.string());
        a.grid = std::make_shared<const VolumeGrid>(load_volume(p));
    }
    if (cfg.transfer_function_path.empty()) {
        a.tf = presets::transfer_function(cfg.transfer_function_preset);
    } else {
        fs::path p = cfg.resolve(cfg.transfer_function_path);
        if (!fs::exists(p)) throw Error("transfer function not found: " + p.string());
        a.tf = load_transfer_function(p);
    }
    return a;
}

/// Per-frame inputs that may change between frames.
struct FrameControls {
    Pose pose;
    Vec3d volume_offset;
    RenderMode mode = RenderMode::VptEnv;
};

struct FrameTimings {
    double env_ms = 0;
    double render_ms = 0;
    double denoise_ms = 0;
};

struct FrameResult {
    int index = 0;
    Pose pose;
    StereoFrame frame;
    std::optional<DenoiseResult> denoised;
    IlluminationDiff diff;
    std::shared_ptr<const RadianceMap> hdr;
    FrameTimings timings;

    const ImageRgb& output(Eye e) const { return denoised ? denoised->output[size_t(e)] : frame.eye(e).radiance; }
};

/// Sequential per-frame loop: illumination update, render, denoise.
/// Frame indices advance by one per step; history is never skipped.
class FramePipeline {
public:
    FramePipeline(SessionConfig cfg, SceneAssets assets)
        : cfg_(std::move(cfg)), tf_(std::move(assets.tf)), grid_(std::move(assets.grid)),
          denoiser_(cfg_.denoiser, cfg_.reprojection) {}

    SessionConfig& config() { return cfg_; }
    const SessionConfig& config() const { return cfg_; }
    void set_transfer_function(TransferFunction tf) { tf_ = std::move(tf); }
    int next_index() const { return index_; }

    /// Environment for the current rig pose: world-frame, centred on the
    /// volume, HDR. Also returns T against the previous frame's map.
    EnvLighting prepare_environment(const EnvCapture& capture, const FrameControls& c, IlluminationDiff& diff) const {
        RadianceMap pano;
        if (const auto* pair = std::get_if<FisheyePair>(&capture)) {
            pano = stitch(*pair, cfg_.pano_width, cfg_.pano_width / 2);
        } else {
            pano = resize_panorama(std::get<RadianceMap>(capture), cfg_.pano_width);
        }
        RadianceMap world = pano.frame == MapFrame::Camera ? calibrate(pano, c.pose.orientation) : pano;
        if (world.frame != MapFrame::World) throw Error("environment must be in the camera or world frame");
        Vec3d center = grid_->bounds().center() + c.volume_offset;
        RadianceMap warped = warp_to_center(world, center - c.pose.position, cfg_.sphere_radius);
        RadianceMap hdr = estimate_hdr(warped, cfg_.hdr);
        diff = prev_hdr_ ? illumination_difference(*prev_hdr_, hdr, cfg_.grid_n, cfg_.extremal) : IlluminationDiff{cfg_.grid_n, 0.0, {}};
        std::vector<RadianceMap> levels;
        if (c.mode == RenderMode::PrefilteredEnv) levels = prefilter(warped, cfg_.prefilter_levels);
        return EnvLighting(std::move(hdr), std::move(levels));
    }

    FrameResult step(const EnvCapture& capture, const FrameControls& c) {
        using clock = std::chrono::steady_clock;
        auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
        FrameResult r;
        r.index = index_;
        r.pose = c.pose;

        auto t0 = clock::now();
        EnvLighting env = prepare_environment(capture, c, r.diff);
        r.hdr = env.hdr;
        auto t1 = clock::now();

        Scene scene{grid_, tf_, c.volume_offset};
        RenderSettings s = cfg_.render_settings();
        s.mode = c.mode;
        r.frame = render(scene, env, cfg_.rig(c.pose), index_, s, r.diff.T);
        auto t2 = clock::now();

        if (cfg_.denoise) {
            denoiser_.params() = cfg_.denoiser;
            denoiser_.reprojection_params() = cfg_.reprojection;
            r.denoised = denoiser_.process(r.frame, r.hdr);
        }
        auto t3 = clock::now();
        r.timings = {ms(t1 - t0), ms(t2 - t1), ms(t3 - t2)};
        prev_hdr_ = r.hdr;
        ++index_;
        return r;
    }

private:
    SessionConfig cfg_;
    TransferFunction tf_;
    std::shared_ptr<const VolumeGrid> grid_;
    StereoDenoiser denoiser_;
    std::shared_ptr<const RadianceMap> prev_hdr_;
    int index_ = 0;
};

// ---------------------------------------------------------------------------
// Frame outputs
// ---------------------------------------------------------------------------

/// Octahedral encoding of a unit vector into [-1, 1]^2.
inline std::pair<float, float> octahedral_encode(const Vec3d& n) {
    double s = std::abs(n.x) + std::abs(n.y) + std::abs(n.z);
    if (s == 0) return {0.0f, 0.0f};
    double x = n.x / s, y = n.y / s;
    if (n.z < 0) {
        double ox = (1 - std::abs(y)) * (x >= 0 ? 1 : -1);
        double oy = (1 - std::abs(x)) * (y >= 0 ? 1 : -1);
        x = ox;
        y = oy;
    }
    return {float(x), float(y)};
}

inline Vec3d octahedral_decode(float ex, float ey) {
    Vec3d n{ex, ey, 1.0 - std::abs(ex) - std::abs(ey)};
    if (n.z < 0) {
        double ox = (1 - std::abs(n.y)) * (n.x >= 0 ? 1 : -1);
        double oy = (1 - std::abs(n.x)) * (n.y >= 0 ? 1 : -1);
        n.x = ox;
        n.y = oy;
    }
    return normalize(n);
}

/// (octahedral normal, depth); uncovered pixels are all zero.
inline ImageRgb normal_depth_image(const GBuffer& g) {
    ImageRgb out(g.width(), g.height());
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            if (!g.covered(x, y)) continue;
            Vec3d grad = to_d(g.gradient(x, y));
            auto [ex, ey] = length(grad) > 0 ? octahedral_encode(gradient_normal(grad)) : std::pair{0.0f, 0.0f};
            out(x, y) = {ex, ey, g.z(x, y)};
        }
    }
    return out;
}

inline json camera_json(const Camera& c) {
    return {{"position", to_json(c.position)}, {"forward", to_json(c.forward)}, {"up", to_json(c.up)},
            {"vfov", c.vfov},                  {"width", c.width},                {"height", c.height},
            {"near", c.near}};
}

inline std::string eye_file(int t, Eye e, const std::string& kind, const std::string& ext) {
    std::string base = "frame_" + frame_tag(t);
    if (!kind.empty()) base += "_" + kind;
    return base + "_" + eye_tag(e) + ext;
}

/// Writes PFM + PNG per eye and, with `dump`, the raw render, G-buffer
/// channels, cameras and the HDR map. Returns the file names written.
inline std::vector<std::string> write_frame(const fs::path& dir, const FrameResult& r, bool dump) {
    std::vector<std::string> files;
    auto put_pfm = [&](const std::string& name, const ImageRgb& img) {
        write_pfm(dir / name, img);
        files.push_back(name);
    };
    for (Eye e : {Eye::Left, Eye::Right}) {
        const ImageRgb& out = r.output(e);
        put_pfm(eye_file(r.index, e, "", ".pfm"), out);
        std::string png = eye_file(r.index, e, "", ".png");
        write_png(dir / png, tonemap(out));
        files.push_back(png);
        if (!dump) continue;
        const EyeImage& eye = r.frame.eye(e);
        put_pfm(eye_file(r.index, e, "raw", ".pfm"), eye.radiance);
        put_pfm(eye_file(r.index, e, "albedo", ".pfm"), eye.gbuffer.albedo);
        put_pfm(eye_file(r.index, e, "normal_depth", ".pfm"), normal_depth_image(eye.gbuffer));
        ImageRgb pos(eye.gbuffer.width(), eye.gbuffer.height());
        for (size_t i = 0; i < pos.pixels.size(); ++i) pos.pixels[i] = eye.gbuffer.x.pixels[i];
        put_pfm(eye_file(r.index, e, "position", ".pfm"), pos);
    }
    if (dump) {
        json cams = {{"L", camera_json(r.frame.eye(Eye::Left).camera)}, {"R", camera_json(r.frame.eye(Eye::Right).camera)}};
        std::string name = "camera_" + frame_tag(r.index) + ".json";
        std::string text = cams.dump(2) + "\n";
        write_file_bytes(dir / name, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
        files.push_back(name);
        put_pfm("env_" + frame_tag(r.index) + ".pfm", r.hdr->image);
    }
    return files;
}

struct OfflineSummary {
    std::vector<double> T;
    std::vector<FrameTimings> timings;
};

/// Runs the configured camera path and writes every frame plus manifest.json.
/// `on_frame` sees each result before it is dropped.
inline OfflineSummary run_offline(const SessionConfig& cfg, const std::function<void(const FrameResult&)>& on_frame = {}) {
    if (cfg.camera_path.empty()) throw Error("render: camera_path must have at least one pose");
    if (cfg.output_dir.empty()) throw Error("render: output_dir is required");
    // Everything that can be missing is resolved here, before frame 0.
    SceneAssets assets = load_scene_assets(cfg);
    EnvProvider envs(cfg);
    fs::path dir = cfg.resolve(cfg.output_dir);
    fs::create_directories(dir);

    FramePipeline pipeline(cfg, std::move(assets));
    OfflineSummary summary;
    json frames = json::array();
    for (int t = 0; t < int(cfg.camera_path.size()); ++t) {
        FrameResult r;
        try {
            FrameControls c{cfg.camera_path[size_t(t)], cfg.volume_offset, cfg.mode};
            r = pipeline.step(envs.capture(t), c);
        } catch (const std::exception& e) {
            throw Error("frame " + std::to_string(t) + ": " + e.what());
        }
        std::vector<std::string> files = write_frame(dir, r, cfg.dump_gbuffers);
        frames.push_back({{"t", t}, {"T", r.diff.T}, {"pose", to_json(r.pose)}, {"files", files}});
        summary.T.push_back(r.diff.T);
        summary.timings.push_back(r.timings);
        if (on_frame) on_frame(r);
    }
    json manifest = {{"frames", frames},
                     {"mode", to_string(cfg.mode)},
                     {"width", cfg.width},
                     {"height", cfg.height},
                     {"spp", cfg.spp},
                     {"seed", cfg.seed},
                     {"denoised", cfg.denoise}};
    std::string text = manifest.dump(2) + "\n";
    write_file_bytes(dir / "manifest.json", std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
    return summary;
}

// ---------------------------------------------------------------------------
// Dumped sequences
// ---------------------------------------------------------------------------

inline Camera camera_from_json(const json& j) {
    Vec3d forward = json_vec3(j.at("forward"), "forward"), up = json_vec3(j.at("up"), "up");
    Camera c(json_vec3(j.at("position"), "position"), forward, up, j.at("vfov").get<double>(), j.at("width").get<int>(),
             j.at("height").get<int>(), j.at("near").get<double>());
    // Dumped axes are already orthonormal; keep them bit-exact when they are.
    if (std::abs(length(forward) - 1) < 1e-12 && std::abs(length(up) - 1) < 1e-12 && std::abs(dot(forward, up)) < 1e-12) {
        c.forward = forward;
        c.up = up;
    }
    return c;
}

/// Rebuilds a G-buffer from the dumped triplet. Gradient magnitudes are not
/// stored, so the gradient comes back as the unit vector opposite the normal.
inline GBuffer gbuffer_from_dumps(const ImageRgb& albedo, const ImageRgb& normal_depth, const ImageRgb& position) {
    if (albedo.width != normal_depth.width || albedo.height != normal_depth.height || albedo.width != position.width ||
        albedo.height != position.height) {
        throw Error("G-buffer dumps differ in size");
    }
    GBuffer g(albedo.width, albedo.height);
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            const Rgb& nd = normal_depth(x, y);
            if (!(nd.z > 0)) continue;
            Vec3d grad = nd.x == 0 && nd.y == 0 ? Vec3d() : -octahedral_decode(nd.x, nd.y);
            g.set(x, y, {position(x, y), nd.z, albedo(x, y), to_f(grad), 1.0f});
        }
    }
    return g;
}

inline json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

/// Frame t of a sequence written with dump_gbuffers: raw radiance,
/// G-buffers and cameras. T is left at zero.
inline StereoFrame load_dumped_frame(const fs::path& dir, int t) {
    StereoFrame f;
    f.index = t;
    json cams = read_json_file(dir / ("camera_" + frame_tag(t) + ".json"));
    for (Eye e : {Eye::Left, Eye::Right}) {
        EyeImage& eye = f.eye(e);
        eye.radiance = read_pfm(dir / eye_file(t, e, "raw", ".pfm"));
        eye.gbuffer = gbuffer_from_dumps(read_pfm(dir / eye_file(t, e, "albedo", ".pfm")),
                                         read_pfm(dir / eye_file(t, e, "normal_depth", ".pfm")),
                                         read_pfm(dir / eye_file(t, e, "position", ".pfm")));
        eye.camera = camera_from_json(cams.at(eye_tag(e)));
    }
    return f;
}

struct DenoiseSequenceOptions {
    BilateralParams params;
    ReprojectionParams reprojection;
    Extremal extremal = Extremal::Min;
    int grid_n = 8;
    bool dump_masks = false;
};

/// Denoises every dumped frame of `in` into `out`. T is recomputed from the
/// dumped HDR maps when present, else taken from the manifest.
inline int denoise_sequence(const fs::path& in, const fs::path& out, const DenoiseSequenceOptions& opt) {
    opt.params.validate();
    std::optional<json> manifest;
    if (fs::exists(in / "manifest.json")) manifest = read_json_file(in / "manifest.json");
    fs::create_directories(out);
    StereoDenoiser denoiser(opt.params, opt.reprojection);
    std::optional<RadianceMap> prev;
    int t = 0;
    for (; fs::exists(in / ("camera_" + frame_tag(t) + ".json")); ++t) {
        try {
            StereoFrame f = load_dumped_frame(in, t);
            fs::path env = in / ("env_" + frame_tag(t) + ".pfm");
            std::shared_ptr<const RadianceMap> hdr;
            if (fs::exists(env)) {
                hdr = std::make_shared<const RadianceMap>(read_pfm(env), MapKind::Hdr, MapFrame::Warped);
                f.T = prev ? illumination_difference(*prev, *hdr, opt.grid_n, opt.extremal).T : 0.0;
                prev = *hdr;
            } else if (manifest) {
                f.T = manifest->at("frames").at(size_t(t)).at("T").get<double>();
            }
            DenoiseResult r = denoiser.process(f, hdr);
            for (Eye e : {Eye::Left, Eye::Right}) {
                write_pfm(out / eye_file(t, e, "", ".pfm"), r.output[size_t(e)]);
                write_png(out / eye_file(t, e, "", ".png"), tonemap(r.output[size_t(e)]));
                if (opt.dump_masks) write_png(out / eye_file(t, e, "mask", ".png"), validity_mask(r.reprojection[size_t(e)]));
            }
        } catch (const std::exception& e) {
            throw Error("frame " + std::to_string(t) + ": " + e.what());
        }
    }
    if (t == 0) throw Error(in.string() + ": no dumped frames (run render with dump_gbuffers)");
    return t;
}

}  // namespace voxbeam

#endif
