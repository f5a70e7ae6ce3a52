// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_CONFIG_HPP
#define VOXBEAM_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "camera.hpp"
#include "denoiser.hpp"
#include "envlight.hpp"
#include "render.hpp"
#include "volume.hpp"

namespace voxbeam {

inline constexpr int kMaxEyeWidth = 1440;
inline constexpr int kMaxEyeHeight = 936;

/// Where a frame's environment comes from.
struct EnvSource {
    enum class Type { Panorama, Preset, FisheyeSequence };
    Type type = Type::Preset;
    fs::path path;             // panorama file or fisheye directory
    std::string name = "studio";
    double fov_deg = 200.0;
    MapFrame frame = MapFrame::World;  // Camera: calibrated with the rig orientation
};

struct EnvScheduleEntry {
    int from_frame = 0;
    EnvSource source;
};

enum class Pacing { Free, Lockstep };

struct SessionConfig {
    fs::path base_dir = ".";
    fs::path volume_path;          // empty: synthetic preset
    int preset_volume_size = 48;
    fs::path transfer_function_path;  // empty: preset by name
    std::string transfer_function_preset = "default";
    std::vector<EnvScheduleEntry> environment{{0, {}}};
    Vec3d volume_offset;

    RenderMode mode = RenderMode::VptEnv;
    int width = 64;
    int height = 64;
    int spp = 2;
    uint64_t seed = 1;
    double ipd = 0.1;
    double vfov_deg = 35.0;
    double march_step = 0.5;
    double gbuffer_step = 0.5;
    double phase_g = 0.0;

    bool denoise = true;
    BilateralParams denoiser;
    ReprojectionParams reprojection;
    Extremal extremal = Extremal::Min;
    int grid_n = 8;

    HdrParams hdr;
    double sphere_radius = 3.0;
    int pano_width = 512;
    int prefilter_levels = 5;

    std::vector<Pose> camera_path;
    Pose initial_pose = look_at({0, 0, 2.2}, {0, 0, 0});

    fs::path output_dir;
    bool dump_gbuffers = false;
    Pacing pacing = Pacing::Free;

    void validate() const {
        if (width < 1 || height < 1 || width > kMaxEyeWidth || height > kMaxEyeHeight) {
            throw Error("config: resolution per eye must lie within 1440x936");
        }
        if (spp < 1) throw Error("config: spp must be >= 1");
        if (!(vfov_deg > 0 && vfov_deg < 180)) throw Error("config: vfov_deg must lie in (0, 180)");
        if (!(ipd >= 0)) throw Error("config: ipd must be >= 0");
        if (pano_width < 4 || pano_width % 2 != 0) throw Error("config: pano_width must be even");
        if (environment.empty() || environment.front().from_frame != 0) throw Error("config: environment must start at frame 0");
        denoiser.validate();
    }

    RenderSettings render_settings() const {
        RenderSettings s;
        s.mode = mode;
        s.spp = spp;
        s.seed = seed;
        s.march_step = march_step;
        s.gbuffer_step = gbuffer_step;
        s.phase_g = phase_g;
        return s;
    }

    StereoRig rig(const Pose& pose) const {
        StereoRig r;
        r.pose = pose;
        r.ipd = ipd;
        r.vfov = vfov_deg * kPi / 180.0;
        r.width = width;
        r.height = height;
        return r;
    }

    fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Quat json_quat(const json& j) {
    if (!j.is_array() || j.size() != 4) throw Error("orientation: expected [w, x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline json to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }

/// {"position": [...], "orientation": [w, x, y, z]} or {"position": [...], "target": [...]}.
inline Pose pose_from_json(const json& j) {
    Vec3d position = json_vec3(j.at("position"), "position");
    if (j.contains("orientation")) return {position, checked_unit(json_quat(j["orientation"]), "pose")};
    if (j.contains("target")) return look_at(position, json_vec3(j["target"], "target"));
    throw Error("pose: needs orientation or target");
}

inline json to_json(const Pose& p) { return {{"position", to_json(p.position)}, {"orientation", to_json(p.orientation)}}; }

struct Orbit {
    Vec3d center;
    double radius = 2.2;
    double elevation_deg = 15.0;
    double start_deg = 0.0;
    double sweep_deg = 60.0;
    int frames = 60;
};

/// Frame i sits at azimuth start + sweep * i / frames, looking at the centre.
inline std::vector<Pose> orbit_path(const Orbit& o) {
    if (o.frames < 1) throw Error("orbit: frames must be >= 1");
    std::vector<Pose> out;
    double el = o.elevation_deg * kPi / 180.0;
    for (int i = 0; i < o.frames; ++i) {
        double az = (o.start_deg + o.sweep_deg * i / o.frames) * kPi / 180.0;
        Vec3d p = o.center + Vec3d(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)) * o.radius;
        out.push_back(look_at(p, o.center));
    }
    return out;
}

inline std::vector<Pose> camera_path_from_json(const json& j) {
    if (j.contains("orbit")) {
        const json& o = j["orbit"];
        Orbit orbit;
        if (o.contains("center")) orbit.center = json_vec3(o["center"], "center");
        orbit.radius = o.value("radius", orbit.radius);
        orbit.elevation_deg = o.value("elevation_deg", orbit.elevation_deg);
        orbit.start_deg = o.value("start_deg", orbit.start_deg);
        orbit.sweep_deg = o.value("sweep_deg", orbit.sweep_deg);
        orbit.frames = o.value("frames", orbit.frames);
        return orbit_path(orbit);
    }
    std::vector<Pose> out;
    for (const auto& p : j.at("poses")) out.push_back(pose_from_json(p));
    return out;
}

inline Extremal parse_extremal(const std::string& s) {
    if (s == "min") return Extremal::Min;
    if (s == "max") return Extremal::Max;
    throw Error("extremal must be 'min' or 'max'");
}

/// Applies the keys present in `j` on top of the current denoiser settings.
inline void apply_denoiser_json(const json& j, BilateralParams& p, ReprojectionParams& rp, Extremal& extremal) {
    BilateralParams np = p;
    ReprojectionParams nrp = rp;
    for (const auto& [key, value] : j.items()) {
        if (key == "type") continue;
        if (key == "radius") np.radius = value.get<int>();
        else if (key == "sigma_albedo") np.sigma_albedo = value.get<double>();
        else if (key == "sigma_gradient") np.sigma_gradient = value.get<double>();
        else if (key == "sigma_depth") np.sigma_depth = value.get<double>();
        else if (key == "alpha") np.alpha = value.get<double>();
        else if (key == "beta") np.beta = value.get<double>();
        else if (key == "temporal_multiplier") np.temporal_multiplier = value.get<double>();
        else if (key == "depth_tolerance") nrp.depth_tolerance = value.get<double>();
        else if (key == "albedo_tolerance") nrp.albedo_tolerance = value.get<double>();
        else if (key == "extremal") extremal = parse_extremal(value.get<std::string>());
        else throw Error("unknown denoiser parameter '" + key + "'");
    }
    np.validate();
    if (!(nrp.depth_tolerance > 0 && nrp.albedo_tolerance > 0)) throw Error("reprojection tolerances must be positive");
    p = np;
    rp = nrp;
}

inline EnvSource env_source_from_json(const json& j) {
    EnvSource s;
    std::string type = j.value("type", "preset");
    if (type == "preset") {
        s.type = EnvSource::Type::Preset;
        s.name = j.value("name", "studio");
        s.frame = MapFrame::World;
    } else if (type == "panorama") {
        s.type = EnvSource::Type::Panorama;
        s.path = j.at("path").get<std::string>();
        s.frame = MapFrame::World;
    } else if (type == "fisheye_sequence") {
        s.type = EnvSource::Type::FisheyeSequence;
        s.path = j.at("directory").get<std::string>();
        s.fov_deg = j.value("fov_deg", 200.0);
        s.frame = MapFrame::Camera;
    } else {
        throw Error("unknown environment type '" + type + "'");
    }
    if (j.contains("frame")) {
        std::string f = j["frame"];
        if (f == "world") s.frame = MapFrame::World;
        else if (f == "camera") s.frame = MapFrame::Camera;
        else throw Error("environment frame must be 'world' or 'camera'");
    }
    return s;
}

inline SessionConfig config_from_json(const json& j, const fs::path& base_dir = ".") {
    SessionConfig c;
    c.base_dir = base_dir;
    try {
        if (j.contains("volume")) {
            const json& v = j["volume"];
            if (v.is_string()) c.volume_path = v.get<std::string>();
            else c.preset_volume_size = v.value("size", c.preset_volume_size);
        }
        if (j.contains("transfer_function")) {
            const json& t = j["transfer_function"];
            if (t.is_string()) c.transfer_function_path = t.get<std::string>();
            else c.transfer_function_preset = t.value("preset", c.transfer_function_preset);
        }
        if (j.contains("environment")) {
            const json& e = j["environment"];
            c.environment.clear();
            if (e.contains("schedule")) {
                for (const auto& entry : e["schedule"]) c.environment.push_back({entry.value("from_frame", 0), env_source_from_json(entry)});
            } else {
                c.environment.push_back({0, env_source_from_json(e)});
            }
        }
        if (j.contains("volume_offset")) c.volume_offset = json_vec3(j["volume_offset"], "volume_offset");
        if (j.contains("mode")) c.mode = parse_render_mode(j["mode"].get<std::string>());
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        c.spp = j.value("spp", c.spp);
        c.seed = j.value("seed", c.seed);
        c.ipd = j.value("ipd", c.ipd);
        c.vfov_deg = j.value("vfov_deg", c.vfov_deg);
        c.march_step = j.value("march_step", c.march_step);
        c.gbuffer_step = j.value("gbuffer_step", c.gbuffer_step);
        c.phase_g = j.value("phase_g", c.phase_g);
        c.denoise = j.value("denoise", c.denoise);
        if (j.contains("denoiser")) apply_denoiser_json(j["denoiser"], c.denoiser, c.reprojection, c.extremal);
        c.grid_n = j.value("grid_n", c.grid_n);
        if (j.contains("hdr")) {
            c.hdr.percentile = j["hdr"].value("percentile", c.hdr.percentile);
            c.hdr.floor = j["hdr"].value("floor", c.hdr.floor);
            c.hdr.boost = j["hdr"].value("boost", c.hdr.boost);
        }
        c.sphere_radius = j.value("sphere_radius", c.sphere_radius);
        c.pano_width = j.value("pano_width", c.pano_width);
        c.prefilter_levels = j.value("prefilter_levels", c.prefilter_levels);
        if (j.contains("camera_path")) c.camera_path = camera_path_from_json(j["camera_path"]);
        if (j.contains("initial_pose")) c.initial_pose = pose_from_json(j["initial_pose"]);
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        c.dump_gbuffers = j.value("dump_gbuffers", c.dump_gbuffers);
        if (j.contains("pacing")) {
            std::string p = j["pacing"];
            if (p == "free") c.pacing = Pacing::Free;
            else if (p == "lockstep") c.pacing = Pacing::Lockstep;
            else throw Error("pacing must be 'free' or 'lockstep'");
        }
    } catch (const json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline SessionConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace voxbeam

#endif
