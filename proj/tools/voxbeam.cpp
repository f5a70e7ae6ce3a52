// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "voxbeam/config.hpp"
#include "voxbeam/pipeline.hpp"
#include "voxbeam/presets.hpp"
#include "voxbeam/service.hpp"

using namespace voxbeam;

namespace {

void add_bilateral_flags(CLI::App* cmd, BilateralParams& p, std::string& extremal) {
    cmd->add_option("--radius", p.radius, "spatial filter radius in pixels")->capture_default_str();
    cmd->add_option("--sigma-albedo", p.sigma_albedo, "albedo kernel width")->capture_default_str();
    cmd->add_option("--sigma-gradient", p.sigma_gradient, "gradient-direction kernel width")->capture_default_str();
    cmd->add_option("--sigma-depth", p.sigma_depth, "relative depth kernel width")->capture_default_str();
    cmd->add_option("--alpha", p.alpha, "inter-screen blend scale")->capture_default_str();
    cmd->add_option("--beta", p.beta, "inter-screen blend offset")->capture_default_str();
    cmd->add_option("--temporal-multiplier", p.temporal_multiplier, "scale on the temporal weight")->capture_default_str();
    cmd->add_option("--extremal", extremal, "patch similarity used for T")
        ->check(CLI::IsMember({"min", "max"}))
        ->capture_default_str();
}

void print_diff(const IlluminationDiff& d) {
    std::printf("T = %.9f\n", d.T);
    for (int y = 0; y < d.grid_n; ++y) {
        for (int x = 0; x < d.grid_n; ++x) std::printf("%s%.6f", x ? " " : "", d.per_patch[size_t(y * d.grid_n + x)]);
        std::printf("\n");
    }
}

RadianceMap read_map(const std::string& path, MapKind kind) {
    ImageRgb img = read_image(path);
    return RadianceMap(std::move(img), kind, MapFrame::World);
}

/// Synthetic inputs for trying the tools: volume, transfer function, a
/// fisheye capture sequence of a slowly turning rig, and a config using them.
void make_fixture(const fs::path& dir, int frames, int fisheye_size, const std::string& env) {
    fs::create_directories(dir / "fisheye");
    save_volume(dir / "blobs.json", presets::blob_volume());
    std::string tf = to_json(presets::transfer_function("default")).dump(2) + "\n";
    write_file_bytes(dir / "default_tf.json", std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(tf.data()), tf.size()));
    RadianceMap world = presets::panorama(env);
    Orbit orbit;
    orbit.frames = frames;
    std::vector<Pose> path = orbit_path(orbit);
    for (int t = 0; t < frames; ++t) {
        // What a rig-mounted camera sees: the world panorama in camera coordinates.
        RadianceMap cam(render_equirect(world.width(), world.height(), [&](const Vec3d& d) {
                            return lookup_bilinear(world.image, path[size_t(t)].orientation.rotate(d));
                        }),
                        MapKind::Ldr, MapFrame::Camera);
        FisheyePair pair = synthesize_fisheye_pair(cam, fisheye_size);
        write_png(dir / "fisheye" / ("front_" + frame_tag(t) + ".png"), pair.front);
        write_png(dir / "fisheye" / ("back_" + frame_tag(t) + ".png"), pair.back);
    }
    json cfg = {{"volume", "blobs.json"},
                {"transfer_function", "default_tf.json"},
                {"environment", {{"type", "fisheye_sequence"}, {"directory", "fisheye"}, {"fov_deg", 200.0}}},
                {"mode", "VPT_ENV"},
                {"width", 128},
                {"height", 128},
                {"spp", 2},
                {"seed", 1},
                {"camera_path", {{"orbit", {{"radius", orbit.radius}, {"elevation_deg", orbit.elevation_deg},
                                            {"sweep_deg", orbit.sweep_deg}, {"frames", frames}}}}},
                {"output_dir", "out"},
                {"dump_gbuffers", true}};
    std::string text = cfg.dump(2) + "\n";
    write_file_bytes(dir / "session.json", std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxbeam: environment-lit volumetric path tracing with stereo denoising"};
    app.require_subcommand(1);

    // render
    std::string config_path;
    bool dump_masks = false;
    auto* render_cmd = app.add_subcommand("render", "run a session config offline and write frames to disk");
    render_cmd->add_option("--config", config_path, "session config (JSON)")->required()->check(CLI::ExistingFile);
    render_cmd->add_flag("--dump-masks", dump_masks, "also write reprojection validity masks as PNG");

    // serve
    uint16_t port = 8765;
    std::string encoding = "png";
    auto* serve_cmd = app.add_subcommand("serve", "stream frames to one WebSocket client");
    serve_cmd->add_option("--config", config_path, "session config (JSON)")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", port, "TCP port on 127.0.0.1")->capture_default_str();
    serve_cmd->add_option("--encoding", encoding, "frame packet encoding")->check(CLI::IsMember({"raw", "png"}))->capture_default_str();

    // stitch
    std::string front, back, out;
    double fov_deg = 200.0;
    int pano_width = 512;
    auto* stitch_cmd = app.add_subcommand("stitch", "stitch a dual fisheye pair into an equirect panorama");
    stitch_cmd->add_option("--front", front)->required()->check(CLI::ExistingFile);
    stitch_cmd->add_option("--back", back)->required()->check(CLI::ExistingFile);
    stitch_cmd->add_option("--fov", fov_deg, "lens field of view in degrees")->capture_default_str();
    stitch_cmd->add_option("--width", pano_width, "output width; height is width / 2")->capture_default_str();
    stitch_cmd->add_option("-o,--out", out, "output .png or .pfm")->required();

    // estimate-hdr
    std::string in;
    HdrParams hdr;
    auto* hdr_cmd = app.add_subcommand("estimate-hdr", "boost detected light sources of an LDR panorama to HDR");
    hdr_cmd->add_option("--in", in, "LDR panorama (.png or .pfm)")->required()->check(CLI::ExistingFile);
    hdr_cmd->add_option("-o,--out", out, "HDR output (.pfm)")->required();
    hdr_cmd->add_option("--percentile", hdr.percentile)->capture_default_str();
    hdr_cmd->add_option("--floor", hdr.floor)->capture_default_str();
    hdr_cmd->add_option("--boost", hdr.boost)->capture_default_str();

    // diff-illum
    std::string prev, curr, extremal = "min";
    int grid_n = 8;
    auto* diff_cmd = app.add_subcommand("diff-illum", "illumination difference T between two radiance maps");
    diff_cmd->add_option("prev", prev)->required()->check(CLI::ExistingFile);
    diff_cmd->add_option("curr", curr)->required()->check(CLI::ExistingFile);
    diff_cmd->add_option("--grid", grid_n, "patches per side")->capture_default_str();
    diff_cmd->add_option("--extremal", extremal)->check(CLI::IsMember({"min", "max"}))->capture_default_str();

    // denoise
    DenoiseSequenceOptions dopt;
    auto* denoise_cmd = app.add_subcommand("denoise", "denoise a sequence written by render with dump_gbuffers");
    denoise_cmd->add_option("--in", in, "dumped sequence directory")->required()->check(CLI::ExistingDirectory);
    denoise_cmd->add_option("-o,--out", out, "output directory")->required();
    denoise_cmd->add_option("--grid", dopt.grid_n, "patches per side for T")->capture_default_str();
    denoise_cmd->add_option("--depth-tolerance", dopt.reprojection.depth_tolerance)->capture_default_str();
    denoise_cmd->add_option("--albedo-tolerance", dopt.reprojection.albedo_tolerance)->capture_default_str();
    denoise_cmd->add_flag("--dump-masks", dopt.dump_masks, "also write reprojection validity masks as PNG");
    add_bilateral_flags(denoise_cmd, dopt.params, extremal);

    // make-fixture
    int frames = 8, fisheye_size = 256;
    std::string env = "studio";
    auto* fixture_cmd = app.add_subcommand("make-fixture", "write a synthetic volume, fisheye sequence and session config");
    fixture_cmd->add_option("-o,--out", out, "output directory")->required();
    fixture_cmd->add_option("--frames", frames)->capture_default_str();
    fixture_cmd->add_option("--fisheye-size", fisheye_size)->capture_default_str();
    fixture_cmd->add_option("--env", env, "environment preset")->check(CLI::IsMember(presets::panorama_names()))->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*render_cmd) {
            SessionConfig cfg = load_config(config_path);
            fs::path dir = cfg.resolve(cfg.output_dir);
            OfflineSummary s = run_offline(cfg, [&](const FrameResult& r) {
                std::printf("frame %d  T=%.6f  env %.1f ms  render %.1f ms  denoise %.1f ms\n", r.index, r.diff.T,
                            r.timings.env_ms, r.timings.render_ms, r.timings.denoise_ms);
                if (dump_masks && r.denoised) {
                    for (Eye e : {Eye::Left, Eye::Right}) {
                        write_png(dir / eye_file(r.index, e, "mask", ".png"), validity_mask(r.denoised->reprojection[size_t(e)]));
                    }
                }
            });
            std::printf("%zu frames written to %s\n", s.T.size(), dir.string().c_str());
        } else if (*serve_cmd) {
            SessionConfig cfg = load_config(config_path);
            Service service(cfg, load_scene_assets(cfg), port, encoding == "raw" ? Encoding::Raw : Encoding::Png);
            std::printf("listening on ws://127.0.0.1:%u\n", unsigned(service.port()));
            std::fflush(stdout);
            service.run();
        } else if (*stitch_cmd) {
            FisheyePair pair{read_image(front), read_image(back), fov_deg};
            RadianceMap pano = stitch(pair, pano_width, pano_width / 2);
            if (fs::path(out).extension() == ".pfm") write_pfm(out, pano.image);
            else write_png(out, pano.image);
        } else if (*hdr_cmd) {
            RadianceMap ldr = read_map(in, MapKind::Ldr);
            LightDetection lights = detect_lights(ldr, hdr);
            write_pfm(out, estimate_hdr(ldr, hdr).image);
            std::printf("threshold %.6f, %zu light regions\n", lights.threshold, lights.regions.size());
        } else if (*diff_cmd) {
            print_diff(illumination_difference(read_map(prev, MapKind::Hdr), read_map(curr, MapKind::Hdr), grid_n,
                                               parse_extremal(extremal)));
        } else if (*denoise_cmd) {
            dopt.extremal = parse_extremal(extremal);
            int n = denoise_sequence(in, out, dopt);
            std::printf("%d frames denoised into %s\n", n, out.c_str());
        } else if (*fixture_cmd) {
            make_fixture(out, frames, fisheye_size, env);
            std::printf("fixture written to %s (try: voxbeam render --config %s/session.json)\n", out.c_str(), out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "voxbeam: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
