#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stereopose/errors.hpp"
#include "stereopose/geometry.hpp"
#include "stereopose/png_io.hpp"

// BOP scene tree with a stereo extension: the standard per-scene layout is
// duplicated under left/ and right/, one stereo_rig.json describes the rig.
//
//   <root>/<scene_id>/{left,right}/{rgb,depth}/NNNNNN.png
//   <root>/<scene_id>/scene_gt.json
//   <root>/<scene_id>/scene_camera.json
//   <root>/<scene_id>/stereo_rig.json
//   <root>/<scene_id>/features/{left,right}/NNNNNN.spkf

namespace stereopose::bop {

using nlohmann::ordered_json;

enum class View { Left, Right };

inline const char* view_name(View v) { return v == View::Left ? "left" : "right"; }

struct FrameAnnotation {
    int obj_id = 0;
    Pose pose;  // cam_R_m2c / cam_t_m2c in the LEFT camera frame
    double visib_fract_left = 0.0;
    double visib_fract_right = 0.0;
    BoundingBox bbox_left;
    BoundingBox bbox_right;
};

struct FrameRecord {
    int frame_id = 0;
    std::vector<FrameAnnotation> annotations;
};

struct StereoScene {
    int scene_id = 0;
    StereoRig rig;
    double depth_scale = 0.1;  // depth PNG unit in mm
    std::vector<FrameRecord> frames;
};

// Annotation kept only if at least min_visib of the surface is visible in
// BOTH views; removal is strict `<` on either view.
inline std::vector<FrameAnnotation> filter_labels(const std::vector<FrameAnnotation>& annotations,
                                                  double min_visib = 0.10) {
    std::vector<FrameAnnotation> kept;
    kept.reserve(annotations.size());
    for (const auto& a : annotations)
        if (a.visib_fract_left >= min_visib && a.visib_fract_right >= min_visib)
            kept.push_back(a);
    return kept;
}

// --- path helpers -----------------------------------------------------------

inline std::string zero_pad(int value, int digits = 6) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%0*d", digits, value);
    return buf;
}

inline std::filesystem::path scene_dir(const std::filesystem::path& root, int scene_id) {
    return root / zero_pad(scene_id);
}
inline std::filesystem::path rgb_path(const std::filesystem::path& root, int scene_id, View v,
                                      int frame_id) {
    return scene_dir(root, scene_id) / view_name(v) / "rgb" / (zero_pad(frame_id) + ".png");
}
inline std::filesystem::path depth_path(const std::filesystem::path& root, int scene_id, View v,
                                        int frame_id) {
    return scene_dir(root, scene_id) / view_name(v) / "depth" / (zero_pad(frame_id) + ".png");
}
inline std::filesystem::path features_path(const std::filesystem::path& root, int scene_id, View v,
                                           int frame_id) {
    return scene_dir(root, scene_id) / "features" / view_name(v) / (zero_pad(frame_id) + ".spkf");
}

// --- json helpers -----------------------------------------------------------

namespace detail {

inline ordered_json mat3_to_json(const Eigen::Matrix3d& R) {
    ordered_json a = ordered_json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a.push_back(R(r, c));
    return a;
}

inline ordered_json vec3_to_json(const Eigen::Vector3d& t) { return {t.x(), t.y(), t.z()}; }

inline Eigen::Matrix3d mat3_from_json(const ordered_json& a, const std::string& ctx) {
    if (!a.is_array() || a.size() != 9) throw ParseError(ctx + ": expected 9-element array");
    Eigen::Matrix3d R;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R(r, c) = a[r * 3 + c].get<double>();
    return R;
}

inline Eigen::Vector3d vec3_from_json(const ordered_json& a, const std::string& ctx) {
    if (!a.is_array() || a.size() != 3) throw ParseError(ctx + ": expected 3-element array");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline ordered_json bbox_to_json(const BoundingBox& b) {
    // BOP convention: x, y, w, h
    return {b.x_min, b.y_min, b.width(), b.height()};
}

inline BoundingBox bbox_from_json(const ordered_json& a, const std::string& ctx) {
    if (!a.is_array() || a.size() != 4) throw ParseError(ctx + ": expected [x, y, w, h]");
    double x = a[0].get<double>(), y = a[1].get<double>(), w = a[2].get<double>(),
           h = a[3].get<double>();
    return {x, y, x + w, y + h};
}

inline ordered_json intrinsics_to_json(const CameraIntrinsics& K) {
    return {K.fx, 0.0, K.cx, 0.0, K.fy, K.cy, 0.0, 0.0, 1.0};
}

inline CameraIntrinsics intrinsics_from_json(const ordered_json& a, int width, int height,
                                             const std::string& ctx) {
    if (!a.is_array() || a.size() != 9) throw ParseError(ctx + ": cam_K must have 9 entries");
    CameraIntrinsics K;
    K.fx = a[0].get<double>();
    K.fy = a[4].get<double>();
    K.cx = a[2].get<double>();
    K.cy = a[5].get<double>();
    K.width = width;
    K.height = height;
    return K;
}

inline void write_json_atomic(const ordered_json& j, const std::filesystem::path& path) {
    atomic_file_write(path, [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp);
        if (!out) throw ParseError("cannot open " + tmp.string() + " for writing");
        out << j.dump(2) << "\n";
        if (!out) throw ParseError("write failed on " + tmp.string());
    });
}

inline ordered_json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("missing file " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace detail

// --- scene writer / reader --------------------------------------------------

inline void write_scene(const StereoScene& scene, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    for (const auto& frame : scene.frames)
        for (const auto& ann : frame.annotations) {
            if (!ann.pose.is_valid(1e-6))
                throw InvalidInputError("write_scene: invalid pose for obj " +
                                        std::to_string(ann.obj_id) + " in frame " +
                                        std::to_string(frame.frame_id));
            if (ann.visib_fract_left < 0 || ann.visib_fract_left > 1 ||
                ann.visib_fract_right < 0 || ann.visib_fract_right > 1)
                throw InvalidInputError("write_scene: visibility fraction out of [0,1]");
        }

    fs::path dir = scene_dir(root, scene.scene_id);
    std::error_code ec;
    for (View v : {View::Left, View::Right}) {
        fs::create_directories(dir / view_name(v) / "rgb", ec);
        fs::create_directories(dir / view_name(v) / "depth", ec);
        fs::create_directories(dir / "features" / view_name(v), ec);
    }
    if (!fs::exists(dir)) throw ParseError("write_scene: cannot create " + dir.string());

    ordered_json gt = ordered_json::object();
    ordered_json cam = ordered_json::object();
    for (const auto& frame : scene.frames) {
        ordered_json anns = ordered_json::array();
        for (const auto& a : frame.annotations) {
            anns.push_back({{"obj_id", a.obj_id},
                            {"cam_R_m2c", detail::mat3_to_json(a.pose.R)},
                            {"cam_t_m2c", detail::vec3_to_json(a.pose.t)},
                            {"visib_fract_left", a.visib_fract_left},
                            {"visib_fract_right", a.visib_fract_right},
                            {"bbox_left", detail::bbox_to_json(a.bbox_left)},
                            {"bbox_right", detail::bbox_to_json(a.bbox_right)}});
        }
        std::string key = std::to_string(frame.frame_id);
        gt[key] = std::move(anns);
        cam[key] = {{"cam_K", detail::intrinsics_to_json(scene.rig.left)},
                    {"depth_scale", scene.depth_scale}};
    }

    ordered_json rig = {{"baseline_mm", scene.rig.baseline()},
                        {"R_l2r", detail::mat3_to_json(scene.rig.extrinsic_l2r.R)},
                        {"t_l2r", detail::vec3_to_json(scene.rig.extrinsic_l2r.t)},
                        {"cam_K_left", detail::intrinsics_to_json(scene.rig.left)},
                        {"cam_K_right", detail::intrinsics_to_json(scene.rig.right)},
                        {"width", scene.rig.left.width},
                        {"height", scene.rig.left.height}};

    detail::write_json_atomic(gt, dir / "scene_gt.json");
    detail::write_json_atomic(cam, dir / "scene_camera.json");
    detail::write_json_atomic(rig, dir / "stereo_rig.json");
}

inline StereoScene read_scene(const std::filesystem::path& root, int scene_id,
                              bool check_images = true) {
    namespace fs = std::filesystem;
    fs::path dir = scene_dir(root, scene_id);
    ordered_json gt = detail::load_json(dir / "scene_gt.json");
    ordered_json cam = detail::load_json(dir / "scene_camera.json");
    ordered_json rig_j = detail::load_json(dir / "stereo_rig.json");

    StereoScene scene;
    scene.scene_id = scene_id;

    const std::string rig_ctx = (dir / "stereo_rig.json").string();
    int width = rig_j.value("width", 0);
    int height = rig_j.value("height", 0);
    if (width < 1 || height < 1) throw ParseError(rig_ctx + ": missing or invalid width/height");
    scene.rig.left = detail::intrinsics_from_json(rig_j.at("cam_K_left"), width, height, rig_ctx);
    scene.rig.right = detail::intrinsics_from_json(rig_j.at("cam_K_right"), width, height, rig_ctx);
    scene.rig.extrinsic_l2r.R = detail::mat3_from_json(rig_j.at("R_l2r"), rig_ctx + ":R_l2r");
    scene.rig.extrinsic_l2r.t = detail::vec3_from_json(rig_j.at("t_l2r"), rig_ctx + ":t_l2r");
    double baseline = rig_j.value("baseline_mm", -1.0);
    if (std::abs(baseline - scene.rig.baseline()) > 1e-6)
        throw ParseError(rig_ctx + ": baseline_mm disagrees with t_l2r");
    if (!scene.rig.extrinsic_l2r.is_valid(1e-6))
        throw ParseError(rig_ctx + ": R_l2r is not a rotation");

    if (gt.size() != cam.size())
        throw ParseError(dir.string() + ": scene_gt.json and scene_camera.json frame counts differ");

    std::vector<int> frame_ids;
    for (auto it = gt.begin(); it != gt.end(); ++it) {
        try {
            frame_ids.push_back(std::stoi(it.key()));
        } catch (const std::exception&) {
            throw ParseError(dir.string() + "/scene_gt.json: non-integer frame key '" + it.key() +
                             "'");
        }
    }
    std::sort(frame_ids.begin(), frame_ids.end());

    for (int frame_id : frame_ids) {
        std::string key = std::to_string(frame_id);
        std::string ctx = dir.string() + "/scene_gt.json[" + key + "]";
        if (!cam.contains(key))
            throw ParseError(dir.string() + "/scene_camera.json: missing frame " + key);

        const ordered_json& cam_entry = cam.at(key);
        CameraIntrinsics K = detail::intrinsics_from_json(cam_entry.at("cam_K"), width, height,
                                                          dir.string() + "/scene_camera.json[" +
                                                              key + "]");
        if (std::abs(K.fx - scene.rig.left.fx) > 1e-9 || std::abs(K.fy - scene.rig.left.fy) > 1e-9 ||
            std::abs(K.cx - scene.rig.left.cx) > 1e-9 || std::abs(K.cy - scene.rig.left.cy) > 1e-9)
            throw ParseError(dir.string() + "/scene_camera.json[" + key +
                             "]: cam_K disagrees with stereo_rig.json cam_K_left");
        double ds = cam_entry.value("depth_scale", -1.0);
        if (ds <= 0) throw ParseError(dir.string() + "/scene_camera.json[" + key +
                                      "]: missing depth_scale");
        scene.depth_scale = ds;

        FrameRecord rec;
        rec.frame_id = frame_id;
        for (const auto& a : gt.at(key)) {
            FrameAnnotation ann;
            try {
                ann.obj_id = a.at("obj_id").get<int>();
                ann.pose.R = detail::mat3_from_json(a.at("cam_R_m2c"), ctx + ":cam_R_m2c");
                ann.pose.t = detail::vec3_from_json(a.at("cam_t_m2c"), ctx + ":cam_t_m2c");
                ann.visib_fract_left = a.at("visib_fract_left").get<double>();
                ann.visib_fract_right = a.at("visib_fract_right").get<double>();
                ann.bbox_left = detail::bbox_from_json(a.at("bbox_left"), ctx + ":bbox_left");
                ann.bbox_right = detail::bbox_from_json(a.at("bbox_right"), ctx + ":bbox_right");
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(ctx + ": " + e.what());
            }
            if (!ann.pose.is_valid(1e-6))
                throw ParseError(ctx + ": cam_R_m2c is not a rotation matrix");
            rec.annotations.push_back(std::move(ann));
        }

        if (check_images)
            for (View v : {View::Left, View::Right}) {
                for (const fs::path& p : {rgb_path(root, scene_id, v, frame_id),
                                          depth_path(root, scene_id, v, frame_id)})
                    if (!fs::exists(p)) throw ParseError("missing image file " + p.string());
            }
        scene.frames.push_back(std::move(rec));
    }
    return scene;
}

inline std::vector<int> list_scene_ids(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::vector<int> ids;
    if (!fs::exists(root)) throw ParseError("dataset root does not exist: " + root.string());
    for (const auto& e : fs::directory_iterator(root)) {
        if (!e.is_directory()) continue;
        const std::string name = e.path().filename().string();
        if (name.size() == 6 && std::all_of(name.begin(), name.end(), ::isdigit))
            ids.push_back(std::stoi(name));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

// --- depth image quantization -----------------------------------------------

inline ImageU16 quantize_depth(const ImageF64& depth_mm, double depth_scale) {
    ImageU16 out(depth_mm.width, depth_mm.height, 1, 0);
    for (size_t i = 0; i < depth_mm.data.size(); ++i) {
        double v = depth_mm.data[i] / depth_scale;
        out.data[i] = static_cast<std::uint16_t>(
            std::clamp(std::llround(v), static_cast<long long>(0), static_cast<long long>(65535)));
    }
    return out;
}

inline ImageF64 dequantize_depth(const ImageU16& depth_png, double depth_scale) {
    ImageF64 out(depth_png.width, depth_png.height, 1, 0.0);
    for (size_t i = 0; i < depth_png.data.size(); ++i)
        out.data[i] = depth_png.data[i] * depth_scale;
    return out;
}

}  // namespace stereopose::bop
