#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "stereopose/bopstore.hpp"
#include "stereopose/feature_archive.hpp"
#include "stereopose/mesh.hpp"
#include "stereopose/rasterizer.hpp"
#include "stereopose/rng.hpp"
#include "stereopose/stereomatch.hpp"
#include "stereopose/threadpool.hpp"

// Deterministic synthetic stereo dataset generator. Objects are placed
// collision-free (bounding spheres) inside the frustum of both cameras of
// the reference view; additional viewpoints orbit the object-cloud
// centroid. No physics, flat-shaded procedural texture.

namespace stereopose::gen {

struct LibraryObject {
    int obj_id = 0;
    std::string name;
    TriMesh mesh;
    bool symmetric = false;
};

inline std::vector<LibraryObject> build_object_library(int k_regions = 64) {
    std::vector<LibraryObject> lib;
    auto add = [&](int id, const std::string& name, TriMesh mesh, bool symmetric) {
        int k = std::min<int>(k_regions, static_cast<int>(mesh.faces.size()));
        mesh.region_of_face = region_partition(mesh, k, /*seed=*/mix_seed(9000, id));
        lib.push_back({id, name, std::move(mesh), symmetric});
    };
    add(1, "cube_80", make_cube(80.0, 5), false);
    add(2, "carton_60x90x120", make_box(60.0, 90.0, 120.0, 4), false);
    add(3, "ball_45", make_icosphere(45.0, 2), true);
    add(4, "can_30x100", make_cylinder(30.0, 100.0, 24), true);
    add(5, "wedge_90", make_tetrahedron(90.0), false);
    add(6, "block_40x40x140", make_box(40.0, 40.0, 140.0, 4), false);
    add(7, "ball_30", make_icosphere(30.0, 2), true);
    add(8, "puck_45x60", make_cylinder(45.0, 60.0, 32), true);
    return lib;
}

// Shared immutable library instance for default region count.
inline const std::vector<LibraryObject>& object_library() {
    static const std::vector<LibraryObject> lib = build_object_library();
    return lib;
}

inline const LibraryObject& library_object(int obj_id) {
    for (const auto& o : object_library())
        if (o.obj_id == obj_id) return o;
    throw InvalidInputError("object library has no obj_id " + std::to_string(obj_id));
}

struct GenConfig {
    std::vector<int> object_ids = {1, 2, 3, 4, 5, 6, 7, 8};
    int min_objects = 1;
    int max_objects = 15;
    int views_per_scene = 25;
    int n_scenes = 1;
    double depth_min_mm = 600.0;
    double depth_max_mm = 1400.0;
    double lateral_mm = 200.0;   // placement half-range in x/y
    CameraIntrinsics camera{600.0, 600.0, 320.0, 240.0, 640, 480};
    double baseline_mm = 50.0;
    double min_visib = 0.10;
    bool textured = true;
    std::uint64_t seed = 0;

    StereoRig rig() const { return StereoRig::rectified(camera, baseline_mm); }

    void validate() const {
        if (object_ids.empty()) throw ConfigError("gen: object_ids is empty");
        if (min_objects < 1 || max_objects < min_objects)
            throw ConfigError("gen: invalid object count range");
        if (max_objects > 15) throw ConfigError("gen: max_objects exceeds 15");
        if (views_per_scene < 1 || n_scenes < 1)
            throw ConfigError("gen: need >= 1 view and >= 1 scene");
        if (depth_min_mm <= 0 || depth_max_mm < depth_min_mm)
            throw ConfigError("gen: invalid depth range");
        if (!camera.is_valid() || baseline_mm <= 0) throw ConfigError("gen: invalid rig");
    }
};

struct PlacedObject {
    int obj_id = 0;
    Pose pose;  // object -> scene anchor frame (reference left camera)
};

// Uniform rotations, translations in the frustum of BOTH cameras, bounding
// sphere overlap rejection with up to 100 attempts per object before the
// object is dropped.
inline std::vector<PlacedObject> sample_scene(const GenConfig& config, std::uint64_t scene_seed) {
    config.validate();
    auto rng = make_rng(config.seed, scene_seed, 0x5ce7e);
    const StereoRig rig = config.rig();

    std::uniform_int_distribution<int> n_dist(config.min_objects, config.max_objects);
    const int wanted = n_dist(rng);
    std::uniform_int_distribution<size_t> id_dist(0, config.object_ids.size() - 1);
    std::uniform_real_distribution<double> ux(-config.lateral_mm, config.lateral_mm);
    std::uniform_real_distribution<double> uz(config.depth_min_mm, config.depth_max_mm);

    auto in_both_frustums = [&](const Eigen::Vector3d& t) {
        for (int side = 0; side < 2; ++side) {
            const CameraIntrinsics& K = side == 0 ? rig.left : rig.right;
            Eigen::Vector3d p = side == 0 ? t : rig.extrinsic_l2r.apply(t);
            if (p.z() <= 0) return false;
            Eigen::Vector2d px = project(p, K);
            if (px.x() < 0 || px.x() >= K.width || px.y() < 0 || px.y() >= K.height) return false;
        }
        return true;
    };

    std::vector<PlacedObject> placed;
    std::vector<double> radii;
    for (int i = 0; i < wanted; ++i) {
        int obj_id = config.object_ids[id_dist(rng)];
        const LibraryObject& obj = library_object(obj_id);
        double radius = obj.mesh.diameter / 2.0;
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            Pose pose;
            pose.R = random_rotation(rng);
            pose.t = {ux(rng), ux(rng), uz(rng)};
            if (!in_both_frustums(pose.t)) continue;
            bool overlap = false;
            for (size_t j = 0; j < placed.size(); ++j)
                if ((placed[j].pose.t - pose.t).norm() < radii[j] + radius) overlap = true;
            if (overlap) continue;
            placed.push_back({obj_id, pose});
            radii.push_back(radius);
            ok = true;
        }
    }
    if (placed.empty())
        throw GenerationError("sample_scene: could not place a single object; frustum or "
                              "lateral range too small for the library objects");
    return placed;
}

// Viewpoint v=0 is the scene anchor; others orbit the object-cloud centroid
// at the anchor distance with a small roll jitter.
inline Pose sample_viewpoint(const std::vector<PlacedObject>& layout, int view,
                             std::mt19937_64& rng) {
    if (view == 0) return Pose::identity();
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : layout) centroid += p.pose.t;
    centroid /= double(layout.size());
    double radius = centroid.norm();

    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d dir(n(rng), n(rng), n(rng));
    while (dir.norm() < 1e-9) dir = {n(rng), n(rng), n(rng)};
    dir.normalize();
    Eigen::Vector3d pos = centroid + radius * dir;

    Eigen::Vector3d fwd = (centroid - pos).normalized();
    Eigen::Vector3d hint(0, 1, 0);
    if (std::abs(fwd.dot(hint)) > 0.99) hint = {1, 0, 0};
    Eigen::Vector3d x_axis = hint.cross(fwd).normalized();
    Eigen::Vector3d y_axis = fwd.cross(x_axis);

    std::uniform_real_distribution<double> roll_dist(-0.3, 0.3);
    Eigen::Matrix3d roll = rot_z(roll_dist(rng));

    Pose w2c;
    Eigen::Matrix3d R;
    R.row(0) = x_axis.transpose();
    R.row(1) = y_axis.transpose();
    R.row(2) = fwd.transpose();
    w2c.R = roll * R;
    w2c.t = -(w2c.R * pos);
    return w2c;
}

// View-invariant flat shading: per-region gray level modulated by a hash of
// the quantized object-frame coordinate, so both views see the same value.
inline std::uint8_t shade_pixel(int obj_id, std::uint16_t region, const Eigen::Vector3d& xyz,
                                bool textured) {
    int base = 70 + (region * 47 + obj_id * 31) % 130;
    if (!textured) return static_cast<std::uint8_t>(base);
    auto q = [](double v) { return static_cast<std::int64_t>(std::floor(v / 4.0)); };
    std::uint64_t h = mix_seed(static_cast<std::uint64_t>(obj_id), q(xyz.x()) + (1LL << 32),
                               q(xyz.y()) + (1LL << 32), q(xyz.z()) + (1LL << 32));
    double noise = double(h % 1000) / 999.0;
    double g = base * (0.70 + 0.45 * noise);
    return static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0));
}

inline ImageU8 shade_frame(const DenseFeatureMaps& frame, const std::vector<PlacedObject>& layout,
                           bool textured) {
    ImageU8 rgb(frame.mask.width, frame.mask.height, 3, 20);
    for (int y = 0; y < frame.mask.height; ++y)
        for (int x = 0; x < frame.mask.width; ++x) {
            if (!frame.mask.at(x, y)) continue;
            std::uint16_t idx = frame.obj_index.at(x, y);
            int obj_id = idx < layout.size() ? layout[idx].obj_id : 0;
            Eigen::Vector3d xyz(frame.xyz.at(x, y, 0), frame.xyz.at(x, y, 1),
                                frame.xyz.at(x, y, 2));
            std::uint8_t g = shade_pixel(obj_id, frame.region.at(x, y), xyz, textured);
            rgb.at(x, y, 0) = rgb.at(x, y, 1) = rgb.at(x, y, 2) = g;
        }
    return rgb;
}

struct GenerationStats {
    int scenes = 0;
    int frames = 0;  // stereo frames (viewpoints)
    int labels_kept = 0;
    int labels_removed = 0;
    double mean_visibility = 0.0;  // over kept labels, both views averaged

    nlohmann::ordered_json to_json() const {
        return {{"scenes", scenes},
                {"frames", frames},
                {"labels_kept", labels_kept},
                {"labels_removed", labels_removed},
                {"mean_visibility", mean_visibility}};
    }
};

// Renders one stereo frame, fills annotations with visibility and boxes,
// and returns the per-view feature maps (with GT disparity channels).
struct FrameRender {
    raster::SceneRender left;
    raster::SceneRender right;
    std::vector<bop::FrameAnnotation> annotations;  // unfiltered
};

inline FrameRender render_frame(const std::vector<PlacedObject>& layout, const Pose& w2c_left,
                                const StereoRig& rig) {
    FrameRender out;
    std::vector<raster::SceneObject> scene_l, scene_r;
    for (const auto& p : layout) {
        const LibraryObject& obj = library_object(p.obj_id);
        Pose pose_l = w2c_left * p.pose;
        scene_l.push_back({&obj.mesh, pose_l});
        scene_r.push_back({&obj.mesh, rig.extrinsic_l2r * pose_l});
    }
    out.left = raster::render_scene(scene_l, rig.left);
    out.right = raster::render_scene(scene_r, rig.right);

    // GT disparity per view from its own depth
    for (auto* view : {&out.left, &out.right}) {
        auto disp = stereo::disparity_from_depth(view->frame.depth, rig, 0.0, 0);
        view->frame.disparity = std::move(disp.values);
        view->frame.disparity_valid = std::move(disp.validity);
    }

    for (size_t i = 0; i < layout.size(); ++i) {
        bop::FrameAnnotation ann;
        ann.obj_id = layout[i].obj_id;
        ann.pose = scene_l[i].pose;
        ann.visib_fract_left = out.left.visibility[i];
        ann.visib_fract_right = out.right.visibility[i];
        ann.bbox_left = out.left.visible_bbox[i];
        ann.bbox_right = out.right.visible_bbox[i];
        out.annotations.push_back(ann);
    }
    return out;
}

// Rewrites the obj_index channel so entries match the order of the KEPT
// annotation list; dropped objects become background in the label maps but
// still occlude (their pixels are simply unlabeled).
inline void relabel_obj_index(DenseFeatureMaps& frame, const std::vector<int>& kept_of_layout) {
    for (auto& v : frame.obj_index.data) {
        if (v == kBackgroundId) continue;
        int mapped = kept_of_layout[v];
        v = mapped < 0 ? kBackgroundId : static_cast<std::uint16_t>(mapped);
    }
}

inline GenerationStats generate_dataset(const GenConfig& config,
                                        const std::filesystem::path& root, int workers = 1) {
    namespace fs = std::filesystem;
    config.validate();
    fs::create_directories(root);
    const StereoRig rig = config.rig();

    std::vector<GenerationStats> per_scene(config.n_scenes);
    double visib_sum_total = 0.0;

    parallel_for(config.n_scenes, workers, [&](int scene_id) {
        auto layout = sample_scene(config, static_cast<std::uint64_t>(scene_id));
        auto view_rng = make_rng(config.seed, scene_id, 0x71e3);

        bop::StereoScene scene;
        scene.scene_id = scene_id;
        scene.rig = rig;

        // stage into a marked partial tree, rename when complete
        fs::path final_dir = bop::scene_dir(root, scene_id);
        fs::path stage_base = root / (".stage_" + bop::zero_pad(scene_id));
        fs::remove_all(stage_base);

        GenerationStats& stats = per_scene[scene_id];
        double visib_sum = 0.0;

        std::vector<std::pair<int, FrameRender>> renders;
        for (int view = 0; view < config.views_per_scene; ++view) {
            Pose w2c = sample_viewpoint(layout, view, view_rng);
            FrameRender fr = render_frame(layout, w2c, rig);

            bop::FrameRecord rec;
            rec.frame_id = view;
            rec.annotations = bop::filter_labels(fr.annotations, config.min_visib);
            stats.labels_kept += static_cast<int>(rec.annotations.size());
            stats.labels_removed +=
                static_cast<int>(fr.annotations.size() - rec.annotations.size());
            for (const auto& a : rec.annotations)
                visib_sum += 0.5 * (a.visib_fract_left + a.visib_fract_right);

            // map layout indices to kept-annotation indices
            std::vector<int> kept_of_layout(layout.size(), -1);
            int next = 0;
            for (size_t i = 0; i < fr.annotations.size(); ++i) {
                bool kept = fr.annotations[i].visib_fract_left >= config.min_visib &&
                            fr.annotations[i].visib_fract_right >= config.min_visib;
                if (kept) kept_of_layout[i] = next++;
            }
            relabel_obj_index(fr.left.frame, kept_of_layout);
            relabel_obj_index(fr.right.frame, kept_of_layout);

            scene.frames.push_back(rec);
            ++stats.frames;
            renders.emplace_back(view, std::move(fr));
        }

        // write the staged scene tree, images included, then publish
        bop::write_scene(scene, stage_base);
        for (auto& [view, fr] : renders) {
            for (int side = 0; side < 2; ++side) {
                raster::SceneRender& sr = side == 0 ? fr.left : fr.right;
                bop::View v = side == 0 ? bop::View::Left : bop::View::Right;
                ImageU8 rgb = shade_frame(sr.frame, layout, config.textured);
                write_png_rgb8(bop::rgb_path(stage_base, scene_id, v, view), rgb);
                write_png_gray16(bop::depth_path(stage_base, scene_id, v, view),
                                 bop::quantize_depth(sr.frame.depth, scene.depth_scale));
                write_features(sr.frame, bop::features_path(stage_base, scene_id, v, view));
            }
        }
        fs::remove_all(final_dir);
        fs::rename(bop::scene_dir(stage_base, scene_id), final_dir);
        fs::remove_all(stage_base);

        stats.scenes = 1;
        stats.mean_visibility = visib_sum;  // summed; reduced below
    });

    GenerationStats total;
    for (const auto& s : per_scene) {
        total.scenes += s.scenes;
        total.frames += s.frames;
        total.labels_kept += s.labels_kept;
        total.labels_removed += s.labels_removed;
        visib_sum_total += s.mean_visibility;
    }
    total.mean_visibility = total.labels_kept > 0 ? visib_sum_total / total.labels_kept : 0.0;

    nlohmann::ordered_json manifest = {
        {"stats", total.to_json()},
        {"seed", config.seed},
        {"config",
         {{"object_ids", config.object_ids},
          {"min_objects", config.min_objects},
          {"max_objects", config.max_objects},
          {"views_per_scene", config.views_per_scene},
          {"n_scenes", config.n_scenes},
          {"depth_min_mm", config.depth_min_mm},
          {"depth_max_mm", config.depth_max_mm},
          {"lateral_mm", config.lateral_mm},
          {"baseline_mm", config.baseline_mm},
          {"min_visib", config.min_visib},
          {"textured", config.textured},
          {"cam_K", bop::detail::intrinsics_to_json(config.camera)},
          {"width", config.camera.width},
          {"height", config.camera.height}}},
        {"notes",
         "viewpoints orbit the object centroid and depth/lateral defaults are placeholders; "
         "no physics, collision-free bounding-sphere placement"}};
    bop::detail::write_json_atomic(manifest, root / "manifest.json");
    return total;
}

// Recompute features, visibility fractions and boxes for an existing
// dataset from its stored poses; scene_gt.json is rewritten in place.
inline void annotate_dataset(const std::filesystem::path& root, int workers = 1) {
    namespace fs = std::filesystem;
    auto scene_ids = bop::list_scene_ids(root);
    if (scene_ids.empty()) throw ParseError("annotate: no scenes under " + root.string());

    parallel_for(static_cast<int>(scene_ids.size()), workers, [&](int si) {
        int scene_id = scene_ids[si];
        bop::StereoScene scene = bop::read_scene(root, scene_id);

        for (auto& rec : scene.frames) {
            std::vector<raster::SceneObject> scene_l, scene_r;
            for (const auto& ann : rec.annotations) {
                const LibraryObject& obj = library_object(ann.obj_id);
                scene_l.push_back({&obj.mesh, ann.pose});
                scene_r.push_back({&obj.mesh, scene.rig.extrinsic_l2r * ann.pose});
            }
            if (scene_l.empty()) continue;
            raster::SceneRender left = raster::render_scene(scene_l, scene.rig.left);
            raster::SceneRender right = raster::render_scene(scene_r, scene.rig.right);
            for (auto* view : {&left, &right}) {
                auto disp = stereo::disparity_from_depth(view->frame.depth, scene.rig, 0.0, 0);
                view->frame.disparity = std::move(disp.values);
                view->frame.disparity_valid = std::move(disp.validity);
            }
            for (size_t i = 0; i < rec.annotations.size(); ++i) {
                rec.annotations[i].visib_fract_left = left.visibility[i];
                rec.annotations[i].visib_fract_right = right.visibility[i];
                rec.annotations[i].bbox_left = left.visible_bbox[i];
                rec.annotations[i].bbox_right = right.visible_bbox[i];
            }
            write_features(left.frame, bop::features_path(root, scene_id, bop::View::Left,
                                                          rec.frame_id));
            write_features(right.frame, bop::features_path(root, scene_id, bop::View::Right,
                                                           rec.frame_id));
        }
        bop::write_scene(scene, root);
    });
}

// Annotation throughput fixture: one fixed 8-object scene rendered and
// archived repeatedly. Returns frames per second.
inline double bench_annotation(int n_frames, int workers,
                               const std::filesystem::path& scratch) {
    namespace fs = std::filesystem;
    GenConfig config;
    config.min_objects = config.max_objects = 8;
    config.seed = 7;
    auto layout = sample_scene(config, 0);
    while (layout.size() < 8) {
        config.seed += 1;
        layout = sample_scene(config, 0);
    }
    const StereoRig rig = config.rig();
    fs::create_directories(scratch);

    auto rng = make_rng(config.seed, 0x8e7c);
    std::vector<Pose> views(n_frames);
    for (int i = 0; i < n_frames; ++i) views[i] = sample_viewpoint(layout, i, rng);

    auto start = std::chrono::steady_clock::now();
    parallel_for(n_frames, workers, [&](int i) {
        FrameRender fr = render_frame(layout, views[i], rig);
        write_features(fr.left.frame, scratch / ("bench_l_" + std::to_string(i) + ".spkf"));
        write_features(fr.right.frame, scratch / ("bench_r_" + std::to_string(i) + ".spkf"));
    });
    auto stop = std::chrono::steady_clock::now();
    double seconds = std::chrono::duration<double>(stop - start).count();
    return n_frames / std::max(seconds, 1e-9);
}

}  // namespace stereopose::gen
