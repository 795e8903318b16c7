// stereopose: stereo 6D object pose estimation pipeline.
//
// Subcommands: generate, annotate, estimate, evaluate, report, bench.
// Exit codes: 0 success, 1 validation/configuration error, 2 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "stereopose/bopstore.hpp"
#include "stereopose/evalkit.hpp"
#include "stereopose/feature_archive.hpp"
#include "stereopose/noise.hpp"
#include "stereopose/posesolve.hpp"
#include "stereopose/scenegen.hpp"
#include "stereopose/stereomatch.hpp"
#include "stereopose/svg_plot.hpp"
#include "stereopose/threadpool.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace stereopose;

namespace {

struct EstimateOptions {
    std::string dataset;
    std::string out = "estimates.json";
    std::string strategies = "MONO_LEFT,LATE_POSE_COMBINE,MID_JOINT_PNP,DISPARITY_3D3D,"
                             "EARLY_JOINT_PNP_PLUS_DEPTH";
    std::string disparity_source = "gt";  // gt | match
    noise::NoiseSpec noise;
    solve::SolverParams solver;
    int max_corrs = 2000;
    int workers = default_worker_count();
};

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

ordered_json pose_to_json(const Pose& p) {
    return {{"R", bop::detail::mat3_to_json(p.R)}, {"t", bop::detail::vec3_to_json(p.t)}};
}

Pose pose_from_json(const ordered_json& j) {
    Pose p;
    p.R = bop::detail::mat3_from_json(j.at("R"), "pose");
    p.t = bop::detail::vec3_from_json(j.at("t"), "pose");
    return p;
}

std::map<int, eval::ObjectMeta> library_meta() {
    std::map<int, eval::ObjectMeta> meta;
    for (const auto& obj : gen::object_library())
        meta[obj.obj_id] = eval::make_object_meta(obj.obj_id, obj.mesh, obj.symmetric);
    return meta;
}

// ---------------------------------------------------------------------------

int run_generate(const gen::GenConfig& config, const std::string& out, int workers) {
    gen::GenerationStats stats = gen::generate_dataset(config, out, workers);
    std::cout << "generated " << stats.scenes << " scenes, " << stats.frames
              << " stereo frames under " << out << "\n"
              << "labels kept " << stats.labels_kept << ", removed " << stats.labels_removed
              << " (visibility rule), mean visibility "
              << stats.mean_visibility << "\n";
    return 0;
}

int run_annotate(const std::string& dataset, int workers) {
    gen::annotate_dataset(dataset, workers);
    std::cout << "re-annotated dataset " << dataset << "\n";
    return 0;
}

int run_estimate(const EstimateOptions& opt) {
    std::vector<solve::FusionStrategy> strategies;
    for (const auto& name : split_csv(opt.strategies))
        strategies.push_back(solve::strategy_from_string(name));
    if (strategies.empty()) throw ConfigError("estimate: no strategies selected");
    if (opt.disparity_source != "gt" && opt.disparity_source != "match")
        throw ConfigError("estimate: --disparity-source must be gt or match");

    auto scene_ids = bop::list_scene_ids(opt.dataset);
    if (scene_ids.empty()) throw ConfigError("estimate: no scenes in " + opt.dataset);

    struct FrameTask {
        int scene_id, frame_id;
        bop::StereoScene* scene;
        bop::FrameRecord* record;
    };
    std::vector<bop::StereoScene> scenes;
    scenes.reserve(scene_ids.size());
    for (int id : scene_ids) scenes.push_back(bop::read_scene(opt.dataset, id));

    std::vector<FrameTask> tasks;
    for (auto& scene : scenes)
        for (auto& rec : scene.frames)
            tasks.push_back({scene.scene_id, rec.frame_id, &scene, &rec});

    std::vector<ordered_json> frame_results(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), opt.workers, [&](int ti) {
        const FrameTask& task = tasks[ti];
        const StereoRig& rig = task.scene->rig;

        auto maps_left = read_features(
            bop::features_path(opt.dataset, task.scene_id, bop::View::Left, task.frame_id));
        auto maps_right = read_features(
            bop::features_path(opt.dataset, task.scene_id, bop::View::Right, task.frame_id));

        // optional matched disparity from the rendered images
        stereo::DisparityMap matched;
        if (opt.disparity_source == "match") {
            auto left_rgb = read_png_rgb8(
                bop::rgb_path(opt.dataset, task.scene_id, bop::View::Left, task.frame_id));
            auto right_rgb = read_png_rgb8(
                bop::rgb_path(opt.dataset, task.scene_id, bop::View::Right, task.frame_id));
            stereo::BlockMatchParams bm;
            bm.max_disparity = std::min(160, rig.left.width - bm.window - 1);
            matched = stereo::block_match(to_gray(left_rgb), to_gray(right_rgb), bm);
        }

        ordered_json objects = ordered_json::array();
        for (size_t ann_idx = 0; ann_idx < task.record->annotations.size(); ++ann_idx) {
            const auto& ann = task.record->annotations[ann_idx];
            solve::FrameInputs inputs;
            inputs.rig = rig;
            inputs.left = solve::correspondences_from_maps(
                maps_left, static_cast<std::uint16_t>(ann_idx), solve::ViewTag::Left,
                opt.max_corrs);
            inputs.right = solve::correspondences_from_maps(
                maps_right, static_cast<std::uint16_t>(ann_idx), solve::ViewTag::Right,
                opt.max_corrs);

            if (opt.disparity_source == "match") {
                inputs.corr_disparity = solve::sample_disparity(inputs.left, matched);
            } else {
                stereo::DisparityMap gt_disp;
                gt_disp.values = maps_left.disparity;
                gt_disp.validity = maps_left.disparity_valid;
                inputs.corr_disparity = solve::sample_disparity(inputs.left, gt_disp);
            }

            // one corruption pass shared by every strategy, seeded per
            // (scene, frame, object)
            auto rng = make_rng(opt.solver.seed, task.scene_id, task.frame_id, ann_idx);
            BoundingBox unified = unify_bboxes(ann.bbox_left, ann.bbox_right);
            noise::corrupt_correspondences(inputs.left, opt.noise, unified, rig.left, rng);
            noise::corrupt_correspondences(inputs.right, opt.noise, unified, rig.right, rng);
            noise::corrupt_disparities(inputs.corr_disparity, opt.noise.disparity_sigma_px, rng);

            ordered_json estimates = ordered_json::object();
            for (solve::FusionStrategy strategy : strategies) {
                solve::SolverParams params = opt.solver;
                params.seed = mix_seed(opt.solver.seed, task.scene_id, task.frame_id, ann_idx,
                                       static_cast<int>(strategy));
                try {
                    solve::PoseEstimate est = solve::estimate(strategy, inputs, params);
                    estimates[solve::to_string(strategy)] = {
                        {"pose", pose_to_json(est.pose)},
                        {"inlier_count", est.inlier_count},
                        {"inlier_ratio", est.inlier_ratio},
                        {"mean_reproj_px", est.mean_reproj_px},
                        {"mean_residual_mm", est.mean_residual_mm},
                        {"converged", est.converged},
                        {"used_fallback", est.used_fallback}};
                } catch (const Error& e) {
                    estimates[solve::to_string(strategy)] = {{"error", e.what()}};
                }
            }
            objects.push_back({{"obj_id", ann.obj_id},
                               {"ann_index", ann_idx},
                               {"gt_pose", pose_to_json(ann.pose)},
                               {"estimates", std::move(estimates)}});
        }
        frame_results[ti] = {{"scene", task.scene_id},
                             {"frame", task.frame_id},
                             {"objects", std::move(objects)}};
    });

    ordered_json out = {
        {"dataset", opt.dataset},
        {"seed", opt.solver.seed},
        {"max_corrs", opt.max_corrs},
        {"disparity_source", opt.disparity_source},
        {"noise",
         {{"pixel_sigma_px", opt.noise.pixel_sigma_px},
          {"coord_sigma_mm", opt.noise.coord_sigma_mm},
          {"outlier_fraction", opt.noise.outlier_fraction},
          {"disparity_sigma_px", opt.noise.disparity_sigma_px}}},
        {"solver",
         {{"ransac_threshold_px", opt.solver.ransac_threshold_px},
          {"ransac_confidence", opt.solver.ransac_confidence},
          {"max_iterations", opt.solver.max_iterations},
          {"refine_iterations", opt.solver.refine_iterations},
          {"inlier_threshold_mm", opt.solver.inlier_threshold_mm},
          {"depth_residual_weight", opt.solver.depth_residual_weight}}},
        {"strategies", split_csv(opt.strategies)},
        {"frames", frame_results}};
    bop::detail::write_json_atomic(out, opt.out);
    std::cout << "estimated " << tasks.size() << " frames with " << strategies.size()
              << " strategies -> " << opt.out << "\n";
    return 0;
}

int run_evaluate(const std::string& dataset, const std::string& estimates_path,
                 const std::string& out_prefix, double tau) {
    ordered_json est_j = bop::detail::load_json(estimates_path);
    if (est_j.value("dataset", std::string()) != dataset)
        std::cerr << "note: estimates were produced from '"
                  << est_j.value("dataset", std::string()) << "', evaluating against '" << dataset
                  << "'\n";

    auto meta = library_meta();
    auto scene_ids = bop::list_scene_ids(dataset);
    std::map<std::pair<int, int>, const bop::FrameRecord*> gt_index;
    std::vector<bop::StereoScene> scenes;
    scenes.reserve(scene_ids.size());
    for (int id : scene_ids) scenes.push_back(bop::read_scene(dataset, id));
    for (const auto& scene : scenes)
        for (const auto& rec : scene.frames) gt_index[{scene.scene_id, rec.frame_id}] = &rec;

    std::vector<std::string> strategies;
    for (const auto& s : est_j.at("strategies")) strategies.push_back(s.get<std::string>());

    struct StrategyAccum {
        std::vector<std::pair<int, double>> results;
        std::vector<double> abs_dz;
        double add_sum = 0.0;
        int n = 0;
        int failed = 0;
    };
    std::map<std::string, StrategyAccum> accum;

    for (const auto& frame : est_j.at("frames")) {
        int scene_id = frame.at("scene").get<int>();
        int frame_id = frame.at("frame").get<int>();
        auto it = gt_index.find({scene_id, frame_id});
        if (it == gt_index.end())
            throw ConfigError("evaluate: estimates reference scene " + std::to_string(scene_id) +
                              " frame " + std::to_string(frame_id) +
                              " which the dataset does not contain");
        const bop::FrameRecord& rec = *it->second;

        for (const auto& obj : frame.at("objects")) {
            size_t ann_idx = obj.at("ann_index").get<size_t>();
            int obj_id = obj.at("obj_id").get<int>();
            if (ann_idx >= rec.annotations.size() ||
                rec.annotations[ann_idx].obj_id != obj_id)
                throw ConfigError("evaluate: estimates do not match dataset annotations at scene " +
                                  std::to_string(scene_id) + " frame " +
                                  std::to_string(frame_id));
            const Pose& gt = rec.annotations[ann_idx].pose;
            auto meta_it = meta.find(obj_id);
            if (meta_it == meta.end())
                throw ConfigError("evaluate: unknown obj_id " + std::to_string(obj_id));

            for (const auto& name : strategies) {
                StrategyAccum& acc = accum[name];
                const auto& est = obj.at("estimates").at(name);
                if (est.contains("error")) {
                    ++acc.failed;
                    // a failed solve counts as a miss at any threshold
                    acc.results.push_back({obj_id, std::numeric_limits<double>::infinity()});
                    continue;
                }
                Pose pose = pose_from_json(est.at("pose"));
                double err = eval::pose_error(gt, pose, meta_it->second);
                acc.results.push_back({obj_id, err});
                acc.abs_dz.push_back(std::abs(pose.t.z() - gt.t.z()));
                acc.add_sum += eval::add_error(gt, pose, meta_it->second.model_points);
                ++acc.n;
            }
        }
    }

    std::vector<eval::EvalReport> reports;
    ordered_json strategies_j = ordered_json::object();
    for (const auto& name : strategies) {
        StrategyAccum& acc = accum[name];
        eval::EvalReport report = eval::recall_table(acc.results, meta, tau);
        report.strategy = name;
        reports.push_back(report);

        double median_dz = 0.0;
        if (!acc.abs_dz.empty()) {
            std::sort(acc.abs_dz.begin(), acc.abs_dz.end());
            median_dz = acc.abs_dz[acc.abs_dz.size() / 2];
        }
        ordered_json per_object = ordered_json::object();
        for (const auto& o : report.per_object)
            per_object[std::to_string(o.obj_id)] = o.recall;
        strategies_j[name] = {{"overall_recall", report.overall},
                              {"per_object_recall", per_object},
                              {"median_abs_dz_mm", median_dz},
                              {"mean_add_mm", acc.n > 0 ? acc.add_sum / acc.n : 0.0},
                              {"failed_solves", acc.failed},
                              {"poses", acc.n}};
    }

    ordered_json report_j = {{"dataset", dataset},
                             {"estimates", estimates_path},
                             {"tau", tau},
                             {"noise", est_j.value("noise", ordered_json::object())},
                             {"strategies", strategies_j}};
    bop::detail::write_json_atomic(report_j, out_prefix + ".json");

    std::ofstream csv(out_prefix + ".csv");
    csv << eval::render_csv(reports, meta);
    std::ofstream txt(out_prefix + ".txt");
    std::string table = eval::render_text_table(reports, meta);
    txt << table;
    std::cout << table;
    std::cout << "evaluation written to " << out_prefix << ".{json,csv,txt}\n";
    return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_prefix) {
    if (inputs.empty()) throw ConfigError("report: no evaluation reports given");

    struct Row {
        double noise_px = 0.0;
        std::string strategy;
        double recall = 0.0;
        double median_dz = 0.0;
        double mean_add = 0.0;
    };
    std::vector<Row> rows;
    for (const auto& path : inputs) {
        ordered_json j = bop::detail::load_json(path);
        double noise_px = 0.0;
        if (j.contains("noise")) {
            noise_px = j["noise"].value("pixel_sigma_px", 0.0);
            if (noise_px == 0.0) noise_px = j["noise"].value("disparity_sigma_px", 0.0);
        }
        for (const auto& [name, s] : j.at("strategies").items())
            rows.push_back({noise_px, name, s.value("overall_recall", 0.0),
                            s.value("median_abs_dz_mm", 0.0), s.value("mean_add_mm", 0.0)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.strategy, a.noise_px) < std::tie(b.strategy, b.noise_px);
    });

    std::ofstream csv(out_prefix + ".csv");
    csv << "noise_px,strategy,overall_recall,median_abs_dz_mm,mean_add_mm\n";
    for (const auto& r : rows)
        csv << r.noise_px << "," << r.strategy << "," << r.recall << "," << r.median_dz << ","
            << r.mean_add << "\n";

    std::map<std::string, svg::Series> recall_series, dz_series;
    for (const auto& r : rows) {
        recall_series[r.strategy].label = r.strategy;
        recall_series[r.strategy].points.push_back({r.noise_px, r.recall});
        dz_series[r.strategy].label = r.strategy;
        dz_series[r.strategy].points.push_back({r.noise_px, r.median_dz});
    }
    auto values_of = [](const std::map<std::string, svg::Series>& m) {
        std::vector<svg::Series> v;
        for (const auto& [k, s] : m) v.push_back(s);
        return v;
    };
    std::ofstream(out_prefix + "_recall.svg")
        << svg::line_chart("ADD-0.1d recall vs noise", "noise sigma (px)", "recall (%)",
                           values_of(recall_series));
    std::ofstream(out_prefix + "_dz.svg")
        << svg::line_chart("median |dz| vs noise", "noise sigma (px)", "median |dz| (mm)",
                           values_of(dz_series));
    std::cout << "report written to " << out_prefix << ".csv and " << out_prefix
              << "_{recall,dz}.svg\n";
    return 0;
}

int run_bench(int frames, int workers, const std::string& out, const std::string& baseline) {
    fs::path scratch = fs::temp_directory_path() / "stereopose_bench";
    fs::remove_all(scratch);
    double fps = gen::bench_annotation(frames, workers, scratch);
    fs::remove_all(scratch);

    ordered_json j = {{"frames", frames}, {"workers", workers}, {"fps", fps}};
    if (!out.empty()) bop::detail::write_json_atomic(j, out);
    std::cout << "annotation throughput: " << fps << " frames/s (" << frames << " frames, "
              << workers << " workers)\n";

    if (!baseline.empty()) {
        if (fs::exists(baseline)) {
            ordered_json base = bop::detail::load_json(baseline);
            double base_fps = base.value("fps", 0.0);
            if (base_fps > 0 && fps < 0.5 * base_fps) {
                std::cerr << "bench: throughput regressed below 50% of baseline (" << fps
                          << " < 0.5 * " << base_fps << ")\n";
                return 2;
            }
        } else {
            bop::detail::write_json_atomic(j, baseline);
            std::cout << "recorded new baseline at " << baseline << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stereo 6D object pose estimation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);
    // let `subcommand --config file` reach the app-level config option
    app.callback([] {});
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    // generate ---------------------------------------------------------------
    auto* cmd_gen = app.add_subcommand("generate", "render a synthetic stereo dataset");
    gen::GenConfig gcfg;
    std::string gen_out = "dataset";
    int gen_workers = default_worker_count();
    double gen_focal = 600.0;
    int gen_width = 640, gen_height = 480;
    cmd_gen->add_option("--out", gen_out, "dataset root directory");
    cmd_gen->add_option("--seed", gcfg.seed, "master seed");
    cmd_gen->add_option("--scenes", gcfg.n_scenes, "number of scenes");
    cmd_gen->add_option("--views", gcfg.views_per_scene, "viewpoints per scene");
    cmd_gen->add_option("--min-objects", gcfg.min_objects, "minimum objects per scene");
    cmd_gen->add_option("--max-objects", gcfg.max_objects, "maximum objects per scene (<= 15)");
    cmd_gen->add_option("--objects", gcfg.object_ids, "library object ids to draw from");
    cmd_gen->add_option("--depth-min", gcfg.depth_min_mm, "placement depth range start (mm)");
    cmd_gen->add_option("--depth-max", gcfg.depth_max_mm, "placement depth range end (mm)");
    cmd_gen->add_option("--lateral", gcfg.lateral_mm, "placement half range in x/y (mm)");
    cmd_gen->add_option("--baseline", gcfg.baseline_mm, "stereo baseline (mm)");
    cmd_gen->add_option("--focal", gen_focal, "focal length (px)");
    cmd_gen->add_option("--width", gen_width, "image width (px)");
    cmd_gen->add_option("--height", gen_height, "image height (px)");
    cmd_gen->add_option("--min-visib", gcfg.min_visib, "either-view visibility threshold");
    cmd_gen->add_flag("--flat,!--textured", [&](std::int64_t n) { gcfg.textured = n == 0; },
                      "disable procedural texture");
    cmd_gen->add_option("--workers", gen_workers, "parallel scene workers");

    // annotate ---------------------------------------------------------------
    auto* cmd_ann = app.add_subcommand("annotate", "recompute features and visibility");
    std::string ann_dataset;
    int ann_workers = default_worker_count();
    cmd_ann->add_option("--dataset", ann_dataset, "dataset root")->required();
    cmd_ann->add_option("--workers", ann_workers, "parallel scene workers");

    // estimate ---------------------------------------------------------------
    auto* cmd_est = app.add_subcommand("estimate", "solve poses over a dataset");
    EstimateOptions eopt;
    cmd_est->add_option("--dataset", eopt.dataset, "dataset root")->required();
    cmd_est->add_option("--out", eopt.out, "estimates JSON path");
    cmd_est->add_option("--strategy", eopt.strategies, "comma list of fusion strategies");
    cmd_est->add_option("--disparity-source", eopt.disparity_source,
                        "gt (stored channel) or match (block matching)");
    cmd_est->add_option("--noise-px", eopt.noise.pixel_sigma_px, "pixel noise sigma");
    cmd_est->add_option("--noise-mm", eopt.noise.coord_sigma_mm, "object coordinate noise sigma");
    cmd_est->add_option("--outlier-frac", eopt.noise.outlier_fraction, "outlier fraction");
    cmd_est->add_option("--noise-disp", eopt.noise.disparity_sigma_px, "disparity noise sigma");
    cmd_est->add_option("--seed", eopt.solver.seed, "noise/solver seed");
    cmd_est->add_option("--max-corrs", eopt.max_corrs, "correspondence cap per view");
    cmd_est->add_option("--ransac-threshold", eopt.solver.ransac_threshold_px,
                        "inlier threshold (px)");
    cmd_est->add_option("--ransac-confidence", eopt.solver.ransac_confidence,
                        "RANSAC confidence");
    cmd_est->add_option("--max-iterations", eopt.solver.max_iterations, "RANSAC iteration cap");
    cmd_est->add_option("--refine-iterations", eopt.solver.refine_iterations,
                        "Gauss-Newton iterations");
    cmd_est->add_option("--inlier-mm", eopt.solver.inlier_threshold_mm,
                        "3D inlier threshold (mm)");
    cmd_est->add_option("--depth-weight", eopt.solver.depth_residual_weight,
                        "px of cost per mm of depth residual");
    cmd_est->add_option("--workers", eopt.workers, "parallel frame workers");

    // evaluate ---------------------------------------------------------------
    auto* cmd_eval = app.add_subcommand("evaluate", "score estimates with ADD(-S) recall");
    std::string eval_dataset, eval_estimates = "estimates.json", eval_out = "report";
    double eval_tau = 0.1;
    cmd_eval->add_option("--dataset", eval_dataset, "dataset root")->required();
    cmd_eval->add_option("--estimates", eval_estimates, "estimates JSON path");
    cmd_eval->add_option("--out", eval_out, "report path prefix");
    cmd_eval->add_option("--tau", eval_tau, "ADD threshold as a diameter fraction");

    // report -----------------------------------------------------------------
    auto* cmd_rep = app.add_subcommand("report", "merge evaluation reports into plots");
    std::vector<std::string> rep_inputs;
    std::string rep_out = "comparison";
    cmd_rep->add_option("inputs", rep_inputs, "evaluation report JSON files")->required();
    cmd_rep->add_option("--out", rep_out, "output path prefix");

    // bench ------------------------------------------------------------------
    auto* cmd_bench = app.add_subcommand("bench", "annotation throughput benchmark");
    int bench_frames = 24, bench_workers = default_worker_count();
    std::string bench_out, bench_baseline;
    cmd_bench->add_option("--frames", bench_frames, "frames to annotate");
    cmd_bench->add_option("--workers", bench_workers, "parallel frame workers");
    cmd_bench->add_option("--out", bench_out, "write results JSON here");
    cmd_bench->add_option("--baseline", bench_baseline,
                          "baseline JSON; fails below 50% of its fps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (cmd_gen->parsed()) {
            gcfg.camera = {gen_focal, gen_focal, gen_width / 2.0, gen_height / 2.0, gen_width,
                           gen_height};
            return run_generate(gcfg, gen_out, gen_workers);
        }
        if (cmd_ann->parsed()) return run_annotate(ann_dataset, ann_workers);
        if (cmd_est->parsed()) return run_estimate(eopt);
        if (cmd_eval->parsed())
            return run_evaluate(eval_dataset, eval_estimates, eval_out, eval_tau);
        if (cmd_rep->parsed()) return run_report(rep_inputs, rep_out);
        if (cmd_bench->parsed())
            return run_bench(bench_frames, bench_workers, bench_out, bench_baseline);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
