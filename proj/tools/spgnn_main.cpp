#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spgnn/checkpoint.hpp"
#include "spgnn/config.hpp"
#include "spgnn/detector.hpp"
#include "spgnn/gradient_battery.hpp"
#include "spgnn/image.hpp"
#include "spgnn/model.hpp"
#include "spgnn/superpixel.hpp"
#include "spgnn/synth.hpp"
#include "spgnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace spgnn;

namespace {

// Flags shared by the commands that build a model/config.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs, steps, warmup, k, batch, m_target, eval_every;
    std::optional<double> lr, width_scale, early_ap50;
    std::optional<std::string> fusion;
    std::optional<bool> sprpn;
    std::string data_dir, out_dir;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool training) {
    cmd->add_option("--config", f.config_path, "JSON config file (defaults when omitted)");
    cmd->add_option("--seed", f.seed, "override seed");
    cmd->add_option("--k", f.k, "neighbors per node");
    cmd->add_option("--fusion", f.fusion, "add | concat");
    cmd->add_option("--sprpn", f.sprpn, "superpixel branch on/off");
    cmd->add_option("--width-scale", f.width_scale, "width multiplier");
    cmd->add_option("--m-target", f.m_target, "superpixel count target");
    if (training) {
        cmd->add_option("--epochs", f.epochs, "training epochs");
        cmd->add_option("--steps", f.steps, "optimizer-step cap (0 = epochs only)");
        cmd->add_option("--warmup", f.warmup, "linear warmup steps");
        cmd->add_option("--lr", f.lr, "learning rate (0 derives the default)");
        cmd->add_option("--batch", f.batch, "images per step");
        cmd->add_option("--early-ap50", f.early_ap50, "stop at this train AP50 (0 = off)");
        cmd->add_option("--eval-every", f.eval_every, "steps between early-stop evaluations");
        cmd->add_option("--data", f.data_dir, "dataset directory");
        cmd->add_option("--out", f.out_dir, "run output directory");
    }
}

// Loads, overrides, then round-trips once more so the environment seed and
// validation apply to the final values.
RunConfig resolve_config(const ConfigFlags& f) {
    RunConfig cfg = f.config_path.empty() ? config_from_json_text("{}", "<defaults>")
                                          : config_load(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.k) cfg.k = *f.k;
    if (f.fusion) cfg.fusion = parse_fuse_mode(*f.fusion);
    if (f.sprpn) cfg.sprpn = *f.sprpn;
    if (f.width_scale) cfg.width_scale = *f.width_scale;
    if (f.m_target) cfg.m_target = *f.m_target;
    if (f.epochs) cfg.epochs = *f.epochs;
    if (f.steps) cfg.steps = *f.steps;
    if (f.warmup) cfg.warmup = *f.warmup;
    if (f.lr) cfg.lr = *f.lr;
    if (f.batch) cfg.batch = *f.batch;
    if (f.early_ap50) cfg.early_ap50 = *f.early_ap50;
    if (f.eval_every) cfg.eval_every = *f.eval_every;
    if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    return config_from_json_text(config_to_json_text(cfg), "<resolved>");
}

std::vector<std::string> class_names(int n) {
    if (n == static_cast<int>(kDefectClassNames.size())) return kDefectClassNames;
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("c" + std::to_string(i));
    return names;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out_dir) {
    GroundTruth gt = synth_generate(spec, out_dir);
    std::printf("wrote %zu images (%zu boxes) to %s\n", gt.images.size(), gt.boxes.size(),
                out_dir.c_str());
    return 0;
}

int cmd_train(const ConfigFlags& flags) {
    RunConfig cfg = resolve_config(flags);
    TrainData data = load_train_data(cfg.data_dir);
    SpgnnModel model(cfg);
    Rng rng(cfg.seed);
    model.init(rng);
    std::printf("training on %zu images: %s, K=%d, sprpn=%s, lr=%g, seed=%llu\n",
                data.images.size(), fuse_mode_name(cfg.fusion).c_str(), cfg.k,
                cfg.sprpn ? "on" : "off", cfg.effective_lr(),
                static_cast<unsigned long long>(cfg.seed));
    TrainStats stats = train_run(cfg, model, data);
    if (!stats.trace.empty()) {
        const LossRow& last = stats.trace.back();
        std::printf("steps %d  first total %.4f  last total %.4f\n", last.step,
                    stats.trace.front().total, last.total);
    }
    if (stats.final_ap50 >= 0.0) std::printf("train-set AP50 %.4f\n", stats.final_ap50);
    if (stats.early_stopped) std::printf("early stop: AP50 target reached\n");
    std::printf("trace %s\ncheckpoint %s\n", stats.trace_path.c_str(),
                stats.last_checkpoint.c_str());
    if (stats.aborted) {
        std::fprintf(stderr, "error: non-finite loss, aborted after step %zu\n",
                     stats.trace.size());
        return 1;
    }
    return 0;
}

int cmd_detect(const ConfigFlags& flags, const std::string& ckpt, const std::string& image_path,
               const std::string& out_path, const std::string& overlay_path, double thresh,
               int image_id) {
    ConfigFlags f = flags;
    if (f.config_path.empty()) {
        fs::path sibling = fs::path(ckpt).parent_path() / "config.json";
        if (!fs::exists(sibling))
            throw std::invalid_argument("no --config given and " + sibling.string() +
                                        " does not exist");
        f.config_path = sibling.string();
    }
    RunConfig cfg = resolve_config(f);
    SpgnnModel model(cfg);
    load_checkpoint(ckpt, model.params());
    Tensor img = load_ppm(image_path);
    DetectMeta meta;
    std::vector<Detection> dets = detect_image(model, img, thresh, &meta);

    std::vector<DetectionBox> rows;
    for (const Detection& d : dets) rows.push_back({image_id, d.cls, d.box, d.score});
    save_detections(rows, out_path);
    nlohmann::json mj{{"image", image_path},
                     {"image_id", image_id},
                     {"width", meta.orig_w},
                     {"height", meta.orig_h},
                     {"padded_width", meta.padded_w},
                     {"padded_height", meta.padded_h},
                     {"score_threshold", thresh}};
    std::ofstream ms(out_path + ".meta.json", std::ios::binary);
    if (!ms) throw std::runtime_error("cannot write " + out_path + ".meta.json");
    ms << mj.dump(2) << "\n";

    if (!overlay_path.empty())
        save_ppm(overlay_path, render_overlay(img, dets, class_names(cfg.num_classes)));
    std::printf("%zu detections -> %s%s\n", dets.size(), out_path.c_str(),
                meta.padded() ? " (input was reflection-padded)" : "");
    return 0;
}

int cmd_eval(const std::string& dets_path, const std::string& gt_path,
             const std::string& out_path) {
    EvalReport rep = evaluate(load_detections(dets_path), load_ground_truth(gt_path));
    std::printf("mAP %.4f  AP50 %.4f  AP75 %.4f  AP_M %.4f  AP_L %.4f  mAR %.4f\n", rep.map,
                rep.ap50, rep.ap75, rep.ap_m, rep.ap_l, rep.mar);
    if (!out_path.empty()) {
        save_report(rep, out_path);
        std::printf("report -> %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_superpixel(const std::string& image_path, const std::string& out_path, int m_target,
                   double compactness, int iters) {
    Tensor img = load_ppm(image_path);
    SuperpixelMap sp = slic_segment(img, m_target, compactness, iters);
    const int h = img.dim(1), w = img.dim(2);
    save_pgm16(out_path, sp.labels, w, h);
    nlohmann::json j{{"image", image_path},         {"width", w},
                     {"height", h},                 {"superpixels", sp.count},
                     {"m_target", m_target},        {"compactness", compactness},
                     {"iters", iters}};
    std::ofstream js(out_path + ".json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot write " + out_path + ".json");
    js << j.dump(2) << "\n";
    std::printf("%d superpixels -> %s\n", sp.count, out_path.c_str());
    return 0;
}

int cmd_shapes(const ConfigFlags& flags, int size) {
    RunConfig cfg = resolve_config(flags);
    MsgcnConfig mc{3, cfg.depths, cfg.dims, cfg.k, cfg.heads};
    std::vector<ShapeCHW> stages = msgcn_stage_shapes(mc, size, size);
    std::vector<ShapeCHW> pyr = model_pyramid_shapes(cfg, size, size);
    ShapeCHW rec = recovered_map_shape(cfg, size, size);
    std::printf("input 3x%dx%d\n", size, size);
    for (size_t i = 0; i < stages.size(); ++i)
        std::printf("stage%zu  depth %d  %dx%dx%d\n", i + 1, cfg.depths[i], stages[i].c,
                    stages[i].h, stages[i].w);
    std::size_t total = 0;
    for (size_t i = 0; i < pyr.size(); ++i) {
        std::size_t n = static_cast<std::size_t>(pyr[i].h) * pyr[i].w * 3;
        total += n;
        std::printf("P%zu / S%zu  %dx%dx%d  anchors %zu\n", i + 2, i + 2, pyr[i].c, pyr[i].h,
                    pyr[i].w, n);
    }
    std::printf("recovered map %dx%dx%d\n", rec.c, rec.h, rec.w);
    std::printf("total anchors %zu\n", total);
    return 0;
}

int cmd_gradcheck(int seeds) {
    bool ok = true;
    for (const GradCaseResult& r : run_gradient_battery(seeds)) {
        bool pass = r.max_err <= 1e-4;
        ok = ok && pass;
        std::printf("%-12s max rel err %.3e  %s\n", r.name.c_str(), r.max_err,
                    pass ? "ok" : "FAIL");
    }
    if (!ok) {
        std::fprintf(stderr, "error: gradient check failed\n");
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superpixel-perception graph network defect detector"};
    app.require_subcommand(1);

    SyntheticSpec spec;
    std::string synth_out = "data";
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic defect dataset");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", spec.seed, "dataset seed");
    synth->add_option("--size", spec.size, "square image extent (multiple of 32)");
    synth->add_option("--count", spec.count, "number of images");

    ConfigFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "train on a dataset directory");
    add_config_flags(train, train_flags, true);

    ConfigFlags detect_flags;
    std::string ckpt, det_image, det_out = "detections.json", det_overlay;
    double det_thresh = 0.05;
    int det_image_id = 1;
    CLI::App* detect = app.add_subcommand("detect", "run inference on one image");
    detect->add_option("--checkpoint", ckpt, "weight file")->required();
    detect->add_option("--image", det_image, "input PPM")->required();
    detect->add_option("--out", det_out, "detections JSON path");
    detect->add_option("--overlay", det_overlay, "optional overlay PPM path");
    detect->add_option("--thresh", det_thresh, "score threshold");
    detect->add_option("--image-id", det_image_id, "image id written into the JSON");
    add_config_flags(detect, detect_flags, false);

    std::string eval_dets, eval_gt, eval_out;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score detections against ground truth");
    eval_cmd->add_option("--dets", eval_dets, "detections JSON")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth JSON")->required();
    eval_cmd->add_option("--out", eval_out, "report JSON path");

    std::string sp_image, sp_out = "labels.pgm";
    int sp_m = 196, sp_iters = 10;
    double sp_compact = 10.0;
    CLI::App* superpixel = app.add_subcommand("superpixel", "segment an image into superpixels");
    superpixel->add_option("--image", sp_image, "input PPM")->required();
    superpixel->add_option("--out", sp_out, "label map (16-bit PGM)");
    superpixel->add_option("--m", sp_m, "target superpixel count");
    superpixel->add_option("--compactness", sp_compact, "SLIC compactness");
    superpixel->add_option("--iters", sp_iters, "SLIC iterations");

    ConfigFlags shape_flags;
    int shapes_size = 896;
    CLI::App* shapes = app.add_subcommand("shapes", "print the pyramid shape table");
    shapes->add_option("--size", shapes_size, "square input extent");
    add_config_flags(shapes, shape_flags, false);

    int gc_seeds = 5;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gradcheck->add_option("--seeds", gc_seeds, "random instances per case");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(spec, synth_out);
        if (train->parsed()) return cmd_train(train_flags);
        if (detect->parsed())
            return cmd_detect(detect_flags, ckpt, det_image, det_out, det_overlay, det_thresh,
                              det_image_id);
        if (eval_cmd->parsed()) return cmd_eval(eval_dets, eval_gt, eval_out);
        if (superpixel->parsed())
            return cmd_superpixel(sp_image, sp_out, sp_m, sp_compact, sp_iters);
        if (shapes->parsed()) return cmd_shapes(shape_flags, shapes_size);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seeds);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
